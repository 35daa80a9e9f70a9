"""Physical constants passed explicitly to every rate calculation.

Rates never read module-level constants; they take a ``PhysicalConstants``
so that e.g. the Planck-constant scaling of the spontaneous rates can be
checked by a plain function call with a rescaled ``hbar``.
"""

from dataclasses import dataclass, replace

from scipy import constants as _codata


@dataclass(frozen=True)
class PhysicalConstants:
    """SI values of hbar (J s), eps0 (F/m) and c (m/s)."""

    hbar: float = _codata.hbar
    eps0: float = _codata.epsilon_0
    c: float = _codata.c

    def __post_init__(self):
        for name in ("hbar", "eps0", "c"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    def scaled(self, **factors):
        """Return a copy with the named constants multiplied by the given factors."""
        return replace(self, **{k: getattr(self, k) * f for k, f in factors.items()})


def default_constants():
    """CODATA 2018 values."""
    return PhysicalConstants()
