"""Wavevectors, mismatches and the Gaussian-pump phase-matching function.

Conventions: the pump propagates along +z and the optic axis lies in the
x-z plane at ``crystal.orientation_theta_c`` from z. ``pm_intensity``
returns |f~(dk)|^2 in m^3; anything that needs |f|^2 multiplies by V.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .constants import default_constants
from .dispersion import Polarization, _check, _models, _n_eff, mode_axis_angle
from .quadrature import QuadratureSpec, integrate_1d

_C = default_constants().c


@dataclass(frozen=True)
class ModeSpec:
    """One optical mode: angular frequency, emission direction, polarization."""

    omega: float
    theta: float = 0.0
    phi: float = 0.0
    pol: Polarization = Polarization.EXTRAORDINARY

    def __post_init__(self):
        object.__setattr__(self, "pol", Polarization(self.pol))
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not 0 <= self.theta <= np.pi:
            raise ValueError("theta must lie in [0, pi]")
        if not 0 <= self.phi < 2 * np.pi:
            raise ValueError("phi must lie in [0, 2 pi)")

    @classmethod
    def from_wavelength(cls, wavelength, theta=0.0, phi=0.0, pol=Polarization.EXTRAORDINARY):
        return cls(2 * np.pi * _C / wavelength, theta, phi, pol)

    @classmethod
    def in_plane(cls, omega, signed_theta, pol=Polarization.EXTRAORDINARY):
        """Mode in the x-z plane; negative angles point towards -x."""
        if signed_theta < 0:
            return cls(omega, -signed_theta, np.pi, pol)
        return cls(omega, signed_theta, 0.0, pol)

    @property
    def wavelength(self):
        return 2 * np.pi * _C / self.omega


@dataclass(frozen=True)
class WaveVector:
    kx: float
    ky: float
    kz: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.kx, self.ky, self.kz])):
            raise ValueError("wavevector components must be finite")

    def __add__(self, other):
        return WaveVector(self.kx + other.kx, self.ky + other.ky, self.kz + other.kz)

    def __sub__(self, other):
        return WaveVector(self.kx - other.kx, self.ky - other.ky, self.kz - other.kz)

    def __neg__(self):
        return WaveVector(-self.kx, -self.ky, -self.kz)

    @property
    def norm(self):
        return float(np.sqrt(self.kx ** 2 + self.ky ** 2 + self.kz ** 2))

    def as_array(self):
        return np.array([self.kx, self.ky, self.kz])


@dataclass(frozen=True)
class BeamConfig:
    """Gaussian beam; ``duty_cycle`` of 1 means continuous wave."""

    wavelength: float
    avg_power: float
    waist_w0: float = 100e-6
    duty_cycle: float = 1.0
    pol: Polarization = Polarization.ORDINARY

    def __post_init__(self):
        object.__setattr__(self, "pol", Polarization(self.pol))
        if not (self.wavelength > 0 and self.waist_w0 > 0):
            raise ValueError("wavelength and waist must be positive")
        if not self.avg_power >= 0:
            raise ValueError("power must be non-negative")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError("duty cycle must lie in (0, 1]")

    @property
    def omega(self):
        return 2 * np.pi * _C / self.wavelength

    @property
    def peak_intensity(self):
        """P / (duty * pi * w0^2) in W/m^2."""
        return self.avg_power / (self.duty_cycle * np.pi * self.waist_w0 ** 2)

    def mode(self, theta=0.0, phi=0.0):
        return ModeSpec(self.omega, theta, phi, self.pol)


@dataclass(frozen=True)
class Mismatch:
    dk: WaveVector
    domega: float


def mode_index(mode, crystal):
    """Effective index of ``mode`` at its angle to the optic axis (``crystal.axis_model``)."""
    for m in _models(crystal, mode.pol):
        _check(m, mode.omega)
    psi = mode_axis_angle(crystal, mode.theta, mode.phi)
    return float(_n_eff(crystal, mode.pol, psi, mode.omega))


def mode_to_wavevector(mode, crystal, constants=None):
    """Wavevector of length n_eff omega / c along (theta, phi)."""
    c = _C if constants is None else constants.c
    k = mode_index(mode, crystal) * mode.omega / c
    st = np.sin(mode.theta)
    return WaveVector(k * st * np.cos(mode.phi), k * st * np.sin(mode.phi), k * np.cos(mode.theta))


def mismatch(pump, daughters, crystal, constants=None):
    """dk = k_p - sum k_i and domega = omega_p - sum omega_i."""
    dk = mode_to_wavevector(pump, crystal, constants)
    dw = pump.omega
    for d in daughters:
        dk = dk - mode_to_wavevector(d, crystal, constants)
        dw -= d.omega
    return Mismatch(dk, dw)


def interaction_volume(waist_w0, length_L):
    """V = pi w0^2 L for the Gaussian pump of exp(-r^2/w0^2) profile."""
    return np.pi * waist_w0 ** 2 * length_L


def _sinc2(x):
    return np.sinc(np.asarray(x) / np.pi) ** 2


def pm_shape(dkx, dky, dkz, waist_w0, length_L):
    """Dimensionless factor exp(-(dkx^2+dky^2) w0^2/4) sinc^2(dkz L/2); broadcasts."""
    return np.exp(-(np.asarray(dkx) ** 2 + np.asarray(dky) ** 2) * waist_w0 ** 2 / 4) \
        * _sinc2(np.asarray(dkz) * length_L / 2)


def pm_intensity(dk, waist_w0, length_L):
    """|f~(dk)|^2 = V exp(-(dkx^2+dky^2) w0^2 / 4) sinc^2(dkz L / 2), in m^3."""
    if not (waist_w0 > 0 and length_L > 0):
        raise ValueError("waist and length must be positive")
    return float(interaction_volume(waist_w0, length_L)
                 * pm_shape(dk.kx, dk.ky, dk.kz, waist_w0, length_L))


def effective_waist(pump_waist, seed_waist):
    """1/w_eff^2 = 1/w_p^2 + 1/w_s^2."""
    return (pump_waist ** -2 + seed_waist ** -2) ** -0.5


def seeded_pm_intensity(dk, pump_waist, seed_waist, length_L):
    """Seeded |f~_s|^2 with the product waist w_eff and volume pi w_eff^2 L."""
    return pm_intensity(dk, effective_waist(pump_waist, seed_waist), length_L)


def pm_norm_integral(waist_w0, length_L, spec=QuadratureSpec(rel_tol=1e-10), lobes=2000):
    """Integral of pm_intensity over all dk-space (dimensionless).

    Should equal (2 pi)^3, the weight of the delta-function limit. The
    transverse Gaussian is integrated radially to 40 e-folds. The sinc^2
    factor is integrated lobe by lobe out to
    ``lobes`` zeros with the analytic 1/(2X) tail added beyond.
    """
    if not (waist_w0 > 0 and length_L > 0):
        raise ValueError("waist and length must be positive")
    # radial transverse integral: 2 pi int exp(-q^2 w^2/4) q dq
    qmax = 2 * np.sqrt(40.0) / waist_w0
    radial, _ = integrate_1d(lambda q: 2 * np.pi * q * np.exp(-q * q * waist_w0 ** 2 / 4),
                             0.0, qmax, spec, points=np.linspace(0, qmax, 9)[1:-1])
    # longitudinal: u = dkz L / 2, int_R sinc^2(u) du = 2 int_0^inf
    xmax = lobes * np.pi
    body, _ = integrate_1d(lambda u: _sinc2(u), 0.0, xmax, spec,
                           points=np.pi * np.arange(1, lobes))
    tail = 1.0 / (2 * xmax)
    longitudinal = 2 * (body + tail) * 2 / length_L
    return radial * longitudinal * interaction_volume(waist_w0, length_L)


def check_rayleigh(pump, length_L):
    """Warn when the pump Rayleigh range is not well above the crystal length."""
    zr = np.pi * pump.waist_w0 ** 2 / pump.wavelength
    if zr < 10 * length_L:
        warnings.warn(f"pump Rayleigh range {zr:.3g} m is below 10 L = {10 * length_L:.3g} m; "
                      "the collimated-beam phase-matching function is inaccurate",
                      RuntimeWarning, stacklevel=2)
        return False
    return True
