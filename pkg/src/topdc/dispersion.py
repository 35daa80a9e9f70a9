"""Refractive index and group velocity for a uniaxial crystal.

The shipped default is rutile (TiO2) with the one-pole Sellmeier fit of
J. R. DeVore, J. Opt. Soc. Am. 41, 416 (1951)::

    n^2 = A + B / (lambda^2 - C),    lambda in micrometres

    n_o: A = 5.913, B = 0.2441, C = 0.0803
    n_e: A = 7.197, B = 0.3322, C = 0.0843

The published fit covers 0.43-1.53 um. The shipped validity window is
widened to 0.43-3.0 um so that unregistered daughter photons beyond
1.53 um can be integrated over; the one-pole form has no infrared pole
and extrapolates smoothly. Pass a narrower ``valid_range`` to restrict.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .constants import default_constants
from .errors import OutOfValidityRange

_C = default_constants().c

# relative frequency step of the central difference used for dn/domega
FD_REL_STEP = 1e-6


class Polarization(str, Enum):
    ORDINARY = "ordinary"
    EXTRAORDINARY = "extraordinary"


class AxisModel(str, Enum):
    """How the angle between a daughter mode and the optic axis is evaluated.

    ``azimuthal_mean``: cos psi = cos theta_c cos theta, the azimuthal
    average of the direction cosine (even in theta, smooth on axis).
    ``principal_plane``: psi = |theta_c - theta|, the mode taken in the
    plane containing the axis, tilted towards it.
    ``exact``: the full 3-D angle from (theta, phi).
    """

    AZIMUTHAL_MEAN = "azimuthal_mean"
    PRINCIPAL_PLANE = "principal_plane"
    EXACT = "exact"


class DispersionForm(str, Enum):
    SELLMEIER_ONE_POLE = "sellmeier_one_pole"
    CONSTANT = "constant"


@dataclass(frozen=True)
class DispersionModel:
    """One polarization of one material.

    Parameters
    ----------
    form : DispersionForm
        ``sellmeier_one_pole`` takes coefficients ``(A, B, C)`` with
        wavelength in micrometres; ``constant`` takes ``(n,)``.
    coefficients : tuple of float
    valid_range : (float, float)
        Wavelength window in metres.
    name : str
    """

    form: DispersionForm
    coefficients: tuple
    valid_range: tuple = (0.0, np.inf)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "form", DispersionForm(self.form))
        object.__setattr__(self, "coefficients", tuple(float(x) for x in self.coefficients))
        lo, hi = (float(x) for x in self.valid_range)
        if not 0 <= lo < hi:
            raise ValueError(f"invalid wavelength window {self.valid_range!r}")
        object.__setattr__(self, "valid_range", (lo, hi))
        need = {DispersionForm.SELLMEIER_ONE_POLE: 3, DispersionForm.CONSTANT: 1}[self.form]
        if len(self.coefficients) != need:
            raise ValueError(f"{self.form.value} needs {need} coefficients")
        if self.form is DispersionForm.CONSTANT and not self.coefficients[0] > 1:
            raise ValueError("constant index must exceed 1")

    @property
    def omega_range(self):
        """Angular-frequency window (rad/s) equivalent to ``valid_range``."""
        lo, hi = self.valid_range
        return (2 * np.pi * _C / hi if np.isfinite(hi) else 0.0,
                2 * np.pi * _C / lo if lo > 0 else np.inf)


def constant_model(n, name="constant"):
    return DispersionModel(DispersionForm.CONSTANT, (n,), name=name)


RUTILE_VALID_RANGE = (430e-9, 3000e-9)

RUTILE_ORDINARY = DispersionModel(
    DispersionForm.SELLMEIER_ONE_POLE, (5.913, 0.2441, 0.0803),
    RUTILE_VALID_RANGE, name="rutile n_o (DeVore 1951)")
RUTILE_EXTRAORDINARY = DispersionModel(
    DispersionForm.SELLMEIER_ONE_POLE, (7.197, 0.3322, 0.0843),
    RUTILE_VALID_RANGE, name="rutile n_e (DeVore 1951)")


@dataclass(frozen=True)
class CrystalConfig:
    """Uniaxial crystal slab.

    ``orientation_theta_c`` is the angle between the optic axis and the
    pump propagation direction z; the axis lies in the x-z plane.
    ``axis_model`` selects how daughter modes see the axis (see AxisModel).
    """

    length_L: float = 5e-3
    orientation_theta_c: float = np.radians(68.24)
    chi3_eff: float = 2.1e-20
    disp_o: DispersionModel = field(default=RUTILE_ORDINARY)
    disp_e: DispersionModel = field(default=RUTILE_EXTRAORDINARY)
    axis_model: AxisModel = AxisModel.AZIMUTHAL_MEAN

    def __post_init__(self):
        object.__setattr__(self, "axis_model", AxisModel(self.axis_model))
        if not self.length_L > 0:
            raise ValueError("crystal length must be positive")
        if not 0 <= self.orientation_theta_c <= np.pi / 2:
            raise ValueError("orientation must lie in [0, pi/2]")
        if not self.chi3_eff > 0:
            raise ValueError("chi3_eff must be positive")

    def with_orientation(self, theta_c):
        return replace(self, orientation_theta_c=float(theta_c))

    @property
    def omega_window(self):
        """Frequencies where both polarizations are valid."""
        a = self.disp_o.omega_range
        b = self.disp_e.omega_range
        return max(a[0], b[0]), min(a[1], b[1])


def rutile_crystal(**kw):
    return CrystalConfig(**kw)


# --- vectorized kernels (no range checks) ---------------------------------

def _inv_n2(model, omega):
    """1/n^2 for an array of angular frequencies."""
    omega = np.asarray(omega, dtype=float)
    if model.form is DispersionForm.CONSTANT:
        return np.full(omega.shape, model.coefficients[0] ** -2)
    A, B, C = model.coefficients
    lam_um = 2e6 * np.pi * _C / omega
    return 1.0 / (A + B / (lam_um * lam_um - C))


def _inv_n2_slope(model, omega):
    """1/n^2 and its analytic omega-derivative (Newton slopes only)."""
    omega = np.asarray(omega, dtype=float)
    if model.form is DispersionForm.CONSTANT:
        return np.full(omega.shape, model.coefficients[0] ** -2), np.zeros(omega.shape)
    A, B, C = model.coefficients
    lam_um = 2e6 * np.pi * _C / omega
    d = lam_um * lam_um - C
    n2 = A + B / d
    # dn2/domega = dn2/dlam * dlam/domega, dlam/domega = -lam/omega
    dn2 = 2 * B * lam_um * lam_um / (d * d * omega)
    return 1.0 / n2, -dn2 / (n2 * n2)


def _n_eff(crystal, pol, psi, omega):
    """Index at angle ``psi`` to the optic axis; arrays broadcast."""
    if Polarization(pol) is Polarization.ORDINARY:
        return _inv_n2(crystal.disp_o, omega) ** -0.5 + 0 * np.asarray(psi, dtype=float)
    c2 = np.cos(psi) ** 2
    u = c2 * _inv_n2(crystal.disp_o, omega) + (1 - c2) * _inv_n2(crystal.disp_e, omega)
    return u ** -0.5


def _group_index(crystal, pol, psi, omega):
    """n + omega dn/domega by central difference at relative step FD_REL_STEP."""
    omega = np.asarray(omega, dtype=float)
    h = FD_REL_STEP * omega
    n = _n_eff(crystal, pol, psi, omega)
    dn = (_n_eff(crystal, pol, psi, omega + h) - _n_eff(crystal, pol, psi, omega - h)) / (2 * h)
    return n, n + omega * dn


def _check(model, omega, margin=0.0):
    lo, hi = model.omega_range
    w = np.asarray(omega, dtype=float)
    bad = ~((w * (1 - margin) >= lo) & (w * (1 + margin) <= hi))
    if np.any(bad):
        lam = 2 * np.pi * _C / np.atleast_1d(w)[np.atleast_1d(bad)][0]
        a, b = model.valid_range
        raise OutOfValidityRange(
            f"{model.name or model.form.value}: wavelength {lam * 1e9:.6g} nm "
            f"outside [{a * 1e9:.6g}, {b * 1e9:.6g}] nm")


def _models(crystal, pol):
    if Polarization(pol) is Polarization.ORDINARY:
        return (crystal.disp_o,)
    return (crystal.disp_o, crystal.disp_e)


def _as_result(x):
    return float(x) if np.ndim(x) == 0 else x


# --- public operations -----------------------------------------------------

def index(model, omega):
    """Refractive index of ``model`` at angular frequency ``omega`` (rad/s).

    Raises
    ------
    OutOfValidityRange
        If 2 pi c / omega lies outside ``model.valid_range``.
    """
    _check(model, omega)
    return _as_result(_inv_n2(model, omega) ** -0.5)


def effective_index(crystal, pol, angle_to_axis, omega):
    """Index seen by a wave at ``angle_to_axis`` (rad) from the optic axis.

    Ordinary waves see n_o. Extraordinary waves follow the index ellipse
    1/n^2 = cos^2/n_o^2 + sin^2/n_e^2.
    """
    psi = np.asarray(angle_to_axis, dtype=float)
    if np.any((psi < 0) | (psi > np.pi)):
        raise ValueError("angle_to_axis must lie in [0, pi]")
    for m in _models(crystal, pol):
        _check(m, omega)
    return _as_result(_n_eff(crystal, pol, psi, omega))


def group_velocity(crystal, pol, angle_to_axis, omega, constants=None):
    """Group velocity c / (n + omega dn/domega) in m/s.

    The derivative is a central difference with relative step
    ``FD_REL_STEP``; the whole stencil must lie inside the window.
    """
    c = _C if constants is None else constants.c
    psi = np.asarray(angle_to_axis, dtype=float)
    for m in _models(crystal, pol):
        _check(m, omega, margin=FD_REL_STEP)
    return _as_result(c / _group_index(crystal, pol, psi, omega)[1])


def angle_to_axis(theta, phi, theta_c):
    """Angle between direction (theta, phi) and an optic axis tilted by
    ``theta_c`` from z towards +x."""
    cosang = (np.sin(theta) * np.cos(phi) * np.sin(theta_c)
              + np.cos(theta) * np.cos(theta_c))
    return np.arccos(np.clip(cosang, -1.0, 1.0))


def mode_axis_angle(crystal, theta, phi=0.0):
    """Angle to the optic axis of a mode at polar angle ``theta`` under
    ``crystal.axis_model``. Signed in-plane angles are accepted by the
    azimuthally symmetric models."""
    tc = crystal.orientation_theta_c
    model = crystal.axis_model
    if model is AxisModel.AZIMUTHAL_MEAN:
        return np.arccos(np.clip(np.cos(tc) * np.cos(theta), -1.0, 1.0))
    if model is AxisModel.PRINCIPAL_PLANE:
        return np.abs(tc - np.abs(theta))
    return angle_to_axis(theta, phi, tc)
