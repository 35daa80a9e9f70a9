"""Coupling constants, rate prefactors, differential densities and rates.

Specialized to third-order down-conversion (o -> eee) pumped along z.
Unseeded rates carry one power of hbar through ``r3_prefactor``; seeded
rates carry none. Every operation takes a ``PhysicalConstants``.

Band volumes ``D`` are k-space volumes obtained from frequency-angle
windows via dk = n^2 omega^2 / (c^2 v) domega dOmega. Delta functions
are consumed analytically:

* broadband: |f~|^2 -> (2 pi)^3 delta^3(dk), then the energy delta by the
  contour line integral (see ``contour``);
* narrowband: the energy delta is absorbed by the frequency width of the
  last registered band, or by |k| of the unregistered mode.

Pulsed beams contribute time-averaged rates: duty cycle times the rate at
peak intensities.
"""

import json
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from math import factorial

import numpy as np

from .constants import default_constants
from .contour import Band, Closure, contour_exists, trace_contour
from .dispersion import Polarization, _check, _group_index, _models, _n_eff, mode_axis_angle
from .errors import BandsOffShell, MismatchedCoupling, SeedMissing
from .geometry import (BeamConfig, ModeSpec, effective_waist, interaction_volume, pm_shape)


class RegimeWarning(UserWarning):
    """Band widths do not fit the assumed detection regime."""


class Regime(str, Enum):
    BROADBAND = "broadband"
    NARROWBAND = "narrowband"


class FieldKind(str, Enum):
    BROADBAND_VACUUM = "broadband_vacuum"
    NARROWBAND_VACUUM = "narrowband_vacuum"
    SEED = "seed"
    ATOMIC = "atomic"


@dataclass(frozen=True)
class CouplingGamma:
    order_n: int
    value: float
    seeded: bool = False

    def __post_init__(self):
        if self.order_n < 2:
            raise ValueError("order must be >= 2")
        if not np.isfinite(self.value):
            raise ValueError("coupling must be finite")


@dataclass(frozen=True)
class EffectiveField:
    kind: FieldKind
    value_sq: float

    def __post_init__(self):
        object.__setattr__(self, "kind", FieldKind(self.kind))
        if not self.value_sq >= 0:
            raise ValueError("squared field must be non-negative")


@dataclass(frozen=True)
class DetectionBand:
    """Frequency window, signed in-plane angle window and efficiency.

    Angles are polar angles from the pump axis, signed in the plane of
    the azimuthally symmetric model; (-a, a) is a cone of half-angle a.
    """

    omega_center: float
    omega_halfwidth: float
    theta_min: float
    theta_max: float
    efficiency_eta: float = 1.0

    def __post_init__(self):
        if not self.omega_halfwidth >= 0:
            raise ValueError("omega_halfwidth must be non-negative")
        if not self.omega_center > self.omega_halfwidth:
            raise ValueError("band must lie at positive frequency")
        if not self.theta_min < self.theta_max:
            raise ValueError("theta_min must be below theta_max")
        if not 0 <= self.efficiency_eta <= 1:
            raise ValueError("efficiency must lie in [0, 1]")

    @classmethod
    def from_wavelengths(cls, lam_min, lam_max, theta_min, theta_max, eta=1.0, constants=None):
        """Band from a wavelength window (m) and angle window (rad)."""
        c = default_constants().c if constants is None else constants.c
        w_hi, w_lo = 2 * np.pi * c / lam_min, 2 * np.pi * c / lam_max
        return cls(0.5 * (w_hi + w_lo), 0.5 * (w_hi - w_lo), theta_min, theta_max, eta)

    @property
    def omega_min(self):
        return self.omega_center - self.omega_halfwidth

    @property
    def omega_max(self):
        return self.omega_center + self.omega_halfwidth

    @property
    def theta_center(self):
        return 0.5 * (self.theta_min + self.theta_max)

    @property
    def symmetric(self):
        return np.isclose(self.theta_min, -self.theta_max, rtol=0, atol=1e-15)

    def as_contour_band(self):
        return Band(self.omega_min, self.omega_max, self.theta_min, self.theta_max)

    def center_mode(self):
        return ModeSpec.in_plane(self.omega_center, self.theta_center)

    def to_dict(self):
        return asdict(self)


@dataclass
class RateReport:
    """Singles, doubles and triples rates (1/s) with a parameter echo."""

    regime: Regime
    seeded: bool
    singles_hz: float
    doubles_hz: float
    triples_hz: float = None
    underestimate: bool = False
    efficiencies_applied: bool = False
    parameters_echo: dict = field(default_factory=dict)

    def __post_init__(self):
        self.regime = Regime(self.regime)
        if self.seeded and self.triples_hz is not None:
            raise ValueError("seeded reports carry no triples rate")
        for v in (self.singles_hz, self.doubles_hz, self.triples_hz):
            if v is not None and not v >= 0:
                raise ValueError("rates must be non-negative")

    def to_dict(self):
        d = {"regime": self.regime.value, "seeded": self.seeded,
             "singles_hz": self.singles_hz, "doubles_hz": self.doubles_hz}
        if not self.seeded:
            d["triples_hz"] = self.triples_hz
        d["underestimate"] = self.underestimate
        d["efficiencies_applied"] = self.efficiencies_applied
        d["parameters_echo"] = self.parameters_echo
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, default=_json_default, **kw)

    def detected(self, bands):
        """Copy with per-detector efficiencies applied multiplicatively.

        ``bands`` are in report order: singles use the first efficiency,
        doubles the first two, triples all three.
        """
        eta = [b.efficiency_eta for b in bands]
        return RateReport(self.regime, self.seeded, self.singles_hz * eta[0],
                          self.doubles_hz * eta[0] * eta[1],
                          None if self.triples_hz is None else self.triples_hz * np.prod(eta[:3]),
                          self.underestimate, True, dict(self.parameters_echo))


def _json_default(o):
    if isinstance(o, Enum):
        return o.value
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


# --- couplings and prefactors ---------------------------------------------

def coupling_gamma(n, chi_n, pump_intensity, n_p, constants=None):
    """|gamma^(n)| = n! chi / 2^n sqrt(2 I_p eps0 / (c n_p))."""
    k = default_constants() if constants is None else constants
    value = factorial(n) * chi_n / 2 ** n * np.sqrt(2 * pump_intensity * k.eps0 / (k.c * n_p))
    return CouplingGamma(n, float(value), False)


def coupling_gamma_seeded(n, chi_n, pump_intensity, seed_intensity, n_p, n_s, constants=None):
    """|gamma_s^(n)| = n! chi / 2^n sqrt(4 I_s I_p / (c^2 n_p n_s))."""
    k = default_constants() if constants is None else constants
    value = factorial(n) * chi_n / 2 ** n * np.sqrt(
        4 * seed_intensity * pump_intensity / (k.c ** 2 * n_p * n_s))
    return CouplingGamma(n, float(value), True)


def r3_prefactor(gamma3, V, constants=None):
    """R^(3) = hbar V gamma^2 / (8 (2 pi)^8 eps0^3 c^3)."""
    k = default_constants() if constants is None else constants
    if gamma3.seeded or gamma3.order_n != 3:
        raise MismatchedCoupling("r3_prefactor needs an unseeded third-order coupling")
    return k.hbar * V * gamma3.value ** 2 / (8 * (2 * np.pi) ** 8 * k.eps0 ** 3 * k.c ** 3)


def rs3_prefactor(gamma_s, V_s, constants=None):
    """R_s^(3) = V_s gamma_s^2 / (4 (2 pi)^5 eps0^2 c^2)."""
    k = default_constants() if constants is None else constants
    if not gamma_s.seeded or gamma_s.order_n != 3:
        raise MismatchedCoupling("rs3_prefactor needs a seeded third-order coupling")
    return V_s * gamma_s.value ** 2 / (4 * (2 * np.pi) ** 5 * k.eps0 ** 2 * k.c ** 2)


def pump_index(pump, crystal):
    for m in _models(crystal, pump.pol):
        _check(m, pump.omega)
    return float(_n_eff(crystal, pump.pol, crystal.orientation_theta_c, pump.omega))


def seed_index(seed, crystal):
    for m in _models(crystal, seed.pol):
        _check(m, seed.omega)
    return float(_n_eff(crystal, seed.pol, crystal.orientation_theta_c, seed.omega))


def unseeded_prefactor(pump, crystal, constants=None):
    """Time-averaged R^(3): duty cycle times R^(3) at peak intensity."""
    n_p = pump_index(pump, crystal)
    gamma = coupling_gamma(3, crystal.chi3_eff, pump.peak_intensity, n_p, constants)
    V = interaction_volume(pump.waist_w0, crystal.length_L)
    return pump.duty_cycle * r3_prefactor(gamma, V, constants)


def seeded_prefactor(seed, pump, crystal, constants=None):
    """Time-averaged R_s^(3) for synchronous pulses at the pump duty cycle."""
    if seed is None:
        raise SeedMissing("seeded calculation requires a seed beam")
    n_p = pump_index(pump, crystal)
    n_s = seed_index(seed, crystal)
    gamma = coupling_gamma_seeded(3, crystal.chi3_eff, pump.peak_intensity,
                                  seed.peak_intensity, n_p, n_s, constants)
    V_s = interaction_volume(effective_waist(pump.waist_w0, seed.waist_w0), crystal.length_L)
    return pump.duty_cycle * rs3_prefactor(gamma, V_s, constants)


def seed_field_sq(seed, crystal, constants=None):
    """|E_s|^2 = 2 I_s / (eps0 n_s c) at peak seed intensity."""
    k = default_constants() if constants is None else constants
    n_s = seed_index(seed, crystal)
    return EffectiveField(FieldKind.SEED, 2 * seed.peak_intensity / (k.eps0 * n_s * k.c))


def order_reduction_ratio(effective_field, atomic_field_Ea, n):
    """n^2 / (32 pi^3) <E^2> / E_a^2."""
    if not atomic_field_Ea > 0:
        raise ValueError("atomic field must be positive")
    return n ** 2 / (32 * np.pi ** 3) * effective_field.value_sq / atomic_field_Ea ** 2


# --- band measures -----------------------------------------------------------

def _signed(mode):
    """Signed in-plane angle of a mode (negative when it points towards -x)."""
    return -mode.theta if np.cos(mode.phi) < 0 else mode.theta


def _psi_sym(crystal, theta):
    return mode_axis_angle(crystal, theta)


def k_density(crystal, omega, theta, constants=None):
    """n^2 omega^2 / (c^2 v), the radial k-measure per unit frequency."""
    c = default_constants().c if constants is None else constants.c
    n, ng = _group_index(crystal, "extraordinary", _psi_sym(crystal, theta), omega)
    return n * n * omega * omega * ng / c ** 3


def _angle_pieces(band):
    """Split a signed angle window at zero so |sin| is smooth on each piece."""
    if band.theta_min < 0 < band.theta_max:
        return [(band.theta_min, 0.0), (0.0, band.theta_max)]
    return [(band.theta_min, band.theta_max)]


_GL16 = np.polynomial.legendre.leggauss(16)


def _gl(a, b, rule=_GL16):
    x, w = rule
    return 0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w


def band_k_volume(band, crystal, constants=None):
    """k-space volume D of a band: int n^2 w^2/(c^2 v) dw * pi int |sin t| dt."""
    if band.omega_halfwidth == 0:
        return 0.0
    for m in _models(crystal, "extraordinary"):
        _check(m, np.array([band.omega_min, band.omega_max]))
    w, ww = _gl(band.omega_min, band.omega_max)
    total = 0.0
    for a, b in _angle_pieces(band):
        t, wt = _gl(a, b)
        kd = k_density(crystal, w[:, None], t[None, :], constants)
        total += np.pi * np.sum(ww[:, None] * wt[None, :] * kd * np.abs(np.sin(t))[None, :])
    return float(total)


def band_k_per_omega(band, crystal, constants=None):
    """Radial k-measure at the band centre times its solid angle."""
    w = band.omega_center
    total = 0.0
    for a, b in _angle_pieces(band):
        t, wt = _gl(a, b)
        total += np.pi * np.sum(wt * k_density(crystal, w, t, constants) * np.abs(np.sin(t)))
    return float(total)


# --- differential densities ---------------------------------------------------

@dataclass(frozen=True)
class ContourGrid:
    """Resolution of the contour tracing used by density evaluations."""

    theta_max: float = np.radians(30.0)
    n_theta: int = 121
    n_omega: int = 181
    coarse: tuple = (61, 121)
    jacobian: str = "exact"


def _closure_for(mode3, pump, crystal, constants, signed_theta3=None):
    th3 = _signed(mode3) if signed_theta3 is None else signed_theta3
    return Closure(crystal, pump.omega, mode3.omega, th3, constants, pump.pol)


def _contour_measures(closure, grid, restrictions):
    m, curves = trace_contour(closure, grid.theta_max, grid.n_theta, grid.n_omega,
                              jacobian=grid.jacobian, coarse=grid.coarse,
                              restrictions=restrictions)
    clipped = any(cv["clipped"] for cv in curves)
    return m, clipped


def singles_density(mode3, pump, crystal, constants=None, grid=ContourGrid(),
                    restrictions=None, signed_theta3=None):
    """Singles rate per unit k_3-volume with modes 1 and 2 integrated out.

    (2 pi)^3 R^(3) (omega_3 v_3 / n_3) times the contour measure, which
    is (pi / c^2) times the line integral over the mode-2 contour of
    omega~_1 omega_2^3 v~_1 n_2 / n~_1 |sin theta_2| / |grad g|.

    ``restrictions`` (a list of (mode2 Band, mode1 Band) pairs) returns an
    array with one density per pair instead of a float.
    """
    closure = _closure_for(mode3, pump, crystal, constants, signed_theta3)
    R = unseeded_prefactor(pump, crystal, constants)
    pref = (2 * np.pi) ** 3 * R * closure.w3 * closure.v3 / closure.n3
    m, _ = _contour_measures(closure, grid, restrictions or [(None, None)])
    out = pref * np.asarray(m)
    return out if restrictions is not None else float(out[0])


def seeded_contour_rate(seed, pump, crystal, constants=None, grid=ContourGrid(),
                        restrictions=None):
    """Broadband seeded pair rate (2 pi)^3 R_s times the contour measure at k_3 = k_s."""
    closure = Closure(crystal, pump.omega, seed.omega, 0.0, constants, pump.pol)
    Rs = seeded_prefactor(seed, pump, crystal, constants)
    m, clipped = _contour_measures(closure, grid, restrictions or [(None, None)])
    return (2 * np.pi) ** 3 * Rs * np.asarray(m), clipped


def seeded_pair_density(mode2, seed, pump, crystal, constants=None, signed_theta2=None):
    """Seeded pair rate per unit k_2-volume with mode 1 integrated out.

    R_s (omega_2 v_2 / n_2) (omega~_1 / n~_1) (4 pi / w_eff^2) |f~_s(dk)|^2,
    where omega~_1 = omega_p - omega_2 - omega_s, k_1 is parallel to
    K = k_p - k_2 - k_s and dk = K - k_1. The seed propagates along z.
    Broadcasts over arrays of ``signed_theta2`` and ``mode2`` frequency
    when ``mode2`` is a (omega, theta) tuple of arrays.
    """
    if seed is None:
        raise SeedMissing("seeded density requires a seed beam")
    k = default_constants() if constants is None else constants
    if isinstance(mode2, ModeSpec):
        w2 = mode2.omega
        t2 = _signed(mode2) if signed_theta2 is None else signed_theta2
    else:
        w2, t2 = mode2
    w2, t2 = np.broadcast_arrays(np.asarray(w2, float), np.asarray(t2, float))
    closure = Closure(crystal, pump.omega, seed.omega, 0.0, constants, pump.pol)
    Rs = seeded_prefactor(seed, pump, crystal, constants)
    weff = effective_waist(pump.waist_w0, seed.waist_w0)
    Vs = interaction_volume(weff, crystal.length_L)

    n2, ng2 = _group_index(crystal, "extraordinary", _psi_sym(crystal, t2), w2)
    k2 = n2 * w2 / k.c
    kx = -(k2 * np.sin(t2) + closure.k3 * np.sin(closure.t3))
    kz = closure.kp - k2 * np.cos(t2) - closure.k3 * np.cos(closure.t3)
    K = np.hypot(kx, kz)
    w1 = pump.omega - w2 - seed.omega
    lo, hi = crystal.omega_window
    inside = (w1 >= lo) & (w1 <= hi) & (w2 >= lo) & (w2 <= hi)
    w1c = np.clip(w1, lo, hi)
    n1 = _n_eff(crystal, "extraordinary", _psi_sym(crystal, np.arctan2(kx, kz)), w1c)
    dk = K - n1 * w1c / k.c
    shape = pm_shape(dk * kx / K, 0.0, dk * kz / K, weff, crystal.length_L)
    dens = Rs * (w2 * k.c / ng2 / n2) * (w1c / n1) * (4 * np.pi / weff ** 2) * Vs * shape
    dens = np.where(inside, dens, 0.0)
    return float(dens) if dens.ndim == 0 else dens


# --- broadband rates ------------------------------------------------------------

@dataclass(frozen=True)
class BandQuadrature:
    """Quadrature over a detection band in (omega_3, theta_3)."""

    omega_panels: int = 4
    omega_nodes: int = 6
    theta_scan: int = 21
    theta_nodes: int = 16
    bisect_steps: int = 14


def _support_intervals(exists, a, b, scan, steps):
    """Sub-intervals of [a, b] where ``exists`` holds, edges bisected."""
    x = np.linspace(a, b, scan)
    on = np.array([exists(t) for t in x])
    edges = []
    for i in range(len(x) - 1):
        if on[i] != on[i + 1]:
            lo, hi = x[i], x[i + 1]
            for _ in range(steps):
                mid = 0.5 * (lo + hi)
                if exists(mid) == on[i]:
                    lo = mid
                else:
                    hi = mid
            edges.append(lo if on[i] else hi)
    pts = [a] + edges + [b]
    starts_on = on[0]
    out = []
    for j in range(len(pts) - 1):
        if (j % 2 == 0) == starts_on:
            out.append((pts[j], pts[j + 1]))
    return out


def _integrate_band(value, exists, band, crystal, constants, quad, symmetric):
    """int over the band of value(omega, theta) * k_density * pi |sin theta|.

    ``value`` returns an array; the theta integral on each support
    interval uses the substitution theta = a + (b - a)(1 - cos pi s)/2,
    which absorbs square-root behaviour at support edges.
    """
    x, w = np.polynomial.legendre.leggauss(quad.omega_nodes)
    edges = np.linspace(band.omega_min, band.omega_max, quad.omega_panels + 1)
    s, ws = np.polynomial.legendre.leggauss(quad.theta_nodes)
    s, ws = 0.5 * (s + 1), 0.5 * ws
    pieces = [(0.0, band.theta_max)] if symmetric else _angle_pieces(band)
    factor = 2.0 if symmetric else 1.0
    total = None
    for p0, p1 in zip(edges[:-1], edges[1:]):
        for om, wo in zip(0.5 * (p0 + p1) + 0.5 * (p1 - p0) * x, 0.5 * (p1 - p0) * w):
            for a, b in pieces:
                for lo, hi in _support_intervals(lambda t: exists(om, t), a, b,
                                                 quad.theta_scan, quad.bisect_steps):
                    th = lo + (hi - lo) * (1 - np.cos(np.pi * s)) / 2
                    jac = (hi - lo) * np.pi * np.sin(np.pi * s) / 2
                    for t, wt in zip(th, ws * jac):
                        v = value(om, t) * k_density(crystal, om, t, constants) \
                            * np.pi * abs(np.sin(t)) * wt * wo * factor
                        total = v if total is None else total + v
    return total


def _check_broadband(bands, crystal, pump):
    L, w0 = crystal.length_L, pump.waist_w0
    for b in bands:
        if b.omega_halfwidth == 0:
            continue
        kx_width = b.omega_center * 2.2 / 3e8 * (b.theta_max - b.theta_min)
        if kx_width < 10 * (4 / w0):
            warnings.warn("band angular width is not broad compared with the phase-matching "
                          "width; broadband formulas may overestimate", RegimeWarning, stacklevel=3)
            return


def _echo(**kw):
    out = {}
    for k, v in kw.items():
        if hasattr(v, "__dataclass_fields__"):
            out[k] = asdict(v)
        elif isinstance(v, (list, tuple)) and v and hasattr(v[0], "__dataclass_fields__"):
            out[k] = [asdict(x) for x in v]
        else:
            out[k] = v
    return json.loads(json.dumps(out, default=_json_default))


def broadband_rates(bands, pump, crystal, constants=None, grid=ContourGrid(),
                    quad=BandQuadrature()):
    """Broadband singles, doubles and triples (1/s, before efficiencies).

    ``bands`` is (D1, D2, D3). Singles register mode 3 in D3, doubles add
    mode 2 in D2, triples add mode 1 in D1. The mode-3 integral runs over
    D3; modes 1 and 2 come from the contour.
    """
    d1, d2, d3 = bands
    _check_broadband(bands, crystal, pump)
    R = unseeded_prefactor(pump, crystal, constants)
    restr = [(None, None), (d2.as_contour_band(), None),
             (d2.as_contour_band(), d1.as_contour_band())]
    symmetric = all(b.symmetric for b in bands)
    clipped = [False]

    def value(om, t):
        cl = Closure(crystal, pump.omega, om, t, constants, pump.pol)
        m, cut = _contour_measures(cl, grid, restr)
        clipped[0] |= cut
        return (2 * np.pi) ** 3 * R * cl.w3 * cl.v3 / cl.n3 * m

    def exists(om, t):
        return contour_exists(Closure(crystal, pump.omega, om, t, constants, pump.pol),
                              grid.theta_max, grid.coarse)

    if d3.omega_halfwidth == 0:
        tot = np.zeros(3)
    else:
        tot = _integrate_band(value, exists, d3, crystal, constants, quad, symmetric)
        tot = np.zeros(3) if tot is None else tot
    return RateReport(Regime.BROADBAND, False, float(tot[0]), float(tot[1]), float(tot[2]),
                      underestimate=clipped[0],
                      parameters_echo=_echo(bands=list(bands), pump=pump, crystal=crystal,
                                            grid=grid, quadrature=quad))


def seeded_broadband_rates(bands, seed, pump, crystal, constants=None, grid=ContourGrid()):
    """Broadband seeded singles and pairs (1/s, time averaged).

    ``bands`` is (D1, D2). Singles register one photon in D1; pairs
    register one photon in each band. The seed fixes mode 3, so the
    rates are the contour measure at k_3 = k_s.
    """
    if seed is None:
        raise SeedMissing("seeded rates require a seed beam")
    d1, d2 = bands
    restr = [(d1.as_contour_band(), None), (d2.as_contour_band(), d1.as_contour_band())]
    vals, clipped = seeded_contour_rate(seed, pump, crystal, constants, grid, restr)
    return RateReport(Regime.BROADBAND, True, float(vals[0]), float(vals[1]), None,
                      underestimate=clipped,
                      parameters_echo=_echo(bands=list(bands), seed=seed, pump=pump,
                                            crystal=crystal, grid=grid))


# --- narrowband rates -----------------------------------------------------------

def _on_shell(pump, omegas, bands):
    miss = pump.omega - sum(omegas)
    tol = min(b.omega_halfwidth for b in bands)
    if abs(miss) > tol:
        raise BandsOffShell(f"band centres miss energy conservation by {miss:.6g} rad/s "
                            f"(tolerance {tol:.6g} rad/s)")
    return miss


def _mode_vec(crystal, omega, theta, phi, constants):
    """Wavevector, index and group index of an e-mode at the exact 3-D angle."""
    c = default_constants().c if constants is None else constants.c
    psi = mode_axis_angle(crystal, theta, phi)
    n, ng = _group_index(crystal, "extraordinary", psi, omega)
    k = n * omega / c
    d = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    return k * d, n, ng


def _center_modes(bands, crystal, constants):
    out = []
    for b in bands:
        m = b.center_mode()
        out.append(_mode_vec(crystal, m.omega, m.theta, m.phi, constants))
    return out


def _kp_vec(pump, crystal, constants):
    c = default_constants().c if constants is None else constants.c
    return np.array([0.0, 0.0, pump_index(pump, crystal) * pump.omega / c])


def _tangent_pm_integral(K, omega, crystal, waist, constants, span=14.0, nodes=48):
    """int dOmega n(omega, Omega) * shape(K - k(Omega)) around the direction of K.

    Directions are parametrized by gnomonic tangent coordinates (a, b)
    about K^, with dOmega = da db / (1 + a^2 + b^2)^(3/2). The Gaussian
    factor confines the integrand to |a|, |b| of order 2/(k w).
    """
    c = default_constants().c if constants is None else constants.c
    Kn = np.linalg.norm(K)
    u = K / Kn
    e1 = np.cross(u, [0.0, 1.0, 0.0])
    if np.linalg.norm(e1) < 1e-12:
        e1 = np.cross(u, [1.0, 0.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    n0 = float(_n_eff(crystal, "extraordinary",
                      mode_axis_angle(crystal, np.arccos(u[2]), np.arctan2(u[1], u[0])),
                      omega))
    A = span / (n0 * omega / c * waist)
    x, w = np.polynomial.legendre.leggauss(nodes)
    a = A * x
    wa = A * w
    aa, bb = np.meshgrid(a, a, indexing="ij")
    d = u[:, None, None] + aa[None] * e1[:, None, None] + bb[None] * e2[:, None, None]
    norm = np.sqrt(1 + aa ** 2 + bb ** 2)
    d = d / norm
    theta = np.arccos(np.clip(d[2], -1, 1))
    phi = np.arctan2(d[1], d[0])
    n = _n_eff(crystal, "extraordinary", mode_axis_angle(crystal, theta, phi), omega)
    k1 = n * omega / c * d
    dk = K[:, None, None] - k1
    shape = pm_shape(dk[0], dk[1], dk[2], waist, crystal.length_L)
    return float(np.sum(wa[:, None] * wa[None, :] * n * shape / norm ** 3))


def _check_narrowband(bands, pump, crystal, constants):
    c = default_constants().c if constants is None else constants.c
    for b in bands:
        k = 2.5 * b.omega_center / c
        if k * (b.theta_max - b.theta_min) / 2 > 4 / pump.waist_w0 \
                or k * b.omega_halfwidth / b.omega_center > 4 * np.pi / crystal.length_L:
            warnings.warn("band is wider than the phase-matching function; narrowband "
                          "formulas evaluate the density at the band centre only",
                          RegimeWarning, stacklevel=3)
            return


def narrowband_rates(bands, pump, crystal, constants=None, grid=ContourGrid()):
    """Narrowband singles, doubles and triples (1/s, before efficiencies).

    ``bands`` is (D1, D2, D3) centred on k_01, k_02, k_03.

    * triples: density at the centres times D1 D2 and the angular
      k-measure of D3 (its frequency width absorbs the energy delta);
    * doubles: D2 D3 times the k_1 integral, the energy delta fixing |k_1|
      and the solid angle done by quadrature around k_p - k_02 - k_03;
    * singles: D3 times the contour density at k_03.

    Raises
    ------
    BandsOffShell
    """
    k = default_constants() if constants is None else constants
    d1, d2, d3 = bands
    if min(b.omega_halfwidth for b in bands) == 0:
        return RateReport(Regime.NARROWBAND, False, 0.0, 0.0, 0.0,
                          parameters_echo=_echo(bands=list(bands), pump=pump, crystal=crystal))
    _on_shell(pump, [b.omega_center for b in bands], bands)
    _check_narrowband(bands, pump, crystal, constants)
    R = unseeded_prefactor(pump, crystal, constants)
    V = interaction_volume(pump.waist_w0, crystal.length_L)
    (k1, n1, g1), (k2, n2, g2) = _center_modes(bands[:2], crystal, constants)
    w1, w2 = d1.omega_center, d2.omega_center
    # the energy delta is consumed inside D3: mode 3 sits at the conserving frequency
    w3 = pump.omega - w1 - w2
    k3, n3, g3 = _mode_vec(crystal, w3, abs(d3.theta_center), 0.0 if d3.theta_center >= 0 else np.pi,
                           constants)
    D1, D2, D3 = (band_k_volume(b, crystal, constants) for b in bands)
    kp = _kp_vec(pump, crystal, constants)

    def wv_n(w, n, ng):
        return w * k.c / ng / n

    dk = kp - k1 - k2 - k3
    f2 = V * float(pm_shape(dk[0], dk[1], dk[2], pump.waist_w0, crystal.length_L))
    triples = R * wv_n(w1, n1, g1) * wv_n(w2, n2, g2) * wv_n(w3, n3, g3) * f2 \
        * D1 * D2 * band_k_per_omega(d3, crystal, constants)

    w1f = pump.omega - d2.omega_center - d3.omega_center
    K = kp - k2 - _center_modes(bands[2:], crystal, constants)[0][0]
    inner = w1f ** 3 / k.c ** 2 * V * _tangent_pm_integral(K, w1f, crystal, pump.waist_w0,
                                                            constants)
    doubles = D2 * D3 * R * wv_n(w2, n2, g2) * wv_n(w3, n3, g3) * inner

    m3 = d3.center_mode()
    singles = D3 * singles_density(m3, pump, crystal, constants, grid)
    return RateReport(Regime.NARROWBAND, False, float(singles), float(doubles), float(triples),
                      underestimate=True,
                      parameters_echo=_echo(bands=list(bands), pump=pump, crystal=crystal,
                                            grid=grid))


def seeded_narrowband_rates(bands, seed, pump, crystal, constants=None):
    """Narrowband seeded singles and pairs (1/s, time averaged).

    ``bands`` is (D1, D2). Pairs: density at the centres times D1 and the
    angular k-measure of D2. Singles: D2 times the k_1 integral around
    k_p - k_02 - k_s.

    Raises
    ------
    BandsOffShell, SeedMissing
    """
    if seed is None:
        raise SeedMissing("seeded rates require a seed beam")
    k = default_constants() if constants is None else constants
    d1, d2 = bands
    if min(b.omega_halfwidth for b in bands) == 0:
        return RateReport(Regime.NARROWBAND, True, 0.0, 0.0, None,
                          parameters_echo=_echo(bands=list(bands), seed=seed, pump=pump,
                                                crystal=crystal))
    _on_shell(pump, [d1.omega_center, d2.omega_center, seed.omega], bands)
    Rs = seeded_prefactor(seed, pump, crystal, constants)
    weff = effective_waist(pump.waist_w0, seed.waist_w0)
    Vs = interaction_volume(weff, crystal.length_L)
    (k1, n1, g1), = _center_modes(bands[:1], crystal, constants)
    ks, _, _ = _mode_vec(crystal, seed.omega, 0.0, 0.0, constants)
    w1 = d1.omega_center
    # the energy delta is consumed inside D2
    w2 = pump.omega - w1 - seed.omega
    k2, n2, g2 = _mode_vec(crystal, w2, abs(d2.theta_center), 0.0 if d2.theta_center >= 0 else np.pi,
                           constants)
    kp = _kp_vec(pump, crystal, constants)

    def wv_n(w, n, ng):
        return w * k.c / ng / n

    dk = kp - k1 - k2 - ks
    fs2 = Vs * float(pm_shape(dk[0], dk[1], dk[2], weff, crystal.length_L))
    D1 = band_k_volume(d1, crystal, constants)
    D2 = band_k_volume(d2, crystal, constants)
    pairs = Rs * wv_n(w1, n1, g1) * wv_n(w2, n2, g2) * fs2 * D1 \
        * band_k_per_omega(d2, crystal, constants)

    (k2c, n2c, g2c), = _center_modes(bands[1:], crystal, constants)
    w1f = pump.omega - d2.omega_center - seed.omega
    K = kp - k2c - ks
    inner = w1f ** 3 / k.c ** 2 * Vs * _tangent_pm_integral(K, w1f, crystal, weff, constants)
    singles = D2 * Rs * wv_n(d2.omega_center, n2c, g2c) * inner
    return RateReport(Regime.NARROWBAND, True, float(singles), float(pairs), None,
                      parameters_echo=_echo(bands=list(bands), seed=seed, pump=pump,
                                            crystal=crystal))


# --- effective fields -------------------------------------------------------------

def _lab_pm_integral(K, omega, crystal, waist, constants, span=14.0, nodes=48):
    """int dOmega n(omega, Omega) * shape(K - k(Omega)) in lab polar angles.

    Independent of ``_tangent_pm_integral``: integrates sin(theta) dtheta
    dphi over a polar window around the direction of K.
    """
    c = default_constants().c if constants is None else constants.c
    Kn = np.linalg.norm(K)
    tK = np.arccos(np.clip(K[2] / Kn, -1, 1))
    pK = np.arctan2(K[1], K[0])
    n0 = float(_n_eff(crystal, "extraordinary",
                      mode_axis_angle(crystal, tK, pK), omega))
    dth = span / (n0 * omega / c * waist)
    x, w = np.polynomial.legendre.leggauss(nodes)
    if tK < dth:
        t, wt = _gl(0.0, tK + dth, (x, w))
        p, wp = _gl(-np.pi, np.pi, np.polynomial.legendre.leggauss(2 * nodes))
    else:
        t, wt = _gl(tK - dth, tK + dth, (x, w))
        dphi = min(np.pi, dth / np.sin(tK - dth) if tK - dth > 0 else np.pi)
        p, wp = _gl(pK - dphi, pK + dphi, (x, w))
    T, P = np.meshgrid(t, p, indexing="ij")
    n = _n_eff(crystal, "extraordinary", mode_axis_angle(crystal, T, P), omega)
    kk = n * omega / c
    dk0 = K[0] - kk * np.sin(T) * np.cos(P)
    dk1 = K[1] - kk * np.sin(T) * np.sin(P)
    dk2 = K[2] - kk * np.cos(T)
    shape = pm_shape(dk0, dk1, dk2, waist, crystal.length_L)
    return float(np.sum(wt[:, None] * wp[None, :] * np.sin(T) * n * shape))


def narrowband_vacuum_field(bands, pump, crystal, constants=None, seed=None):
    """Squared effective narrowband vacuum field (V^2/m^2).

    hbar / (2 eps0 c V_ref^2) (dw_b / (2 pi)^3) int (w_3 v_3 / n_3) |f|^2
    delta(dw) dk_3, with |f|^2 = V |f~|^2 and the energy delta fixing |k_3|.
    ``bands`` are the two registered bands (a, b); dw_b is the full
    frequency width of band b. V_ref is the seeded volume when ``seed``
    is given, otherwise the pump volume.
    """
    k = default_constants() if constants is None else constants
    da, db = bands
    V = interaction_volume(pump.waist_w0, crystal.length_L)
    Vref = V if seed is None else interaction_volume(
        effective_waist(pump.waist_w0, seed.waist_w0), crystal.length_L)
    (ka, _, _), (kb, _, _) = _center_modes(bands, crystal, constants)
    w3 = pump.omega - da.omega_center - db.omega_center
    K = _kp_vec(pump, crystal, constants) - ka - kb
    integral = w3 ** 3 / k.c ** 2 * V * V * _lab_pm_integral(K, w3, crystal, pump.waist_w0,
                                                              constants)
    value = k.hbar / (2 * k.eps0 * k.c * Vref ** 2) * (2 * db.omega_halfwidth) \
        / (2 * np.pi) ** 3 * integral
    return EffectiveField(FieldKind.NARROWBAND_VACUUM, float(value))


def broadband_vacuum_field(bands, pump, crystal, seed_reference, constants=None,
                           grid=ContourGrid(), quad=BandQuadrature()):
    """Squared effective broadband vacuum field from the rate ratio.

    <E_bb^2> = |E_s|^2 N_2 / N_s,2 with both pair rates into the same two
    bands at the same pump. ``bands`` is (Da, Db); the unseeded rate
    registers modes 2 and 3 in (Da, Db), the seeded rate registers
    modes 1 and 2.
    """
    if seed_reference is None:
        raise SeedMissing("broadband vacuum field needs a seed reference")
    da, db = bands
    unseeded = broadband_rates((da, da, db), pump, crystal, constants, grid, quad)
    seeded = seeded_broadband_rates((db, da), seed_reference, pump, crystal, constants, grid)
    es2 = seed_field_sq(seed_reference, crystal, constants).value_sq
    if seeded.doubles_hz == 0:
        raise ValueError("seeded pair rate vanishes; ratio undefined")
    return EffectiveField(FieldKind.BROADBAND_VACUUM, es2 * unseeded.doubles_hz / seeded.doubles_hz)
