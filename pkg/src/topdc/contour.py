"""Energy-momentum closure and the frequency-angle contour of mode 2.

For fixed mode 3 the momentum delta fixes k_1 = k_p - k_2 - k_3, and its
frequency omega~_1 follows from n(omega) omega / c = |k_1|. The remaining
energy condition

    g(theta_2, omega_2) = omega_p - omega~_1 - omega_2 - omega_3 = 0

defines curves in the (theta_2, omega_2) plane. Under the azimuthally
symmetric reduction all modes lie in one plane through the pump axis,
theta_2 is signed in that plane, and extraordinary indices depend on the
polar angle only through ``crystal.axis_model``.

Curves are traced with marching squares on a grid of g, each vertex is
refined by bisection along its grid edge, and integrals over the delta
function are done as line integrals

    int int h delta(g) dtheta domega = contour integral of h / |grad g| ds,

which stays finite at turning points where dg/domega_2 vanishes.
"""

from dataclasses import dataclass, field

import numpy as np
from skimage.measure import find_contours

from .constants import default_constants
from .dispersion import (Polarization, _check, _group_index, _inv_n2_slope, _models, _n_eff,
                         mode_axis_angle)
from .errors import NoRootInWindow
from .geometry import ModeSpec, WaveVector
from .quadrature import RootSpec, find_roots, illinois_brackets

# safe evaluation range for the unchecked index kernel (wavelength 0.32 um .. 1 mm)
_OMEGA_SAFE = (2 * np.pi * default_constants().c / 1e-3, 2 * np.pi * default_constants().c / 0.32e-6)


@dataclass(frozen=True)
class ContourPoint:
    theta2: float
    omega2: float
    omega1: float
    theta1: float
    jacobian_weight: float


@dataclass(frozen=True)
class ContourResult:
    """Refined contour vertices ordered by theta2.

    ``measure`` is the integral of the vertex weight along the curves,
    i.e. (pi / c^2) int int F |sin theta_2| delta(g) dtheta_2 domega_2 with
    F = omega~_1 omega_2^3 v~_1 n_2 / n~_1, restricted to the window.
    """

    fixed_mode3: ModeSpec
    points: tuple
    branch_count: int
    measure: float = 0.0
    curves: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class Band:
    """Frequency and signed in-plane angle window used to restrict a mode."""

    omega_min: float
    omega_max: float
    theta_min: float = -np.pi
    theta_max: float = np.pi


class Closure:
    """Vectorized closure evaluator for one pump, crystal and mode 3.

    All angles are signed in-plane angles measured from the pump axis.
    """

    def __init__(self, crystal, pump_omega, omega3, theta3, constants=None,
                 pump_pol=Polarization.ORDINARY):
        self.crystal = crystal
        self.c = default_constants().c if constants is None else constants.c
        self.wp = float(pump_omega)
        self.w3 = float(omega3)
        self.t3 = float(theta3)
        self.tc = crystal.orientation_theta_c
        self.window = crystal.omega_window
        for m in _models(crystal, pump_pol):
            _check(m, self.wp)
        self.np_ = float(_n_eff(crystal, pump_pol, self.tc, self.wp))
        self.kp = self.np_ * self.wp / self.c
        self.n3, ng3 = (float(x) for x in _group_index(crystal, "extraordinary", self._psi(self.t3), self.w3))
        self.v3 = self.c / ng3
        self.k3 = self.n3 * self.w3 / self.c

    def _psi(self, theta):
        return mode_axis_angle(self.crystal, theta)

    def index(self, omega, theta):
        return _n_eff(self.crystal, "extraordinary", self._psi(theta), omega)

    def omega_from_k(self, k, theta, iterations=8):
        """Solve n(omega, theta) omega / c = k by Newton iteration."""
        lo, hi = _OMEGA_SAFE
        c2 = np.cos(self._psi(theta)) ** 2
        s2 = 1 - c2
        w = np.clip(self.c * k / self.index(np.full_like(k, self.wp / 3), theta), lo, hi)
        for _ in range(iterations):
            uo, duo = _inv_n2_slope(self.crystal.disp_o, w)
            ue, due = _inv_n2_slope(self.crystal.disp_e, w)
            u = c2 * uo + s2 * ue
            n = u ** -0.5
            ng = n - 0.5 * w * u ** -1.5 * (c2 * duo + s2 * due)
            step = (n * w / self.c - k) * self.c / ng
            w = np.clip(w - step, lo, hi)
            if np.all(np.abs(step) <= 1e-15 * w):
                break
        return w

    def evaluate(self, theta2, omega2):
        """Return g, omega1, signed theta1 and n2 on broadcast arrays."""
        theta2, omega2 = np.broadcast_arrays(np.asarray(theta2, float), np.asarray(omega2, float))
        n2 = self.index(omega2, theta2)
        k2 = n2 * omega2 / self.c
        kx = -(k2 * np.sin(theta2) + self.k3 * np.sin(self.t3))
        kz = self.kp - k2 * np.cos(theta2) - self.k3 * np.cos(self.t3)
        t1 = np.arctan2(kx, kz)
        w1 = self.omega_from_k(np.hypot(kx, kz), t1)
        return self.wp - w1 - omega2 - self.w3, w1, t1, n2

    def g(self, theta2, omega2):
        return self.evaluate(theta2, omega2)[0]

    def omega2_range(self):
        lo, hi = self.window
        return lo, min(hi, self.wp - self.w3 - lo)


def _refine_vertices(closure, verts, th, y, ws, G):
    """Move marching-squares vertices onto g = 0 along their grid edges."""
    r, cidx = verts[:, 0], verts[:, 1]
    on_row = np.abs(r - np.round(r)) <= np.abs(cidx - np.round(cidx))
    i0 = np.where(on_row, np.round(r), np.floor(r)).astype(int)
    j0 = np.where(on_row, np.floor(cidx), np.round(cidx)).astype(int)
    i0 = np.clip(i0, 0, len(th) - 1 - (~on_row))
    j0 = np.clip(j0, 0, len(y) - 1 - on_row)
    i1 = i0 + (~on_row)
    j1 = j0 + on_row
    ta, tb, ya, yb = th[i0], th[i1], y[j0], y[j1]

    def along(s):
        return closure.g(ta + s * (tb - ta), (ya + s * (yb - ya)) * ws)

    frac = illinois_brackets(along, np.zeros(len(r)), np.ones(len(r)), G[i0, j0], G[i1, j1],
                             atol=1e-13 * closure.wp)
    return ta + frac * (tb - ta), ya + frac * (yb - ya)


def _segment_integral(h, s, cons):
    """Trapezoid line integral with linear clipping by constraints >= 0.

    h : (N,) integrand at vertices; s : (N-1,) segment lengths;
    cons : (M, N) constraint values at vertices.
    """
    t0 = np.zeros(len(s))
    t1 = np.ones(len(s))
    for c in cons:
        ca, cb = c[:-1], c[1:]
        d = cb - ca
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = np.where(d != 0, -ca / d, np.nan)
        both_bad = (ca < 0) & (cb < 0)
        enter = (ca < 0) & (cb >= 0)
        leave = (ca >= 0) & (cb < 0)
        t0 = np.where(enter, np.maximum(t0, tc), t0)
        t1 = np.where(leave, np.minimum(t1, tc), t1)
        t1 = np.where(both_bad, -1.0, t1)
    keep = t1 > t0
    ha, hb = h[:-1], h[1:]
    h0 = ha + t0 * (hb - ha)
    h1 = ha + t1 * (hb - ha)
    return float(np.sum(np.where(keep, 0.5 * (h0 + h1) * (t1 - t0) * s, 0.0)))


def _sign_change_box(G):
    """Index bounds (i0, i1, j0, j1) of cells where G changes sign, or None."""
    pos = G > 0
    cell = (pos[:-1, :-1] != pos[1:, :-1]) | (pos[:-1, :-1] != pos[:-1, 1:]) \
        | (pos[1:, 1:] != pos[1:, :-1]) | (pos[1:, 1:] != pos[:-1, 1:])
    if not cell.any():
        return None
    rows = np.where(cell.any(axis=1))[0]
    cols = np.where(cell.any(axis=0))[0]
    return rows[0], rows[-1] + 1, cols[0], cols[-1] + 1


def _locate_grid(closure, theta_max, yrange, n_theta, n_omega, coarse, theta_grid=None):
    """Grid of g over the bounding box of a coarse sign-change scan.

    The fine grid spans the coarse box padded by one coarse cell. Closed
    curves smaller than a coarse cell can be missed.
    """
    ws = closure.wp
    if theta_grid is not None:
        th = np.asarray(theta_grid, dtype=float)
        y = np.linspace(*yrange, n_omega)
        G = closure.g(th[:, None], y[None, :] * ws)
        return (th, y, G) if _sign_change_box(G) is not None else (None, None, None)
    if coarse:
        th = np.linspace(-theta_max, theta_max, coarse[0])
        y = np.linspace(*yrange, coarse[1])
        box = _sign_change_box(closure.g(th[:, None], y[None, :] * ws))
        if box is None:
            return None, None, None
        i0, i1, j0, j1 = box
        tlo, thi = th[max(i0 - 1, 0)], th[min(i1 + 1, len(th) - 1)]
        ylo, yhi = y[max(j0 - 1, 0)], y[min(j1 + 1, len(y) - 1)]
    else:
        tlo, thi, (ylo, yhi) = -theta_max, theta_max, yrange
    th = np.linspace(tlo, thi, n_theta)
    y = np.linspace(ylo, yhi, n_omega)
    G = closure.g(th[:, None], y[None, :] * ws)
    if _sign_change_box(G) is None:
        return None, None, None
    return th, y, G


def _split_at_kinks(t, yv, h, cons, kink):
    """Insert duplicated vertices where ``kink`` changes sign along a curve.

    The principal-plane axis model uses |theta_1|, so |grad g| jumps where mode 1
    crosses the pump axis. Each straddling segment is split at the linear
    crossing; the left piece carries the left vertex weight and the right
    piece the right one.
    """
    cross = np.where(np.sign(kink[:-1]) * np.sign(kink[1:]) < 0)[0]
    if cross.size == 0:
        return t, yv, h, cons
    f = kink[cross] / (kink[cross] - kink[cross + 1])
    tx = t[cross] + f * (t[cross + 1] - t[cross])
    yx = yv[cross] + f * (yv[cross + 1] - yv[cross])
    cx = cons[:, cross] + f * (cons[:, cross + 1] - cons[:, cross])
    pos = np.repeat(cross + 1, 2)
    t = np.insert(t, pos, np.repeat(tx, 2))
    yv = np.insert(yv, pos, np.repeat(yx, 2))
    h = np.insert(h, pos, np.column_stack([h[cross], h[cross + 1]]).ravel())
    cons = np.insert(cons, pos, np.repeat(cx, 2, axis=1), axis=1)
    return t, yv, h, cons


def trace_contour(closure, theta_max=np.radians(30.0), n_theta=121, n_omega=181,
                  mode2_band=None, mode1_band=None, jacobian="exact", coarse=(61, 121),
                  restrictions=None, theta_grid=None):
    """Trace the g = 0 curves and integrate the singles weight along them.

    Parameters
    ----------
    closure : Closure
    theta_max : float
        Half-range of the signed theta_2 grid (rad).
    n_theta, n_omega : int
        Fine grid size for marching squares.
    coarse : (int, int) or None
        Size of the locating grid over the full range; None traces the
        full range directly on the fine grid.
    mode2_band, mode1_band : Band, optional
        Restrict modes 2 and 1 to these windows (both modes are always
        restricted to the dispersion window).
    theta_grid : array, optional
        Explicit increasing theta_2 rows; overrides the range and the
        locating pass.
    restrictions : list of (Band or None, Band or None), optional
        Several (mode2_band, mode1_band) pairs evaluated on one trace;
        the measure is then an array with one entry per pair.
    jacobian : {"exact", "printed"}
        ``printed`` replaces 1/(n~_1 |dg/domega_2|) by 1/n~_1^2 as in the
        closed form usually quoted for this integral.

    Returns
    -------
    measure : float or array
    curves : list of dict with vertex arrays
    """
    multi = restrictions is not None
    if not multi:
        restrictions = [(mode2_band, mode1_band)]
    zero = np.zeros(len(restrictions)) if multi else 0.0
    c = closure.c
    wlo, whi = closure.omega2_range()
    if not whi > wlo:
        return zero, []
    ws = closure.wp
    th, y, G = _locate_grid(closure, theta_max, (wlo / ws, whi / ws), n_theta, n_omega, coarse,
                           theta_grid)
    if G is None:
        return zero, []
    total = np.zeros(len(restrictions))
    curves = []
    hy = 1e-7
    ht = 1e-6
    for verts in find_contours(G, 0.0):
        if len(verts) < 2:
            continue
        t, yv = _refine_vertices(closure, verts, th, y, ws, G)
        w2 = yv * ws
        g0, w1, t1, n2 = closure.evaluate(t, w2)
        gt = (closure.g(t + ht, w2) - closure.g(t - ht, w2)) / (2 * ht)
        gy = (closure.g(t, (yv + hy) * ws) - closure.g(t, (yv - hy) * ws)) / (2 * hy)
        grad = np.hypot(gt, gy)
        n1, ng1 = _group_index(closure.crystal, "extraordinary", closure._psi(t1), w1)
        v1 = c / ng1
        F = w1 * w2 ** 3 * v1 * n2 / n1
        with np.errstate(divide="ignore", invalid="ignore"):
            if jacobian == "exact":
                h = F * np.abs(np.sin(t)) / grad
            elif jacobian == "printed":
                # F already carries 1/n~_1; dtheta = |dg/dy| ds / |grad g|, and ws is restored below
                h = F / n1 * np.abs(np.sin(t)) * np.abs(gy) / grad / ws
            else:
                raise ValueError("jacobian must be 'exact' or 'printed'")
        bad = ~np.isfinite(h)
        if bad.any():
            # a vertex on a saddle of g: the weight has a finite limit along the curve
            idx = np.arange(len(h))
            h[bad] = np.interp(idx[bad], idx[~bad], h[~bad]) if (~bad).any() else 0.0
        h = h * ws * np.pi / c ** 2
        lo, hi = closure.window
        base = [(w1 - lo) / ws, (hi - w1) / ws, (w2 - lo) / ws, (hi - w2) / ws]
        ok = np.all(np.array(base) >= 0, axis=0)
        for r, (b2, b1) in enumerate(restrictions):
            cons = list(base)
            if b2 is not None:
                cons += [(w2 - b2.omega_min) / ws, (b2.omega_max - w2) / ws,
                         t - b2.theta_min, b2.theta_max - t]
            if b1 is not None:
                cons += [(w1 - b1.omega_min) / ws, (b1.omega_max - w1) / ws,
                         t1 - b1.theta_min, b1.theta_max - t1]
            ts, ys, hs, cs = _split_at_kinks(t, yv, h, np.array(cons), t1)
            total[r] += _segment_integral(hs, np.hypot(np.diff(ts), np.diff(ys)), cs)
        # an open curve ending on the frequency range or the angle range was cut off
        ends = np.array([0, -1])
        at_edge = (np.abs(yv[ends] - wlo / ws) < 1e-9) | (np.abs(yv[ends] - whi / ws) < 1e-9) \
            | (np.abs(t[ends] - th[0]) < 1e-12) | (np.abs(t[ends] - th[-1]) < 1e-12)
        closed = t[0] == t[-1] and yv[0] == yv[-1]
        clipped = bool(np.any(~ok) or (not closed and np.any(at_edge)))
        curves.append(dict(theta2=t, omega2=w2, omega1=w1, theta1=t1, weight=h,
                           valid=ok, residual=g0, clipped=clipped))
    return (total if multi else float(total[0])), curves


def contour_exists(closure, theta_max=np.radians(30.0), coarse=(61, 121)):
    """True when the coarse locating grid sees a sign change of g."""
    wlo, whi = closure.omega2_range()
    if not whi > wlo:
        return False
    th = np.linspace(-theta_max, theta_max, coarse[0])
    y = np.linspace(wlo, whi, coarse[1])
    return _sign_change_box(closure.g(th[:, None], y[None, :])) is not None


def solve_contour(mode3, pump, crystal, theta2_grid=None, n_omega=401, constants=None,
                  signed_theta3=None):
    """Frequency-angle contour of mode 2 for fixed mode 3.

    Parameters
    ----------
    mode3 : ModeSpec
        Under azimuthal symmetry only its frequency and polar angle matter.
    pump : ModeSpec or BeamConfig
        Propagates along z.
    theta2_grid : array of float, optional
        Signed, increasing theta_2 rows of the tracing grid; defaults to
        +-30 deg in 0.25 deg steps. Every row crossing is a root of g in
        omega_2; the traced curve also carries the column crossings.
    signed_theta3 : float, optional
        Overrides ``mode3.theta`` with a signed in-plane angle.

    Returns
    -------
    ContourResult
        Vertices inside the dispersion window ordered by theta2;
        ``branch_count`` counts traced curves with at least one such vertex.
    """
    th3 = mode3.theta if signed_theta3 is None else signed_theta3
    closure = Closure(crystal, pump.omega, mode3.omega, th3, constants, pump.pol)
    if theta2_grid is None:
        theta2_grid = np.radians(np.linspace(-30, 30, 241))
    theta2_grid = np.asarray(theta2_grid, dtype=float)
    if np.any(np.diff(theta2_grid) <= 0):
        raise ValueError("theta2_grid must be strictly increasing")
    measure, curves = trace_contour(closure, n_omega=n_omega, theta_grid=theta2_grid)
    pts = []
    branches = 0
    for cv in curves:
        ok = cv["valid"]
        if np.any(ok):
            branches += 1
        for k in np.where(ok)[0]:
            pts.append(ContourPoint(float(cv["theta2"][k]), float(cv["omega2"][k]),
                                    float(cv["omega1"][k]), float(cv["theta1"][k]),
                                    float(cv["weight"][k])))
    pts.sort(key=lambda p: (p.theta2, p.omega2))
    return ContourResult(mode3, tuple(pts), branches, measure, tuple(curves))


@dataclass(frozen=True)
class OrientationScan:
    """Singles density of a fixed mode 3 versus crystal orientation.

    ``peak`` is the refined location of the maximum; it falls back to the
    best grid node when no refinement was run.
    """

    theta_c: np.ndarray
    density: np.ndarray
    peak: float = None

    @property
    def argmax(self):
        if self.peak is not None:
            return float(self.peak)
        return float(self.theta_c[int(np.argmax(self.density))])

    def rows(self):
        return list(zip(self.theta_c.tolist(), self.density.tolist()))


def orientation_scan(pump, mode3, crystal_template, theta_c_grid, constants=None, grid=None,
                     refine=8, refine_points=11, rtol=1e-3):
    """Singles density of ``mode3`` at each orientation in ``theta_c_grid`` (rad).

    ``pump`` is a BeamConfig; orientations with no contour give zero.
    The peak is then refined by ``refine`` zoom rounds of ``refine_points``
    samples around the current best. The density jumps up at the collinear
    phase-matching orientation and then decays slowly, with contour noise
    near 1e-4 relative. The refined peak is therefore the smallest
    orientation whose density is within ``rtol`` of the running maximum.
    """
    from .rates import ContourGrid, singles_density

    grid = ContourGrid() if grid is None else grid
    tc = np.atleast_1d(np.asarray(theta_c_grid, dtype=float))
    if np.any((tc < 0) | (tc > np.pi / 2)):
        raise ValueError("orientations must lie in [0, pi/2]")

    def density(t):
        return singles_density(mode3, pump, crystal_template.with_orientation(t), constants, grid)

    dens = np.array([density(t) for t in tc])
    if tc.size < 2 or dens.max() <= 0:
        return OrientationScan(tc, dens, float(tc[int(np.argmax(dens))]))
    all_t, all_d = tc, dens

    def leftmost():
        return float(np.min(all_t[all_d >= (1 - rtol) * all_d.max()]))

    best = leftmost()
    i = int(np.searchsorted(tc, best))
    lo, hi = tc[max(i - 1, 0)], tc[min(i + 1, tc.size - 1)]
    for _ in range(refine):
        pts = np.linspace(lo, hi, refine_points)
        all_t = np.concatenate([all_t, pts])
        all_d = np.concatenate([all_d, [density(t) for t in pts]])
        best = leftmost()
        step = pts[1] - pts[0]
        lo, hi = max(best - step, tc[0]), min(best + step, tc[-1])
    return OrientationScan(tc, dens, best)


def solve_omega1(k2, k3, pump, crystal, constants=None, spec=RootSpec(scan_points=400)):
    """Frequency of mode 1 closing k_1 = k_p - k_2 - k_3.

    Mode 1 is extraordinary; its index uses the exact angle between k_1
    and the optic axis. The root of n(omega) omega / c - |k_1| is
    bracketed by scanning the dispersion window.

    Raises
    ------
    NoRootInWindow
    """
    c = default_constants().c if constants is None else constants.c
    for m in _models(crystal, pump.pol):
        _check(m, pump.omega)
    tc = crystal.orientation_theta_c
    kp = float(_n_eff(crystal, pump.pol, tc, pump.omega)) * pump.omega / c
    K = WaveVector(0.0, 0.0, kp) - k2 - k3
    kn = K.norm
    theta1 = np.arccos(np.clip(K.kz / kn, -1, 1)) if kn > 0 else 0.0
    phi1 = np.arctan2(K.ky, K.kx)
    psi = float(mode_axis_angle(crystal, theta1, phi1))
    lo, hi = crystal.omega_window
    lo, hi = max(lo, _OMEGA_SAFE[0]), min(hi, _OMEGA_SAFE[1])

    def resid(w):
        return _n_eff(crystal, "extraordinary", psi, w) * w / c - kn

    roots = find_roots(resid, lo, hi, spec, vectorized=True)
    if not roots:
        raise NoRootInWindow(f"|k_1| = {kn:.6g} rad/m has no frequency in the dispersion window")
    return float(roots[0])


def contour_csv_rows(result):
    """Rows (theta2_deg, lambda2_nm, lambda1_nm, theta1_deg, weight)."""
    c = default_constants().c
    for p in result.points:
        yield (np.degrees(p.theta2), 2e9 * np.pi * c / p.omega2, 2e9 * np.pi * c / p.omega1,
               np.degrees(p.theta1), p.jacobian_weight)


CONTOUR_CSV_HEADER = ("theta2_deg", "lambda2_nm", "lambda1_nm", "theta1_deg", "weight")
