"""Deterministic quadrature and root-finding kernels.

Adaptive Gauss-Legendre with panel bisection, nested use of it for up to
three dimensions, and a scan-and-bracket root finder.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import QuadratureNotConverged


class Rule(str, Enum):
    GAUSS_LEGENDRE_15 = "gauss_legendre_15"
    TRAPEZOID = "trapezoid"


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-300
    max_depth: int = 30
    rule: Rule = Rule.GAUSS_LEGENDRE_15

    def __post_init__(self):
        object.__setattr__(self, "rule", Rule(self.rule))
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass(frozen=True)
class RootSpec:
    bracket_tol: float = 1e-12
    scan_points: int = 2000

    def __post_init__(self):
        if self.scan_points < 2:
            raise ValueError("scan_points must be >= 2")


_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)
# composite trapezoid on 9 nodes
_TR_X = np.linspace(-1.0, 1.0, 9)
_TR_W = np.full(9, 2.0 / 8)
_TR_W[[0, -1]] *= 0.5


def _panel(f, a, b, rule):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    if rule is Rule.GAUSS_LEGENDRE_15:
        x, w = _GL_X, _GL_W
    else:
        x, w = _TR_X, _TR_W
    return half * float(np.dot(w, f(mid + half * x)))


def integrate_1d(f, a, b, spec=QuadratureSpec(), points=None, vectorized=True):
    """Adaptive integral of ``f`` over [a, b].

    Each panel is compared with the sum over its two halves; panels whose
    difference exceeds their share of the tolerance are bisected.

    Parameters
    ----------
    f : callable
        Vectorized over a 1-D array unless ``vectorized`` is False.
    points : sequence of float, optional
        Interior breakpoints used as the initial panel edges.

    Returns
    -------
    value, error : float
    """
    if not a < b:
        raise ValueError("integrate_1d requires a < b")
    g = f if vectorized else np.vectorize(f, otypes=[float])
    inner = () if points is None else (float(p) for p in points if a < p < b)
    edges = [a] + sorted(inner) + [b]
    stack = [(lo, hi, _panel(g, lo, hi, spec.rule), 0)
             for lo, hi in zip(edges[:-1], edges[1:])]
    stack.reverse()
    width = b - a
    total, err_total = 0.0, 0.0
    # first pass estimate fixes the relative scale deterministically
    scale = abs(sum(s[2] for s in stack))
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = _panel(g, lo, mid, spec.rule), _panel(g, mid, hi, spec.rule)
        err = abs(left + right - whole)
        tol = max(spec.abs_tol, spec.rel_tol * scale) * (hi - lo) / width
        if err <= tol or err == 0.0:
            total += left + right
            err_total += err
            continue
        if depth + 1 >= spec.max_depth:
            raise QuadratureNotConverged(
                f"depth {spec.max_depth} reached on [{lo:.6g}, {hi:.6g}], local error {err:.3g}")
        stack.append((mid, hi, right, depth + 1))
        stack.append((lo, mid, left, depth + 1))
    if not np.isfinite(total):
        raise QuadratureNotConverged("non-finite integral")
    return total, err_total


def integrate_nd(f, box, spec=QuadratureSpec()):
    """Nested adaptive integral over a box of up to three dimensions.

    ``f`` takes one scalar per dimension. The outermost dimension is the
    first box entry; evaluation order is fixed.

    Returns
    -------
    value, error : float
    """
    box = [tuple(map(float, b)) for b in box]
    if not 1 <= len(box) <= 3:
        raise ValueError("integrate_nd supports 1 to 3 dimensions")

    def nest(prefix, level):
        a, b = box[level]
        if level == len(box) - 1:
            return integrate_1d(lambda x: f(*prefix, x), a, b, spec, vectorized=False)
        errs = []

        def inner(x):
            v, e = nest(prefix + (x,), level + 1)
            errs.append(e)
            return v

        v, e = integrate_1d(inner, a, b, spec, vectorized=False)
        return v, e + (b - a) * (max(errs) if errs else 0.0)

    return nest((), 0)


def find_roots(g, a, b, spec=RootSpec(), vectorized=False):
    """All sign-change roots of ``g`` on [a, b], ascending.

    A uniform scan of ``spec.scan_points`` nodes brackets each sign change,
    which is then refined with Brent's method. Roots closer than
    ``bracket_tol * (b - a)`` are merged. Tangential roots without a sign
    change are reported only if a scan node hits them exactly.
    """
    x = np.linspace(a, b, spec.scan_points)
    y = g(x) if vectorized else np.array([g(xi) for xi in x], dtype=float)
    xtol = spec.bracket_tol * (b - a)
    scalar_g = (lambda t: float(g(np.array([t]))[0])) if vectorized else g
    roots = []
    for i in range(len(x) - 1):
        if y[i] == 0.0:
            roots.append(x[i])
        elif y[i] * y[i + 1] < 0:
            roots.append(brentq(scalar_g, x[i], x[i + 1], xtol=1e-300,
                                rtol=4 * np.finfo(float).eps))
    if y[-1] == 0.0:
        roots.append(x[-1])
    merged = []
    for r in sorted(roots):
        if merged and r - merged[-1] <= xtol:
            continue
        merged.append(r)
    return merged


def bisect_brackets(g, a, b, ga=None, iterations=60):
    """Vectorized bisection of many brackets at once.

    ``g`` maps an array of abscissae to residuals; ``a`` and ``b`` are
    arrays of bracket ends with opposite residual signs.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    ga = g(a) if ga is None else np.array(ga, dtype=float)
    for _ in range(iterations):
        m = 0.5 * (a + b)
        gm = g(m)
        same = np.sign(gm) == np.sign(ga)
        a = np.where(same, m, a)
        ga = np.where(same, gm, ga)
        b = np.where(same, b, m)
    return 0.5 * (a + b)


def illinois_brackets(g, a, b, ga=None, gb=None, iterations=60, rtol=1e-15, atol=0.0):
    """Vectorized Illinois (modified regula falsi) on many brackets.

    Converges superlinearly for smooth residuals and never leaves the
    brackets. Stops when every bracket is narrower than ``rtol`` relative
    or every residual is within ``atol``. Returns, per bracket, the end
    with the smaller residual.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    ga = g(a) if ga is None else np.array(ga, dtype=float)
    gb = g(b) if gb is None else np.array(gb, dtype=float)
    side = np.zeros(a.shape, dtype=int)
    for _ in range(iterations):
        denom = gb - ga
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(denom != 0, (a * gb - b * ga) / denom, 0.5 * (a + b))
        bad = ~((m > np.minimum(a, b)) & (m < np.maximum(a, b)))
        m = np.where(bad, 0.5 * (a + b), m)
        gm = g(m)
        left = np.sign(gm) == np.sign(ga)
        # replace a, halve gb if a was also replaced last time
        gb = np.where(left & (side == 1), 0.5 * gb, gb)
        ga = np.where(~left & (side == -1), 0.5 * ga, ga)
        a = np.where(left, m, a)
        ga = np.where(left, gm, ga)
        b = np.where(left, b, m)
        gb = np.where(left, gb, gm)
        side = np.where(left, 1, -1)
        if np.all((np.abs(b - a) <= rtol * np.maximum(np.abs(a), np.abs(b)))
                  | (np.minimum(np.abs(ga), np.abs(gb)) <= atol)):
            break
    return np.where(np.abs(ga) <= np.abs(gb), a, b)
