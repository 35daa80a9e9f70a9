"""Independent reference computations used only by the tests.

Nothing here imports the package's numerical kernels. Dispersion uses the
analytic wavelength derivative, mode-1 closure uses plain bisection, and
the energy delta is a Gaussian of width sigma evaluated on a dense grid.
"""

import numpy as np
from scipy import constants as sc

HBAR, EPS0, C = sc.hbar, sc.epsilon_0, sc.c

DEVORE_O = (5.913, 0.2441, 0.0803)
DEVORE_E = (7.197, 0.3322, 0.0843)
WINDOW_NM = (430.0, 3000.0)


def sellmeier(lam_um, coef):
    """n and dn/dlambda (per um) of n^2 = A + B / (lambda^2 - C)."""
    A, B, Cc = coef
    d = lam_um ** 2 - Cc
    n = np.sqrt(A + B / d)
    dn = -B * lam_um / (n * d * d)
    return n, dn


def e_index(lam_um, psi):
    """Extraordinary index and group index at angle psi to the optic axis."""
    no, dno = sellmeier(lam_um, DEVORE_O)
    ne, dne = sellmeier(lam_um, DEVORE_E)
    c2, s2 = np.cos(psi) ** 2, np.sin(psi) ** 2
    u = c2 / no ** 2 + s2 / ne ** 2
    du = -2 * c2 * dno / no ** 3 - 2 * s2 * dne / ne ** 3
    n = u ** -0.5
    dn = -0.5 * u ** -1.5 * du
    return n, n - lam_um * dn


def o_index(lam_um):
    n, dn = sellmeier(lam_um, DEVORE_O)
    return n, n - lam_um * dn


def lam_um(omega):
    return 2e6 * np.pi * C / omega


def omega_of_nm(nm):
    return 2 * np.pi * C / (nm * 1e-9)


def prefactor_R(P, w0, L, chi, lam_p_nm, hbar=HBAR):
    """Unseeded rate prefactor from the closed-form coupling (CW)."""
    n_p = o_index(lam_p_nm * 1e-3)[0]
    I = P / (np.pi * w0 ** 2)
    gamma = 6 * chi / 8 * np.sqrt(2 * I * EPS0 / (C * n_p))
    V = np.pi * w0 ** 2 * L
    return hbar * V * gamma ** 2 / (8 * (2 * np.pi) ** 8 * EPS0 ** 3 * C ** 3)


def _omega1(Kmag, psi1, iters=10):
    """Newton for n_e(omega, psi1) omega / c = |K| (vectorized)."""
    w = C * Kmag / 2.7
    for _ in range(iters):
        n, ng = e_index(lam_um(w), psi1)
        w = w - (n * w / C - Kmag) * C / ng
    return w


def axis_angle(tc, theta, model="azimuthal_mean"):
    """Angle to the optic axis of a mode at polar angle theta."""
    if model == "azimuthal_mean":
        return np.arccos(np.cos(tc) * np.cos(theta))
    return np.abs(tc - np.abs(theta))


def oracle_closure(lam3_nm, theta3_deg, theta_c_deg=68.24, lam_p_nm=532.0,
                   model="azimuthal_mean"):
    """Closure g(theta_2, omega_2) -> (g, F, inside window) and mode-3 data."""
    tc = np.radians(theta_c_deg)
    wp = omega_of_nm(lam_p_nm)
    w3 = omega_of_nm(lam3_nm)
    t3 = np.radians(theta3_deg)
    lo, hi = omega_of_nm(WINDOW_NM[1]), omega_of_nm(WINDOW_NM[0])
    kp = o_index(lam_um(wp))[0] * wp / C
    n3, ng3 = e_index(lam_um(w3), axis_angle(tc, t3, model))
    k3 = n3 * w3 / C

    def g_of(t, w2):
        n2, ng2 = e_index(lam_um(w2), axis_angle(tc, t, model))
        k2 = n2 * w2 / C
        kx = -(k2 * np.sin(t) + k3 * np.sin(t3))
        kz = kp - k2 * np.cos(t) - k3 * np.cos(t3)
        K = np.hypot(kx, kz)
        psi1 = axis_angle(tc, np.arctan2(kx, kz), model)
        w1 = _omega1(K, psi1)
        n1, ng1 = e_index(lam_um(w1), psi1)
        F = w1 * w2 ** 3 * (C / ng1) * n2 / n1
        ok = (w1 >= lo) & (w1 <= hi) & (w2 >= lo) & (w2 <= hi)
        return wp - w1 - w2 - w3, F, ok

    info = dict(wp=wp, w3=w3, n3=n3, v3=C / ng3, lo=lo, hi=hi, w2max=min(hi, wp - w3 - lo))
    return g_of, info


def brute_singles_density(lam3_nm, theta3_deg, theta_c_deg=68.24, lam_p_nm=532.0, P=0.1,
                          w0=100e-6, L=5e-3, chi=2.1e-20, sigma_rel=4e-6,
                          theta_span_deg=16.0, n_theta=801, n_coarse=2000, per_sigma=4.0,
                          reach=10.0, model="azimuthal_mean"):
    """Singles density from a Gaussian-regularized energy delta.

    Integrates pi/c^2 F |sin theta_2| exp(-g^2 / 2 s^2)/(sqrt(2 pi) s) with
    the trapezoid rule on a signed theta_2 grid. Along omega_2 a coarse grid
    locates cells where |g| comes within ``reach`` s; each such cell is
    subdivided so that g changes by at most s / per_sigma per step, and all
    other cells are dropped (their kernel is below exp(-reach^2 / 2)).
    """
    g_of, info = oracle_closure(lam3_nm, theta3_deg, theta_c_deg, lam_p_nm, model)
    s = sigma_rel * info["wp"]
    th = np.radians(np.linspace(-theta_span_deg, theta_span_deg, n_theta))
    wc = np.linspace(info["lo"], info["w2max"], n_coarse)
    T, W = np.meshgrid(th, wc, indexing="ij")
    G = g_of(T, W)[0]
    ga, gb = G[:, :-1], G[:, 1:]
    near = (np.minimum(np.abs(ga), np.abs(gb)) < reach * s) | (np.sign(ga) != np.sign(gb))
    ri, ci = np.nonzero(near)
    nsub = np.clip(np.ceil(np.abs(gb - ga)[ri, ci] / s * per_sigma).astype(int), 4, None) + 1
    start = np.concatenate([[0], np.cumsum(nsub)[:-1]])
    cell = np.repeat(np.arange(ri.size), nsub)
    frac = (np.arange(cell.size) - start[cell]) / (nsub[cell] - 1)
    x = wc[ci][cell] + frac * (wc[1] - wc[0])
    g, F, ok = g_of(th[ri][cell], x)
    f = np.where(ok, F * np.exp(-0.5 * (g / s) ** 2) / (np.sqrt(2 * np.pi) * s), 0.0)
    seg = 0.5 * (f[1:] + f[:-1]) * np.diff(x)
    seg[(cell[1:] != cell[:-1])] = 0.0
    per_cell = np.zeros(ri.size)
    np.add.at(per_cell, cell[1:], seg)
    row = np.zeros(th.size)
    np.add.at(row, ri, per_cell)
    measure = np.pi / C ** 2 * np.trapezoid(row * np.abs(np.sin(th)), th)
    R = prefactor_R(P, w0, L, chi, lam_p_nm)
    return (2 * np.pi) ** 3 * R * info["w3"] * info["v3"] / info["n3"] * measure
