import time
import warnings

import numpy as np
import pytest
from scipy.optimize import brentq

from oracles import C, e_index, o_index
from topdc.dispersion import CrystalConfig, constant_model, rutile_crystal
from topdc.geometry import (BeamConfig, ModeSpec, WaveVector, check_rayleigh, effective_waist,
                            interaction_volume, mismatch, mode_to_wavevector, pm_intensity,
                            pm_norm_integral, seeded_pm_intensity)


def flat(n=2.0):
    return CrystalConfig(disp_o=constant_model(n), disp_e=constant_model(n))


def test_modespec_validation():
    with pytest.raises(ValueError):
        ModeSpec(-1.0)
    with pytest.raises(ValueError):
        ModeSpec(1.0, theta=4.0)
    with pytest.raises(ValueError):
        ModeSpec(1.0, phi=2 * np.pi)


def test_in_plane_negative_angle():
    m = ModeSpec.in_plane(1e15, -0.1)
    assert m.theta == 0.1 and m.phi == np.pi


def test_beam_validation_and_intensity():
    with pytest.raises(ValueError):
        BeamConfig(532e-9, 0.1, duty_cycle=0.0)
    b = BeamConfig(1620e-9, 10e-3, 100e-6, 2e-8)
    assert b.peak_intensity == pytest.approx(1.5915e13, rel=1e-4)


def test_wavevector_collinear():
    k = mode_to_wavevector(ModeSpec(C, 0.0, 0.0), flat(2.0))
    assert (k.kx, k.ky, k.kz) == pytest.approx((0, 0, 2))


def test_wavevector_transverse():
    k = mode_to_wavevector(ModeSpec(C, np.pi / 2, 0.0), flat(1.0 + 1e-12))
    assert (k.kx, k.ky, k.kz) == pytest.approx((1, 0, 0), abs=1e-9)


def test_wavevector_rutile_golden():
    tc = np.radians(68.24)
    th = np.radians(5.0)
    m = ModeSpec.from_wavelength(1596e-9, th, 0.0)
    k = mode_to_wavevector(m, rutile_crystal(axis_model="exact"))
    n = e_index(1.596, tc - th)[0]
    kk = n * 2 * np.pi / 1596e-9
    assert (k.kx, k.ky, k.kz) == pytest.approx((kk * np.sin(th), 0.0, kk * np.cos(th)), rel=1e-12)


def test_wavevector_ops():
    a = WaveVector(1, 2, 3)
    b = WaveVector(3, 2, 1)
    assert (a + b).as_array().tolist() == [4, 4, 4]
    assert (-a).norm == pytest.approx(np.sqrt(14))
    with pytest.raises(ValueError):
        WaveVector(np.nan, 0, 0)


def test_mismatch_degenerate_flat():
    cr = flat(2.0)
    wp = 3e15
    d = mismatch(ModeSpec(wp, pol="ordinary"), [ModeSpec(wp / 3)] * 3, cr)
    assert d.domega == 0
    assert d.dk.norm == pytest.approx(0, abs=1e-6)


def test_mismatch_two_daughters_deficit():
    d = mismatch(ModeSpec(3e15, pol="ordinary"), [ModeSpec(1e15), ModeSpec(0.8e15)], flat())
    assert d.domega == pytest.approx(1.2e15)


def test_mismatch_antisymmetric():
    cr = flat()
    p = ModeSpec(3e15, pol="ordinary")
    ds = [ModeSpec(1e15, 0.1, 0.3), ModeSpec(2e15, 0.2, 1.0)]
    fwd = mismatch(p, ds, cr)
    k_back = sum((mode_to_wavevector(x, cr) for x in ds[1:]), mode_to_wavevector(ds[0], cr)) \
        - mode_to_wavevector(p, cr)
    assert k_back.as_array() == pytest.approx(-fwd.dk.as_array())


def test_mismatch_rutile_orientation():
    p = ModeSpec.from_wavelength(532e-9, pol="ordinary")
    ds = [ModeSpec.from_wavelength(1596e-9)] * 3
    good = mismatch(p, ds, rutile_crystal()).dk.norm
    bad = mismatch(p, ds, rutile_crystal(orientation_theta_c=np.radians(60))).dk.norm
    assert good < bad


def test_pm_peak_is_volume():
    v = pm_intensity(WaveVector(0, 0, 0), 100e-6, 5e-3)
    assert v == pytest.approx(1.5708e-10, rel=1e-4)
    assert v == interaction_volume(100e-6, 5e-3)


def test_pm_sinc_zero():
    L = 5e-3
    assert pm_intensity(WaveVector(0, 0, 2 * np.pi / L), 1e-4, L) < 1e-40


def test_pm_half_maximum():
    L = 5e-3
    x = brentq(lambda u: np.sinc(u / np.pi) ** 2 - 0.5, 0.5, 2.5)
    assert x == pytest.approx(1.39156, abs=1e-5)
    V = interaction_volume(1e-4, L)
    assert pm_intensity(WaveVector(0, 0, 2 * x / L), 1e-4, L) / V == pytest.approx(0.5, rel=1e-4)


def test_pm_even_and_bounded():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = rng.normal(size=3) * 1e4
        a = pm_intensity(WaveVector(*d), 1e-4, 5e-3)
        b = pm_intensity(WaveVector(-d[0], d[1], -d[2]), 1e-4, 5e-3)
        assert a == b
        assert 0 <= a <= interaction_volume(1e-4, 5e-3)


def test_pm_norm_integral_invariant():
    t = time.time()
    for w0, L in [(1e-4, 5e-3), (2e-4, 5e-3), (1e-4, 2.5e-3)]:
        assert pm_norm_integral(w0, L) == pytest.approx((2 * np.pi) ** 3, rel=1e-4)
    assert time.time() - t < 5


def test_seeded_pm():
    w = 1e-4
    assert effective_waist(w, w) == pytest.approx(w / np.sqrt(2))
    dk = WaveVector(0, 0, 0)
    assert seeded_pm_intensity(dk, w, w, 5e-3) == pytest.approx(np.pi * w * w * 5e-3 / 2)
    dk = WaveVector(3e3, 0, 100.0)
    assert seeded_pm_intensity(dk, w, 1e6, 5e-3) == pytest.approx(pm_intensity(dk, w, 5e-3),
                                                                 rel=1e-9)


def test_rayleigh_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_rayleigh(BeamConfig(532e-9, 0.1, 100e-6), 5e-3)
    with pytest.warns(RuntimeWarning):
        assert not check_rayleigh(BeamConfig(532e-9, 0.1, 10e-6), 5e-3)
