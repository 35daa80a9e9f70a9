import numpy as np
import pytest

from oracles import C, e_index, o_index
from topdc.dispersion import (FD_REL_STEP, CrystalConfig, DispersionModel, Polarization,
                              RUTILE_EXTRAORDINARY, RUTILE_ORDINARY, _group_index, angle_to_axis,
                              constant_model, effective_index, group_velocity, index,
                              rutile_crystal)
from topdc.errors import OutOfValidityRange


def w(nm):
    return 2 * np.pi * C / (nm * 1e-9)


# golden values from the analytic oracle in tests/oracles.py
N_O_532 = 2.667789376220873
N_E_1596 = 2.7077445904941944
VG_O_532 = 90903552.72531359


def test_constant_model():
    assert index(constant_model(2.5), 1e15) == 2.5


def test_rutile_ordinary_532_golden():
    assert index(RUTILE_ORDINARY, w(532)) == pytest.approx(N_O_532, rel=1e-12)
    assert index(RUTILE_ORDINARY, w(532)) == pytest.approx(o_index(0.532)[0], rel=1e-12)


def test_rutile_extraordinary_1596_golden():
    assert index(RUTILE_EXTRAORDINARY, w(1596)) == pytest.approx(N_E_1596, rel=1e-12)


@pytest.mark.parametrize("nm", [420.0, 3100.0])
def test_outside_window_raises(nm):
    with pytest.raises(OutOfValidityRange):
        index(RUTILE_ORDINARY, w(nm))


def test_model_validation():
    with pytest.raises(ValueError):
        DispersionModel("sellmeier_one_pole", (1.0, 2.0))
    with pytest.raises(ValueError):
        constant_model(0.9)
    with pytest.raises(ValueError):
        DispersionModel("constant", (2.0,), (3e-6, 1e-6))


def test_crystal_validation():
    with pytest.raises(ValueError):
        CrystalConfig(length_L=0)
    with pytest.raises(ValueError):
        CrystalConfig(orientation_theta_c=2.0)
    with pytest.raises(ValueError):
        CrystalConfig(chi3_eff=-1)


def test_e_index_along_axis_is_ordinary():
    cr = rutile_crystal()
    assert effective_index(cr, "extraordinary", 0.0, w(1596)) == pytest.approx(
        index(RUTILE_ORDINARY, w(1596)), rel=1e-14)


def test_e_index_perpendicular_is_extraordinary():
    cr = rutile_crystal()
    assert effective_index(cr, "extraordinary", np.pi / 2, w(1596)) == pytest.approx(
        N_E_1596, rel=1e-14)


def test_e_index_45_constant_models():
    cr = CrystalConfig(disp_o=constant_model(2.0), disp_e=constant_model(3.0))
    expected = (0.5 / 4 + 0.5 / 9) ** -0.5
    assert effective_index(cr, "extraordinary", np.pi / 4, 1e15) == pytest.approx(expected, rel=1e-14)


def test_e_index_matches_oracle_at_angle():
    cr = rutile_crystal()
    psi = np.radians(68.24)
    assert effective_index(cr, "extraordinary", psi, w(1596)) == pytest.approx(
        e_index(1.596, psi)[0], rel=1e-12)


def test_e_index_monotone_between_principal_values():
    cr = rutile_crystal()
    psi = np.linspace(0, np.pi / 2, 91)
    n = effective_index(cr, "extraordinary", psi, w(1200))
    assert np.all(np.diff(n) > 0)


def test_ordinary_independent_of_angle():
    cr = rutile_crystal()
    n = effective_index(cr, Polarization.ORDINARY, np.linspace(0, np.pi, 7), w(800))
    assert np.all(n == n[0])


def test_angle_range_checked():
    with pytest.raises(ValueError):
        effective_index(rutile_crystal(), "extraordinary", -0.1, w(800))


def test_group_velocity_dispersionless():
    cr = CrystalConfig(disp_o=constant_model(2.5), disp_e=constant_model(2.5))
    assert group_velocity(cr, "ordinary", 0.0, 1e15) == pytest.approx(C / 2.5, rel=1e-12)


def test_group_velocity_golden():
    v = group_velocity(rutile_crystal(), "ordinary", 0.0, w(532))
    assert v == pytest.approx(VG_O_532, rel=1e-8)


def test_group_velocity_extraordinary_oracle():
    psi = np.radians(50.0)
    v = group_velocity(rutile_crystal(), "extraordinary", psi, w(1596))
    assert v == pytest.approx(C / e_index(1.596, psi)[1], rel=1e-8)


def test_group_velocity_step_halving():
    import topdc.dispersion as d

    cr = rutile_crystal()
    full = _group_index(cr, "extraordinary", 1.0, w(1300))[1]
    old = d.FD_REL_STEP
    try:
        d.FD_REL_STEP = old / 2
        half = _group_index(cr, "extraordinary", 1.0, w(1300))[1]
    finally:
        d.FD_REL_STEP = old
    assert abs(half / full - 1) < 1e-6


def test_group_velocity_below_c():
    cr = rutile_crystal()
    lam = np.linspace(440, 2990, 50)
    for pol in ("ordinary", "extraordinary"):
        assert np.all(group_velocity(cr, pol, 1.0, w(lam)) < C)


def test_group_velocity_stencil_checked():
    edge = RUTILE_ORDINARY.omega_range[1]
    with pytest.raises(OutOfValidityRange):
        group_velocity(rutile_crystal(), "ordinary", 0.0, edge * (1 - FD_REL_STEP / 2))


def test_angle_to_axis_cases():
    tc = np.radians(68.24)
    assert angle_to_axis(0.0, 0.0, tc) == pytest.approx(tc)
    assert angle_to_axis(0.1, 0.0, tc) == pytest.approx(tc - 0.1)
    assert angle_to_axis(0.1, np.pi, tc) == pytest.approx(tc + 0.1)
    # out of plane: cos = cos(theta) cos(tc)
    assert angle_to_axis(0.2, np.pi / 2, tc) == pytest.approx(np.arccos(np.cos(0.2) * np.cos(tc)))


def test_phase_matching_of_degenerate_collinear():
    # n_e at 68.24 deg and 1596 nm nearly equals n_o at 532 nm
    cr = rutile_crystal()
    ne = effective_index(cr, "extraordinary", np.radians(68.24), w(1596))
    assert abs(ne - N_O_532) < 1e-4
