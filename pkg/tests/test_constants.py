import dataclasses

import pytest

from topdc.constants import PhysicalConstants, default_constants


def test_codata_values():
    k = default_constants()
    assert k.hbar == pytest.approx(1.054571817e-34, rel=1e-9)
    assert k.c == 2.99792458e8
    assert k.eps0 == pytest.approx(8.8541878128e-12, rel=1e-9)


def test_immutable():
    with pytest.raises(dataclasses.FrozenInstanceError):
        default_constants().hbar = 1.0


@pytest.mark.parametrize("field", ["hbar", "eps0", "c"])
def test_positive(field):
    kw = dataclasses.asdict(default_constants())
    kw[field] = 0.0
    with pytest.raises(ValueError):
        PhysicalConstants(**kw)


def test_scaled_hbar_only():
    k = default_constants().scaled(hbar=2.0)
    assert k.hbar == 2 * default_constants().hbar
    assert k.c == default_constants().c
