import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgwave.ensembles import trig_field
from sgwave.lp import hyperbolic_norm, mixed_norm
from sgwave.null_coords import from_null, isomorphism_ratio, to_null
from sgwave.spectral import CARTESIAN, NULL, Field2, Grid2


def _gaussian(grid, frame, w=1.2):
    a, b = grid.mesh()
    return Field2(grid, np.exp(-(a**2 + b**2) / (2 * w * w)) * np.cos(a - 0.5 * b), frame)


def test_to_null_matches_change_of_variables(grid128):
    u = _gaussian(grid128, CARTESIAN)
    us = to_null(u)
    a, b = grid128.mesh()
    t, x = (a + b) / 2, (a - b) / 2
    exact = np.exp(-(t**2 + x**2) / (2 * 1.44)) * np.cos(t - 0.5 * x)
    assert np.max(np.abs(us.values - exact)) < 1e-12
    assert us.frame == NULL


def test_round_trips(grid128):
    u = _gaussian(grid128, CARTESIAN)
    np.testing.assert_allclose(from_null(to_null(u)).values, u.values, atol=1e-13)
    v = _gaussian(grid128, NULL, w=1.0)
    np.testing.assert_allclose(to_null(from_null(v)).values, v.values, atol=1e-12)


def test_frame_and_support_checks(grid128):
    with pytest.raises(ValueError):
        to_null(_gaussian(grid128, NULL))
    wide = Field2(grid128, np.ones((128, 128)), CARTESIAN)
    with pytest.raises(ValueError):
        to_null(wide)


def test_isomorphism_ratio_at_zero_order_is_two(grid128):
    # the null map doubles areas, and the mixed norm counts L2 twice
    u = _gaussian(grid128, CARTESIAN)
    assert isomorphism_ratio(u, 0.0, 0.0) == pytest.approx(2.0, rel=1e-10)


def test_isomorphism_ratio_preconditions(grid128):
    with pytest.raises(ValueError):
        isomorphism_ratio(_gaussian(grid128, CARTESIAN), 0.5, 0.8)
    with pytest.raises(ValueError):
        isomorphism_ratio(Field2.zeros(grid128, CARTESIAN), 0.8, 0.8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_isomorphism_ratio_two_sided(seed):
    g = Grid2(16.0, 128)
    u = trig_field(g, np.random.default_rng(seed), modes=10, envelope=1.2, frame=CARTESIAN)
    r = isomorphism_ratio(u, 0.8, 0.8)
    assert 0.5 < r < 2.0
