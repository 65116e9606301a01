import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgwave import fbs
from sgwave.spectral import Grid2


def test_covariance_function_properties():
    assert fbs.covariance_R(0.7, 1.0, 1.0) == pytest.approx(1.0)
    assert fbs.covariance_R(0.5, 2.0, 3.0) == pytest.approx(2.0)
    assert fbs.covariance_R(0.8, 0.0, 2.0) == 0.0


def test_hurst_validation():
    with pytest.raises(ValueError):
        fbs.HurstPair(1.2, 0.5)
    with pytest.raises(ValueError):
        fbs.HurstPair(0.9, 0.7).require_above(0.8)


def test_sheet_is_even_and_vanishes_on_axes(grid128):
    smp = fbs.sample_sheet(grid128, fbs.HurstPair(0.85, 0.8), 3)
    v = smp.sheet.values
    assert np.all(v[64, :] == 0) and np.all(v[:, 64] == 0)
    r = np.arange(1, 128)
    np.testing.assert_array_equal(v[r][:, r], v[128 - r][:, r])
    np.testing.assert_array_equal(v[r][:, r], v[r][:, 128 - r])


def test_sampling_is_deterministic(grid128):
    h = fbs.HurstPair(0.85, 0.8)
    a = fbs.sample_sheet(grid128, h, 11).sheet.values
    b = fbs.sample_sheet(grid128, h, 11).sheet.values
    c = fbs.sample_sheet(grid128, h, 12).sheet.values
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_increments_sum_to_sheet(grid128):
    smp = fbs.sample_sheet(grid128, fbs.HurstPair(0.85, 0.8), 5)
    inc = smp.increments()
    # summing cell increments over [0, a] x [0, b] telescopes to X(a, b)
    quad = np.cumsum(np.cumsum(inc[64:, 64:], axis=0), axis=1)
    np.testing.assert_allclose(quad[:-1, :-1], smp.sheet.values[65:, 65:], atol=1e-12)


def test_kronecker_equals_dense():
    g = Grid2(16.0, 16)
    h = fbs.HurstPair(0.85, 0.8)
    assert np.max(np.abs(fbs.kronecker_covariance(g, h) - fbs.dense_covariance(g, h))) < 1e-10


def test_dense_sampler_has_same_law_structure():
    g = Grid2(16.0, 16)
    smp = fbs.sample_sheet_dense(g, fbs.HurstPair(0.7, 0.7), 1)
    assert smp.sheet.values.shape == (16, 16)
    assert np.all(smp.sheet.values[8, :] == 0)


def test_rect_variance_exact_brownian():
    assert fbs.rect_variance_exact(fbs.HurstPair(0.5, 0.5), 0, 2, 0, 3) == pytest.approx(6.0)
    assert fbs.rect_variance_exact(fbs.HurstPair(0.85, 0.8), 0, 1, 0, 1) == pytest.approx(1.0)


def test_rect_variance_needs_replicates(grid128):
    ens = fbs.sample_ensemble(Grid2(16.0, 32), fbs.HurstPair(0.8, 0.8), 0, 10)
    with pytest.raises(ValueError):
        fbs.rect_increment_variance(ens, Grid2(16.0, 32), 0, 1, 0, 1)


def test_empirical_law_small_ensemble():
    g = Grid2(16.0, 64)
    h = fbs.HurstPair(0.7, 0.9)
    ens = fbs.sample_ensemble(g, h, 99, 800)
    var, se = fbs.rect_increment_variance(ens, g, 0.5, 1.5, 0.0, 2.0)
    assert abs(var - fbs.rect_variance_exact(h, 0.5, 1.5, 0.0, 2.0)) < 5 * se
    skew, kurt = fbs.standardized_moments(ens, [(3, 3), (7, 2), (10, 12)])
    assert abs(skew) < 0.2 and abs(kurt - 3) < 0.4


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 0.95), st.floats(0.3, 0.95))
def test_axis_factor_reproduces_covariance(h1, h2):
    g = Grid2(16.0, 32)
    c1, c2 = fbs.axis_factors(g, fbs.HurstPair(h1, h2))
    np.testing.assert_allclose(c1 @ c1.T, fbs.axis_covariance(g, h1), atol=1e-9)
    np.testing.assert_allclose(c2 @ c2.T, fbs.axis_covariance(g, h2), atol=1e-9)


def test_coarsen_is_nested(grid256):
    smp = fbs.sample_sheet(grid256, fbs.HurstPair(0.85, 0.85), 2)
    c = fbs.coarsen(smp)
    assert c.grid == Grid2(16.0, 128)
    np.testing.assert_array_equal(c.sheet.values, smp.sheet.values[::2, ::2])


def test_regularity_norm_is_finite_and_grows_with_order(grid256):
    smp = fbs.sample_sheet(grid256, fbs.HurstPair(0.85, 0.85), 4)
    low = fbs.regularity_check(smp, 0.5, 0.5)
    high = fbs.regularity_check(smp, 0.8, 0.8)
    assert 0 < low < high < np.inf


@pytest.fixture(scope="module")
def nested_sheets():
    fine = fbs.sample_sheet(Grid2(), fbs.HurstPair(0.85, 0.85), 1)
    return fbs.coarsen(fine), fine


def _refinement_ratio(pair, hp):
    coarse, fine = pair
    return fbs.regularity_check(fine, hp, hp) / fbs.regularity_check(coarse, hp, hp)


def test_regularity_zero_sheet(grid128):
    from sgwave.spectral import Field2

    assert fbs.regularity_check(Field2.zeros(grid128), 0.5, 0.5) == 0.0


def test_regularity_stable_below_hurst(nested_sheets):
    assert _refinement_ratio(nested_sheets, 0.5) <= 1.5


def test_regularity_grows_above_hurst(nested_sheets):
    # growth is visible but slow: the excess 0.1 over H adds about 2^0.1 per axis and doubling
    assert _refinement_ratio(nested_sheets, 0.95) > 1.1 * _refinement_ratio(nested_sheets, 0.5)


@pytest.mark.xfail(strict=True, reason="a 0.1 excess over H gives about 1.2 per doubling, not 2")
def test_regularity_divergence_witness_factor_two(nested_sheets):
    assert _refinement_ratio(nested_sheets, 0.95) >= 2.0


def test_gaussian_marginals_at_2000_replicates():
    g = Grid2(16.0, 64)
    ens = fbs.sample_ensemble(g, fbs.HurstPair(0.85, 0.80), 2024, 2000)
    points = [(i, k) for i in (2, 9, 17, 30) for k in (4, 15, 28)]
    skew, kurt = fbs.standardized_moments(ens, points)
    assert abs(skew) <= 0.1 and abs(kurt - 3.0) <= 0.2
