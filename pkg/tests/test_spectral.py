import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgwave.spectral import (CARTESIAN, NULL, Field2, Grid2, central_derivative, cumulative_integral, dft2, idft2,
                             load_field, mixed_derivative, save_field, spectral_derivative)


def test_grid_geometry():
    g = Grid2(16.0, 512)
    assert g.spacing == pytest.approx(1 / 16)
    assert g.axis[0] == -16.0 and g.axis[256] == 0.0
    assert g.extended_axis[-1] == pytest.approx(16.0)
    assert np.max(np.abs(g.freqs)) == pytest.approx(np.pi * 256 / 16)
    np.testing.assert_array_equal(g.reflected_index()[:3], [512, 511, 510])


@pytest.mark.parametrize("n", [3, 100, 0])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        Grid2(16.0, n)


def test_dft_matches_continuous_gaussian_transform(grid128):
    a, b = grid128.mesh()
    f = Field2(grid128, np.exp(-(a**2 + b**2) / 2), NULL)
    tau, xi = grid128.freq_mesh()
    exact = 2 * np.pi * np.exp(-(tau**2 + xi**2) / 2)
    assert np.max(np.abs(dft2(f).coefficients - exact)) < 1e-12


def test_parseval_and_single_mode_norm(grid128, rng):
    f = Field2(grid128, rng.standard_normal((128, 128)), NULL)
    s = dft2(f)
    assert np.sum(np.abs(s.coefficients) ** 2) * s.normalization == pytest.approx(f.l2_norm() ** 2, rel=1e-12)
    a, b = grid128.mesh()
    mode = Field2(grid128, np.cos(np.pi * 3 * a / 16), NULL)
    # a unit-amplitude mode has L2 norm 2L / sqrt(2)
    assert mode.l2_norm() == pytest.approx(32 / np.sqrt(2), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_dft_roundtrip_and_linearity(seed, c1, c2):
    g = Grid2(16.0, 32)
    r = np.random.default_rng(seed)
    u = Field2(g, r.standard_normal((32, 32)), NULL)
    v = Field2(g, r.standard_normal((32, 32)), NULL)
    np.testing.assert_allclose(idft2(dft2(u)).values, u.values, atol=1e-12)
    lhs = dft2(u * c1 + v * c2).coefficients
    rhs = c1 * dft2(u).coefficients + c2 * dft2(v).coefficients
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_derivatives_on_periodic_mode(grid128):
    a, b = grid128.mesh()
    k = 2 * np.pi / 16
    f = Field2(grid128, np.sin(k * a) * np.cos(k * b), NULL)
    np.testing.assert_allclose(spectral_derivative(f, 0).values, k * np.cos(k * a) * np.cos(k * b), atol=1e-12)
    np.testing.assert_allclose(mixed_derivative(f).values, -k * k * np.cos(k * a) * np.sin(k * b), atol=1e-12)
    err = np.max(np.abs(central_derivative(f, "beta").values + k * np.sin(k * a) * np.sin(k * b)))
    assert err < k**3 * grid128.spacing**2


@pytest.mark.parametrize("method,tol", [("trapezoid", 5e-3), ("spectral", 1e-12)])
def test_cumulative_integral_of_gaussian(method, tol):
    from scipy.special import erf

    g = Grid2(16.0, 128)
    x = g.extended_axis
    c = cumulative_integral(np.exp(-g.axis**2), g.spacing, method=method)
    exact = np.sqrt(np.pi) / 2 * (erf(x) + 1)
    assert c.shape == (129,)
    assert np.max(np.abs(c - exact)) < tol


def test_field_arithmetic_checks_frames(grid128):
    u = Field2.zeros(grid128, NULL)
    v = Field2.zeros(grid128, CARTESIAN)
    with pytest.raises(ValueError):
        u + v
    with pytest.raises(ValueError):
        u + Field2.zeros(Grid2(16.0, 64), NULL)


def test_save_load_roundtrip(tmp_path, grid128, rng):
    f = Field2(grid128, rng.standard_normal((2, 128, 128)), NULL)
    save_field(f, tmp_path / "field")
    g = load_field(tmp_path / "field.bin")
    assert g.grid == grid128 and g.frame == NULL
    np.testing.assert_array_equal(g.values, f.values)
    raw = np.fromfile(tmp_path / "field.bin", dtype="<f8")
    np.testing.assert_array_equal(raw, f.values.ravel())
