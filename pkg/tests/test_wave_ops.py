import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgwave import wave_ops
from sgwave.ensembles import trig_field
from sgwave.fbs import HurstPair, sample_sheet
from sgwave.geometry import DiffusionCoeff
from sgwave.lp import build_partition
from sgwave.spectral import NULL, Field2, Grid2
from sgwave.wave_ops import InitialData


def _pair(f):
    return lambda x: np.array([f(x), np.zeros_like(x)])


def test_homogeneous_constant_position(grid128):
    d = InitialData(lambda x: np.array([np.full_like(x, 2.5), np.full_like(x, -1.0)]), _pair(np.zeros_like))
    S = wave_ops.homogeneous_solution(d, grid128)
    np.testing.assert_allclose(S.values[0], 2.5, atol=1e-14)
    np.testing.assert_allclose(S.values[1], -1.0, atol=1e-14)


def test_homogeneous_unit_velocity(grid128):
    d = InitialData(_pair(np.zeros_like), _pair(np.ones_like))
    a, b = grid128.mesh()
    S = wave_ops.homogeneous_solution(d, grid128)
    np.testing.assert_allclose(S.values[0], (a + b) / 2, atol=1e-12)
    assert not np.any(S.values[1])


def test_homogeneous_quadratic_position(grid128):
    d = InitialData(_pair(lambda x: x**2), _pair(np.zeros_like))
    a, b = grid128.mesh()
    S = wave_ops.homogeneous_solution(d, grid128)
    np.testing.assert_allclose(S.values[0], (a**2 + b**2) / 2, atol=1e-12)


def test_homogeneous_simpson_is_more_accurate(grid128):
    d = InitialData(_pair(np.zeros_like), _pair(lambda x: np.cos(0.7 * x)))
    a, b = grid128.mesh()
    exact = (np.sin(0.7 * a) + np.sin(0.7 * b)) / 1.4
    err_t = np.max(np.abs(wave_ops.homogeneous_solution(d, grid128).values[0] - exact))
    err_s = np.max(np.abs(wave_ops.homogeneous_solution(d, grid128, "simpson").values[0] - exact))
    assert err_s < err_t < grid128.spacing**2
    with pytest.raises(ValueError):
        wave_ops.homogeneous_solution(d, grid128, "midpoint")


def test_initial_data_from_arrays(grid128):
    x = grid128.axis
    d = InitialData.from_arrays(grid128, np.array([np.sin(x / 4), x * 0]), np.zeros((2, 128)))
    pts = np.array([0.1, -3.3, 7.77])
    np.testing.assert_allclose(d.position(pts)[0], np.sin(pts / 4), atol=1e-4)


def test_quadrature_linear_source(grid256):
    a, b = grid256.mesh()
    F = wave_ops.dalembert_inverse_quadrature(Field2(grid256, a + b))
    err = np.max(np.abs(F.values - (a + b) ** 3 / 24))
    # trapezoid error of the outer sweep is second order with constant 8/3 on this box
    assert err < 3 * grid256.spacing**2


def test_quadrature_unit_source_is_exact(grid128):
    a, b = grid128.mesh()
    F = wave_ops.dalembert_inverse_quadrature(Field2(grid128, np.ones_like(a)))
    np.testing.assert_allclose(F.values, (a + b) ** 2 / 8, atol=1e-12)


def test_quadrature_boundary_conditions(grid256, rng):
    f = trig_field(grid256, rng, modes=6, envelope=3.0)
    F = wave_ops.dalembert_inverse_quadrature(f)
    h2 = grid256.spacing**2
    assert np.max(np.abs(wave_ops.diagonal_trace(F))) < 1e-13
    inner = np.abs(grid256.axis[2:-1]) <= 4
    assert np.max(np.abs(wave_ops.diagonal_flux(F))[inner]) < 5 * h2
    win = wave_ops.window_mask(grid256, 6.0)
    assert np.max(np.abs(wave_ops.box_central(F) - f.values)[win]) < 5 * np.max(np.abs(f.values)) * 10 * h2


def _cos_cos_oracle(k1, k2, a, b):
    # (1/4) int_{-b}^{a} int_{-x}^{b} cos(k1 x) cos(k2 y) dy dx, with k1 != k2
    first = np.sin(k2 * b) * (np.sin(k1 * a) + np.sin(k1 * b)) / (k1 * k2)

    def prim(x):
        return -0.5 * (np.cos((k1 + k2) * x) / (k1 + k2) + np.cos((k2 - k1) * x) / (k2 - k1))

    return 0.25 * (first + (prim(a) - prim(-b)) / k2)


@pytest.mark.parametrize("m1, m2", [(40, 24), (24, 40), (3, 40), (40, 3), (1, 2)])
def test_lp_route_matches_closed_form(grid256, m1, m2):
    a, b = grid256.mesh()
    k1, k2 = np.pi * m1 / 16, np.pi * m2 / 16
    f = Field2(grid256, np.cos(k1 * a) * np.cos(k2 * b))
    F = wave_ops.dalembert_inverse_lp(f)
    np.testing.assert_allclose(F.values, _cos_cos_oracle(k1, k2, a, b), atol=1e-8)


def test_lp_pieces_separate_blocks(grid256):
    a, b = grid256.mesh()
    k = np.pi * 40 / 16
    f = Field2(grid256, np.cos(k * a) * np.cos(k * b))
    pieces = wave_ops.lp_pieces(f)
    for piece in (pieces.H, pieces.I, pieces.J):
        assert np.max(np.abs(piece)) < 1e-12
    assert np.max(np.abs(pieces.G)) > 1e-3


def test_routes_agree_on_smooth_fields(grid256, rng):
    f = trig_field(grid256, rng, modes=12, envelope=2.0)
    p = build_partition(grid256)
    lp_F = wave_ops.dalembert_inverse(f, "lp", p=p).values
    q_F = wave_ops.dalembert_inverse(f, "quadrature", method="spectral").values
    assert np.max(np.abs(lp_F - q_F)) <= 1e-8 * np.max(np.abs(q_F))
    with pytest.raises(ValueError):
        wave_ops.dalembert_inverse(f, "fourier")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_inverse_is_linear(seed, c1, c2):
    g = Grid2(16.0, 64)
    rng = np.random.default_rng(seed)
    f, h = trig_field(g, rng, modes=5), trig_field(g, rng, modes=5)
    for route in ("quadrature", "lp"):
        lhs = wave_ops.dalembert_inverse(f * c1 + h * c2, route).values
        rhs = c1 * wave_ops.dalembert_inverse(f, route).values + c2 * wave_ops.dalembert_inverse(h, route).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.max(np.abs(rhs))))


def test_stochastic_zero_sigma(grid128, rng):
    u = trig_field(grid128, rng, vector=True)
    smp = sample_sheet(grid128, HurstPair(0.85, 0.85), 1)
    out = wave_ops.stochastic_convolution(u, DiffusionCoeff(), smp)
    assert not np.any(out.values)


def test_stochastic_unit_sigma_deterministic_sheet(grid256):
    # the sheet a b has cell increments dx^2, so the sum is a Riemann sum of box^-1 1
    u = Field2.zeros(grid256, arity="vector2")
    sig = DiffusionCoeff("constant", 0.0, (1.0, 1.0))
    inc = np.full((256, 256), grid256.spacing**2)
    out = wave_ops.stochastic_convolution(u, sig, inc)
    exact = wave_ops.dalembert_inverse_quadrature(Field2(grid256, np.ones((256, 256)))).values
    win = wave_ops.window_mask(grid256, 8.0)
    for comp in range(2):
        assert np.max(np.abs(out.values[comp] - exact)[win]) < 20 * grid256.spacing


def test_stochastic_density_and_array_inputs_agree(grid128, rng):
    u = trig_field(grid128, rng, vector=True) * 0.3
    smp = sample_sheet(grid128, HurstPair(0.85, 0.85), 2)
    sig = DiffusionCoeff("sin", 1.0)
    a = wave_ops.stochastic_convolution(u, sig, smp).values
    b = wave_ops.stochastic_convolution(u, sig, smp.derivative).values
    c = wave_ops.stochastic_convolution(u, sig, smp.increments()).values
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(a, c, atol=1e-12)


def test_stochastic_rejects_rough_sheets(grid128):
    u = Field2.zeros(grid128, arity="vector2")
    with pytest.raises(ValueError):
        wave_ops.stochastic_convolution(u, DiffusionCoeff("sin", 1.0), np.zeros((128, 128)), HurstPair(0.4, 0.8))
    with pytest.raises(ValueError):
        wave_ops.stochastic_convolution(Field2.zeros(grid128), DiffusionCoeff("sin", 1.0), np.zeros((128, 128)))


def test_inverse_estimate_check_preconditions(grid128, rng):
    with pytest.raises(ValueError):
        wave_ops.inverse_estimate_check([trig_field(grid128, rng)], 0.7, 0.7)
    rep = wave_ops.inverse_estimate_check([Field2.zeros(grid128), trig_field(grid128, rng, envelope=1.2)], 0.8, 0.8)
    assert rep.skipped == 1 and len(rep.ratios) == 1 and rep.max_ratio > 0
