import warnings

import numpy as np
import pytest

from sgwave import solver
from sgwave.cutoffs import CutoffPair
from sgwave.ensembles import gaussian_wave_data
from sgwave.fbs import FbsSample, HurstPair, sample_sheet
from sgwave.geometry import ChristoffelTable, DiffusionCoeff
from sgwave.spectral import NULL, Field2, Grid2
from sgwave.wave_ops import InitialData, dalembert_inverse_quadrature, homogeneous_solution, stochastic_convolution

GRID = Grid2(16.0, 128)


def _const(c0, c1=0.0):
    return lambda x: np.array([np.full_like(x, c0), np.full_like(x, c1)])


def _cfg(**kw):
    return solver.SolverConfig(grid=GRID, **kw)


@pytest.fixture(scope="module")
def sample():
    return sample_sheet(GRID, HurstPair(0.85, 0.85), 17)


def _product_sheet(c):
    a, b = GRID.mesh()
    sheet = Field2(GRID, c * a * b)
    return FbsSample(GRID, sheet, Field2(GRID, np.full((128, 128), float(c))), 0, HurstPair(0.85, 0.85))


def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(s=0.8, delta=0.9)
    with pytest.raises(ValueError):
        _cfg(s=0.8, delta=0.75)
    with pytest.raises(ValueError):
        _cfg(hurst=HurstPair(0.7, 0.9))
    with pytest.raises(ValueError):
        _cfg(lam=0.5)
    with pytest.raises(ValueError):
        _cfg(derivative="upwind")


def test_scale_data_constant_position():
    d = InitialData(_const(0.7, -0.2), _const(0.4))
    scaled, mean = solver.scale_data(d, 4.0)
    np.testing.assert_allclose(mean, [0.7, -0.2], atol=1e-14)
    x = np.linspace(-5, 5, 41)
    assert np.max(np.abs(scaled.position(x))) < 1e-14
    np.testing.assert_allclose(scaled.velocity(x)[0], CutoffPair().chi(x) * 0.1, atol=1e-15)
    with pytest.raises(ValueError):
        solver.scale_data(d, 0.5)


def test_scale_data_centers_shift_arguments():
    d = InitialData(lambda x: np.array([x, 0 * x]), _const(0.0))
    scaled, mean = solver.scale_data(d, 2.0, center=1.5)
    # psi is even, so the average of a linear function is its value at the center
    assert mean[0] == pytest.approx(1.5, abs=1e-12)
    x = np.array([-1.0, 0.0, 1.0])
    np.testing.assert_allclose(scaled.position(x)[0], x / 2, atol=1e-12)


def test_scale_noise_product_sheet():
    out = solver.scale_noise(_product_sheet(3.0), 2.0)
    np.testing.assert_allclose(out.values, 3.0 / 4, atol=1e-12)


def test_scale_noise_identity_and_window(sample):
    assert solver.scale_noise(sample, 1.0) is sample.derivative
    with pytest.raises(ValueError):
        solver.scale_noise(sample, 1.0, center=1.0)
    with pytest.raises(ValueError):
        solver.scale_noise(sample, 0.9)
    solver.scale_noise(sample, 2.0, center=4.0)


def test_noise_scaling_bound_decays(sample):
    vals = [solver.noise_scaling_bound(sample, lam, 0.8, 0.8) for lam in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_theta_map_zero_problem(sample):
    u = Field2.zeros(GRID, arity="vector2")
    out = solver.theta_map(u, _cfg(), InitialData.zero(), sample, ChristoffelTable.flat(), DiffusionCoeff())
    assert not np.any(out.values)


def test_theta_map_is_window_times_free_wave(sample):
    d = gaussian_wave_data()
    cfg = _cfg(lam=2.0)
    u = Field2.zeros(GRID, arity="vector2")
    out = solver.theta_map(u, cfg, d, sample, ChristoffelTable.flat(), DiffusionCoeff())
    scaled, _ = solver.scale_data(d, 2.0)
    exact = homogeneous_solution(scaled, GRID).values * CutoffPair().window(GRID)
    np.testing.assert_allclose(out.values, exact, atol=1e-14)


def test_theta_map_warns_outside_ball(sample):
    big = Field2(GRID, np.ones((2, 128, 128)))
    with pytest.warns(RuntimeWarning):
        solver.theta_map(big, _cfg(), InitialData.zero(), sample, ChristoffelTable.flat(), DiffusionCoeff())


def test_picard_zero_problem_one_iteration(sample):
    st, u = solver.picard_solve(_cfg(), InitialData.zero(), sample, ChristoffelTable.flat(), DiffusionCoeff())
    assert st.converged and st.iteration == 1 and not np.any(u.values)


def test_picard_flat_problem_two_iterations(sample):
    st, _ = solver.picard_solve(_cfg(lam=16.0), gaussian_wave_data(), sample,
                                ChristoffelTable.flat(), DiffusionCoeff())
    assert st.converged and st.iteration == 2 and st.increments[-1] == 0.0
    assert st.factors == [0.0]
    rows = st.trace_rows()
    assert len(rows) == 2 and np.isnan(rows[0][2])


def test_linear_limit_matches_closed_form(sample):
    # with a flat target and constant sigma the map is affine and independent of u
    cfg = _cfg(lam=16.0)
    sig = DiffusionCoeff("constant", 0.0, (0.05, -0.05))
    d = gaussian_wave_data()
    st, u = solver.picard_solve(cfg, d, sample, ChristoffelTable.flat(), sig)
    scaled, _ = solver.scale_data(d, 16.0)
    inc = solver.scale_noise(sample, 16.0).values * GRID.spacing**2
    zero = Field2.zeros(GRID, arity="vector2")
    exact = (homogeneous_solution(scaled, GRID) + stochastic_convolution(zero, sig, inc)) * CutoffPair().window(GRID)
    np.testing.assert_allclose(u.values, exact.values, atol=1e-14)
    assert st.iteration == 2


def test_choose_lambda_small_data(sample):
    table = ChristoffelTable.random(2, 0.1, 3)
    sig = DiffusionCoeff("sin_cos", 0.1)
    assert solver.choose_lambda(_cfg(), InitialData.zero(), sample, ChristoffelTable.flat(), DiffusionCoeff()) == 1.0
    assert solver.choose_lambda(_cfg(), gaussian_wave_data(0.001, 0.001), sample, table, DiffusionCoeff()) == 1.0
    with pytest.raises(solver.LambdaCapError):
        solver.choose_lambda(_cfg(lambda_cap=1.0), gaussian_wave_data(3.0, 3.0), sample, table, sig)


def test_choose_lambda_monotone_in_amplitude(sample):
    table = ChristoffelTable.random(2, 0.1, 3)
    sig = DiffusionCoeff("sin_cos", 0.1)
    lams = [solver.choose_lambda(_cfg(), gaussian_wave_data(a, a), sample, table, sig)
            for a in (0.01, 0.1, 0.3, 0.6)]
    assert lams == sorted(lams)
    assert all(np.log2(l) == int(np.log2(l)) for l in lams)


def test_ball_exit_and_divergence(sample):
    d = gaussian_wave_data(5.0, 5.0)
    with pytest.raises(solver.BallExitError):
        solver.picard_solve(_cfg(), d, sample, ChristoffelTable.flat(), DiffusionCoeff())
    strong = ChristoffelTable.random(2, 5.0, 1)
    with pytest.raises(solver.DivergedError):
        solver.picard_solve(_cfg(enforce_ball=False), gaussian_wave_data(1.0, 1.0), sample, strong,
                            DiffusionCoeff("sin", 5.0))


def test_rescale_relabels_grid():
    u = Field2(GRID, np.random.default_rng(0).standard_normal((2, 128, 128)))
    r = solver.rescale_solution(u, 4.0)
    assert r.grid == Grid2(4.0, 128)
    np.testing.assert_array_equal(r.values, u.values)
    with pytest.raises(ValueError):
        solver.rescale_solution(u, 0.5)


def test_solve_local_and_residual(sample):
    cfg = _cfg(lam=16.0)
    table = ChristoffelTable.random(2, 0.1, 3)
    sig = DiffusionCoeff("sin_cos", 0.1)
    d = gaussian_wave_data()
    sol = solver.solve_local(cfg, d, sample, table, sig)
    assert sol.state.converged and sol.certified(cfg.r0)
    assert sol.residual < 1e-6
    assert sol.u.grid == Grid2(1.0, 128)
    # the zero field is not a solution of the rescaled problem
    assert solver.residual(Field2.zeros(sol.u.grid, arity="vector2"), cfg, d, sample, table, sig) > 1e-3
    with pytest.raises(ValueError):
        solver.residual(Field2.zeros(GRID, arity="vector2"), cfg, d, sample, table, sig)


def test_two_starts_reach_same_fixed_point(sample):
    cfg = _cfg(lam=16.0)
    table = ChristoffelTable.random(2, 0.1, 3)
    sig = DiffusionCoeff("sin_cos", 0.1)
    d = gaussian_wave_data()
    _, u0 = solver.picard_solve(cfg, d, sample, table, sig)
    start = Field2(GRID, 0.01 * np.random.default_rng(1).standard_normal((2, 128, 128)))
    _, u1 = solver.picard_solve(cfg, d, sample, table, sig, start=start)
    assert cfg.norm(u0 - u1) < 1e-7


def test_single_center_glue(sample):
    cfg = _cfg()
    rep = solver.glue_solutions([0.0], cfg, gaussian_wave_data(), sample, ChristoffelTable.flat(),
                                DiffusionCoeff(), lam=16.0)
    assert rep.success and rep.disagreements == {} and len(rep.solutions) == 1


def test_glue_linear_problem_agrees(sample):
    cfg = _cfg()
    h = GRID.spacing / 16.0
    rep = solver.glue_solutions([0.0, 3 * h], cfg, gaussian_wave_data(), sample, ChristoffelTable.flat(),
                                DiffusionCoeff(), lam=16.0)
    assert rep.centers == [0.0, 3 * h]
    assert rep.success and rep.max_disagreement < 1e-12
    assert list(rep.overlap_cells.values())[0] > 10


def test_snap_centers():
    assert solver.snap_centers([0.0, 0.1], GRID, 4.0) == [0.0, 0.125]
