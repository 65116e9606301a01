import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sgwave.ensembles import gaussian_wave_data, trig_field
from sgwave.estimators import (CutoffPicardSolver, DalembertInverse, FbsSampler, LittlewoodPaleyTransformer,
                               NullCoordinateTransformer, SobolevNormTransformer)
from sgwave.lp import mixed_norm
from sgwave.spectral import CARTESIAN, Field2, Grid2
from sgwave.wave_ops import dalembert_inverse_quadrature

GRID = Grid2(16.0, 64)


def _stack(n=3, **kw):
    rng = np.random.default_rng(0)
    return np.array([trig_field(GRID, rng, modes=6, envelope=1.5, **kw).values for _ in range(n)])


@pytest.mark.parametrize("est", [FbsSampler(n_points=64), NullCoordinateTransformer(), LittlewoodPaleyTransformer(),
                                 SobolevNormTransformer(), DalembertInverse(), CutoffPicardSolver(n_points=64)])
def test_params_and_clone(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params
    first = next(iter(params))
    est.set_params(**{first: params[first]})


@pytest.mark.parametrize("est, method", [(FbsSampler(n_points=64), "sample"),
                                         (NullCoordinateTransformer(), "transform"),
                                         (LittlewoodPaleyTransformer(), "transform"),
                                         (SobolevNormTransformer(), "transform"),
                                         (DalembertInverse(), "transform"),
                                         (CutoffPicardSolver(n_points=64), "predict")])
def test_not_fitted(est, method):
    with pytest.raises(NotFittedError):
        getattr(est, method)(np.zeros((1, 64, 64)))


def test_sampler_is_reproducible():
    a = FbsSampler(n_points=64, seed=5).fit().sample(2)
    b = FbsSampler(n_points=64, seed=5).fit().sample(2)
    assert a.shape == (2, 64, 64)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a[0], a[1])
    d = FbsSampler(n_points=64, seed=5).fit().sample(1, return_derivative=True)
    assert d.shape == (1, 64, 64)


def test_null_transformer_roundtrip():
    X = _stack(frame=CARTESIAN)
    t = NullCoordinateTransformer().fit(X)
    np.testing.assert_allclose(t.inverse_transform(t.transform(X)), X, atol=1e-10)
    with pytest.raises(ValueError):
        t.transform(np.zeros((1, 32, 32)))


def test_norm_and_lp_features():
    X = _stack()
    norms = SobolevNormTransformer(s=0.8, delta=0.8).fit_transform(X)
    assert norms.shape == (3, 1)
    assert norms[0, 0] == pytest.approx(mixed_norm(Field2(GRID, X[0]), 0.8, 0.8))
    feats = LittlewoodPaleyTransformer().fit_transform(X)
    assert feats.shape[0] == 3 and np.all(feats >= 0)


def test_dalembert_transformer_routes():
    X = _stack(2)
    q = DalembertInverse().fit_transform(X)
    np.testing.assert_allclose(q[1], dalembert_inverse_quadrature(Field2(GRID, X[1])).values)
    lp = DalembertInverse(route="lp").fit_transform(X)
    sp = DalembertInverse(method="spectral").fit_transform(X)
    assert np.max(np.abs(lp - sp)) < 1e-6 * np.max(np.abs(sp))
    with pytest.raises(ValueError):
        DalembertInverse(route="nope").fit(X)


def test_input_validation():
    with pytest.raises(ValueError):
        SobolevNormTransformer().fit(np.full((1, 64, 64), np.nan))
    with pytest.raises(ValueError):
        SobolevNormTransformer().fit(np.zeros((1, 64, 32)))
    with pytest.raises(ValueError):
        CutoffPicardSolver(n_points=64).fit(np.zeros((2, 64)))
    with pytest.raises(ValueError):
        CutoffPicardSolver(n_points=64, s=0.7).fit(np.zeros((2, 2, 64)))


def test_picard_solver_fit_predict():
    g = Grid2(16.0, 128)
    d = gaussian_wave_data()
    X = np.array([d.position(g.axis), d.velocity(g.axis)])
    est = CutoffPicardSolver(n_points=128, lam=16.0, seed=3).fit(X)
    assert est.state_.converged and est.lambda_ == 16.0 and est.residual_ < 1e-6
    pts = np.array([[0.0, 0.0], [0.05, -0.02]])
    out = est.predict(pts)
    assert out.shape == (2, 2) and np.all(np.isfinite(out))
    i = np.argmin(np.abs(est.solution_.u.grid.axis))
    np.testing.assert_allclose(out[0], est.solution_.u.values[:, i, i] + est.solution_.mean)
