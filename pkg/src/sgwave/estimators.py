"""scikit-learn style wrappers around the numerical modules.

The wrappers hold hyperparameters in ``__init__`` (so ``get_params`` and
``set_params`` work), learn only grid geometry in ``fit`` and delegate the
numerics to the functional API.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import fbs, lp, null_coords, solver, wave_ops
from .cutoffs import CutoffPair
from .geometry import ChristoffelTable, DiffusionCoeff
from .spectral import CARTESIAN, NULL, Field2, Grid2
from .validation import check_exponents, check_field_stack, check_positive_int, check_seed, check_unit_interval


def _check_fitted(est, attr: str):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class FbsSampler(BaseEstimator):
    """Draws fractional Brownian sheets on a fixed grid.

    ``fit`` factorises the two axis covariances once; ``sample`` reuses them.
    """

    def __init__(self, h1=0.85, h2=0.85, half_width=16.0, n_points=512, seed=0):
        self.h1 = h1
        self.h2 = h2
        self.half_width = half_width
        self.n_points = n_points
        self.seed = seed

    def fit(self, X=None, y=None):
        self.hurst_ = fbs.HurstPair(check_unit_interval(self.h1, "h1"), check_unit_interval(self.h2, "h2"))
        self.grid_ = Grid2(self.half_width, check_positive_int(self.n_points, "n_points"))
        self.factors_ = fbs.axis_factors(self.grid_, self.hurst_)
        return self

    def sample(self, n_samples=1, return_derivative=False):
        """Stack of sheets (or their mixed difference quotients), one per child seed."""
        _check_fitted(self, "factors_")
        n_samples = check_positive_int(n_samples, "n_samples")
        children = np.random.SeedSequence(check_seed(self.seed)).spawn(n_samples)
        out = []
        for child in children:
            seed = int(child.generate_state(1, dtype=np.uint64)[0])
            smp = fbs.sample_sheet(self.grid_, self.hurst_, seed, self.factors_)
            out.append((smp.derivative if return_derivative else smp.sheet).values)
        return np.array(out)


class NullCoordinateTransformer(TransformerMixin, BaseEstimator):
    """Maps cartesian fields to null coordinates and back."""

    def __init__(self, half_width=16.0, check_support=True):
        self.half_width = half_width
        self.check_support = check_support

    def fit(self, X, y=None):
        arr = check_field_stack(X)
        self.grid_ = Grid2(self.half_width, arr.shape[-1])
        return self

    def transform(self, X):
        _check_fitted(self, "grid_")
        arr = check_field_stack(X, self.grid_.n)
        return np.array([null_coords.to_null(Field2(self.grid_, v, CARTESIAN), self.check_support).values
                         for v in arr])

    def inverse_transform(self, X):
        _check_fitted(self, "grid_")
        arr = check_field_stack(X, self.grid_.n)
        return np.array([null_coords.from_null(Field2(self.grid_, v, NULL), self.check_support).values
                         for v in arr])


class LittlewoodPaleyTransformer(TransformerMixin, BaseEstimator):
    """Features ``||Delta_{j,k} f||_2^2`` for all shell pairs, flattened row-major."""

    def __init__(self, half_width=16.0):
        self.half_width = half_width

    def fit(self, X, y=None):
        arr = check_field_stack(X)
        self.grid_ = Grid2(self.half_width, arr.shape[-1])
        self.partition_ = lp.build_partition(self.grid_)
        self.n_shells_ = self.partition_.j_max + 1
        return self

    def transform(self, X):
        _check_fitted(self, "partition_")
        arr = check_field_stack(X, self.grid_.n)
        return np.array([lp.block_energies(Field2(self.grid_, v, NULL), self.partition_).ravel() for v in arr])


class SobolevNormTransformer(TransformerMixin, BaseEstimator):
    """One column holding the chosen norm of each field."""

    def __init__(self, s=0.8, delta=0.8, family=lp.MIXED, half_width=16.0):
        self.s = s
        self.delta = delta
        self.family = family
        self.half_width = half_width

    def fit(self, X, y=None):
        arr = check_field_stack(X)
        self.spec_ = lp.NormSpec(float(self.s), float(self.delta), self.family)
        self.grid_ = Grid2(self.half_width, arr.shape[-1])
        self.partition_ = lp.build_partition(self.grid_)
        return self

    def transform(self, X):
        _check_fitted(self, "spec_")
        arr = check_field_stack(X, self.grid_.n)
        frame = CARTESIAN if self.family == lp.HYPERBOLIC else NULL
        return np.array([[lp.norm(Field2(self.grid_, v, frame), self.spec_, self.partition_)] for v in arr])


class DalembertInverse(TransformerMixin, BaseEstimator):
    """Solves ``4 d_a d_b F = f`` with vanishing Cauchy data on the anti-diagonal."""

    def __init__(self, route="quadrature", method="trapezoid", half_width=16.0):
        self.route = route
        self.method = method
        self.half_width = half_width

    def fit(self, X, y=None):
        if self.route not in ("quadrature", "lp"):
            raise ValueError(f"route must be 'quadrature' or 'lp', got {self.route!r}")
        arr = check_field_stack(X)
        self.grid_ = Grid2(self.half_width, arr.shape[-1])
        self.partition_ = lp.build_partition(self.grid_) if self.route == "lp" else None
        return self

    def transform(self, X):
        _check_fitted(self, "grid_")
        arr = check_field_stack(X, self.grid_.n)
        out = []
        for v in arr:
            f = Field2(self.grid_, v, NULL)
            if self.route == "lp":
                out.append(wave_ops.dalembert_inverse_lp(f, self.partition_).values)
            else:
                out.append(wave_ops.dalembert_inverse_quadrature(f, self.method).values)
        return np.array(out)


class CutoffPicardSolver(BaseEstimator):
    """Local solver for the stochastic wave map problem near one diagonal point.

    ``fit(X)`` takes the initial data sampled on the grid axis, an array of
    shape ``(2, 2, n)`` holding ``u0`` and ``u1``; it draws the noise, picks
    lambda (unless given) and runs the Picard iteration.  ``predict`` returns
    ``mean + u`` at points ``(alpha, beta)`` of the rescaled window.
    """

    def __init__(self, s=0.8, delta=0.8, h1=0.85, h2=0.85, r0=0.5, lam=None, picard_tol=1e-8,
                 max_iters=50, half_width=16.0, n_points=512, seed=0, christoffel=None,
                 sigma=None, center=0.0, derivative="central"):
        self.s = s
        self.delta = delta
        self.h1 = h1
        self.h2 = h2
        self.r0 = r0
        self.lam = lam
        self.picard_tol = picard_tol
        self.max_iters = max_iters
        self.half_width = half_width
        self.n_points = n_points
        self.seed = seed
        self.christoffel = christoffel
        self.sigma = sigma
        self.center = center
        self.derivative = derivative

    def _config(self) -> solver.SolverConfig:
        s, delta = check_exponents(self.s, self.delta)
        return solver.SolverConfig(
            s=s, delta=delta, hurst=fbs.HurstPair(self.h1, self.h2), r0=self.r0,
            grid=Grid2(self.half_width, check_positive_int(self.n_points, "n_points")),
            picard_tol=self.picard_tol, max_iters=check_positive_int(self.max_iters, "max_iters"),
            seed=check_seed(self.seed), derivative=self.derivative,
        )

    def fit(self, X, y=None):
        cfg = self._config()
        arr = np.asarray(X, dtype=float)
        if arr.shape != (2, 2, cfg.grid.n):
            raise ValueError(f"initial data must have shape (2, 2, {cfg.grid.n}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("initial data contain NaN or infinite values")
        data = wave_ops.InitialData.from_arrays(cfg.grid, arr[0], arr[1])
        table = self.christoffel if self.christoffel is not None else ChristoffelTable.flat()
        sigma = self.sigma if self.sigma is not None else DiffusionCoeff()
        sample = fbs.sample_sheet(cfg.grid, cfg.hurst, cfg.seed)
        cut = CutoffPair()
        lam = self.lam
        if lam is None:
            lam = solver.choose_lambda(cfg, data, sample, table, sigma, cut, self.center)
        cfg = cfg.with_lambda(lam)
        self.solution_ = solver.solve_local(cfg, data, sample, table, sigma, cut, self.center)
        self.lambda_ = lam
        self.state_ = self.solution_.state
        self.residual_ = self.solution_.residual
        return self

    def predict(self, X):
        """Values at rows ``(alpha, beta)`` (relative to the center), shape ``(m, 2)``."""
        _check_fitted(self, "solution_")
        from scipy.interpolate import RegularGridInterpolator

        pts = np.atleast_2d(np.asarray(X, dtype=float))
        if pts.shape[-1] != 2:
            raise ValueError(f"points must have two coordinates, got shape {pts.shape}")
        sol = self.solution_
        x = sol.u.grid.axis
        out = []
        for comp in range(2):
            interp = RegularGridInterpolator((x, x), sol.u.values[comp], bounds_error=True)
            out.append(interp(pts) + sol.mean[comp])
        return np.stack(out, axis=-1)
