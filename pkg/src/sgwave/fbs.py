"""Fractional Brownian sheet on the null-coordinate grid.

The covariance ``R_H1(|a1|, |a2|) R_H2(|b1|, |b2|)`` only sees absolute values,
so the sheet is even in each variable.  It is sampled exactly on the lattice
``{dx, 2 dx, ..., L}^2`` as ``C1 Z C2^T`` with per-axis Cholesky factors and
then reflected onto the full grid.  Zero rows/columns sit on the axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import cutoffs
from .lp import mixed_norm_many
from .spectral import NULL, Field2, Grid2


@dataclass(frozen=True)
class HurstPair:
    h1: float
    h2: float

    def __post_init__(self):
        for name, h in (("H1", self.h1), ("H2", self.h2)):
            if not 0.0 < h < 1.0:
                raise ValueError(f"Hurst index {name} must lie in (0, 1), got {h}")

    def require_above(self, s: float):
        if min(self.h1, self.h2) <= s:
            raise ValueError(f"Hurst indices {self.h1}, {self.h2} must exceed s = {s}")

    def __iter__(self):
        return iter((self.h1, self.h2))


@dataclass(frozen=True, eq=False)
class FbsSample:
    """One realisation of the sheet and its cell-wise mixed difference quotient."""

    grid: Grid2
    sheet: Field2
    derivative: Field2
    seed: int
    hurst: HurstPair

    def increments(self) -> np.ndarray:
        """Mixed increments over the cells ``[a_i, a_i+1] x [b_k, b_k+1]``."""
        return self.derivative.values * self.grid.spacing**2


def covariance_R(H: float, a, b):
    """``(a^2H + b^2H - |a - b|^2H) / 2`` for nonnegative ``a``, ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 0.5 * (a ** (2 * H) + b ** (2 * H) - np.abs(a - b) ** (2 * H))


def quadrant_axis(grid: Grid2) -> np.ndarray:
    """Positive sampling abscissae ``dx, 2 dx, ..., L``."""
    return grid.spacing * np.arange(1, grid.n // 2 + 1)


def axis_covariance(grid: Grid2, H: float) -> np.ndarray:
    x = quadrant_axis(grid)
    return covariance_R(H, x[:, None], x[None, :])


def cholesky_factor(cov: np.ndarray, label: str = "") -> np.ndarray:
    """Lower Cholesky factor, retried once with jitter ``1e-12 trace / n``."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-12 * np.trace(cov) / cov.shape[0]
    try:
        return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"Cholesky factorisation failed for the {label} covariance even after jitter {jitter:.3e}"
        ) from exc


def axis_factors(grid: Grid2, hurst: HurstPair) -> tuple[np.ndarray, np.ndarray]:
    c1 = cholesky_factor(axis_covariance(grid, hurst.h1), f"alpha-axis (H1={hurst.h1})")
    c2 = cholesky_factor(axis_covariance(grid, hurst.h2), f"beta-axis (H2={hurst.h2})")
    return c1, c2


def reflection_index(grid: Grid2) -> np.ndarray:
    """Map each grid point to its quadrant index, ``0`` meaning the axis."""
    n = grid.n
    # x_i = (i - n/2) dx, so |x_i| = |i - n/2| dx; quadrant row q holds (q+1) dx
    return np.abs(np.arange(n) - n // 2)


def assemble(grid: Grid2, quadrant: np.ndarray) -> np.ndarray:
    """Reflect quadrant values (shape ``(..., n/2, n/2)``) onto the full grid."""
    padded = np.zeros(quadrant.shape[:-2] + (grid.n // 2 + 1, grid.n // 2 + 1))
    padded[..., 1:, 1:] = quadrant
    idx = reflection_index(grid)
    return padded[..., idx[:, None], idx[None, :]]


def mixed_difference_quotient(values: np.ndarray, spacing: float) -> np.ndarray:
    """Cell increments divided by ``dx^2``; the last cell wraps periodically.

    The wrap is exact for the sheet because it is even, so the value at
    ``+L`` equals the value at ``-L``.
    """
    v = values
    up = np.roll(v, -1, axis=-2)
    inc = np.roll(up, -1, axis=-1) - up - np.roll(v, -1, axis=-1) + v
    return inc / spacing**2


def _make_sample(grid, sheet_values, seed, hurst):
    sheet = Field2(grid, sheet_values, NULL)
    deriv = Field2(grid, mixed_difference_quotient(sheet_values, grid.spacing), NULL)
    return FbsSample(grid, sheet, deriv, int(seed), hurst)


def sample_sheet(grid: Grid2, hurst: HurstPair, seed: int,
                 factors: tuple[np.ndarray, np.ndarray] | None = None) -> FbsSample:
    """Exact-in-law sample of the sheet, deterministic in ``(grid, hurst, seed)``."""
    c1, c2 = factors if factors is not None else axis_factors(grid, hurst)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((grid.n // 2, grid.n // 2))
    quadrant = c1 @ z @ c2.T
    return _make_sample(grid, assemble(grid, quadrant), seed, hurst)


def sample_ensemble(grid: Grid2, hurst: HurstPair, base_seed: int, size: int) -> np.ndarray:
    """Stack of ``size`` quadrant samples (shape ``(size, n/2, n/2)``).

    Replicate ``r`` uses the child seed ``r`` of ``SeedSequence(base_seed)``.
    """
    c1, c2 = axis_factors(grid, hurst)
    children = np.random.SeedSequence(base_seed).spawn(size)
    out = np.empty((size, grid.n // 2, grid.n // 2))
    for r, child in enumerate(children):
        z = np.random.default_rng(child).standard_normal((grid.n // 2, grid.n // 2))
        out[r] = c1 @ z @ c2.T
    return out


def kronecker_covariance(grid: Grid2, hurst: HurstPair) -> np.ndarray:
    """Covariance of ``vec(C1 Z C2^T)`` (column-major ``vec``) from the factors."""
    c1, c2 = axis_factors(grid, hurst)
    k = np.kron(c2, c1)
    return k @ k.T


def dense_covariance(grid: Grid2, hurst: HurstPair) -> np.ndarray:
    """Covariance of the quadrant lattice assembled point by point."""
    x = quadrant_axis(grid)
    a, b = np.meshgrid(x, x, indexing="ij")
    a, b = a.ravel(order="F"), b.ravel(order="F")
    return covariance_R(hurst.h1, a[:, None], a[None, :]) * covariance_R(hurst.h2, b[:, None], b[None, :])


def dense_sampler_covariance(grid: Grid2, hurst: HurstPair) -> np.ndarray:
    """``L L^T`` for the full (non-Kronecker) Cholesky factor of the quadrant."""
    l = cholesky_factor(dense_covariance(grid, hurst), "dense quadrant")
    return l @ l.T


def sample_sheet_dense(grid: Grid2, hurst: HurstPair, seed: int) -> FbsSample:
    """Reference sampler using one Cholesky of the whole quadrant covariance."""
    l = cholesky_factor(dense_covariance(grid, hurst), "dense quadrant")
    m = grid.n // 2
    z = np.random.default_rng(seed).standard_normal(m * m)
    quadrant = (l @ z).reshape((m, m), order="F")
    return _make_sample(grid, assemble(grid, quadrant), seed, hurst)


def quadrant_index(grid: Grid2, a: float) -> int:
    """Row of the quadrant array holding abscissa ``a > 0`` (must be a grid point)."""
    q = a / grid.spacing
    qi = int(round(q))
    if abs(q - qi) > 1e-9 or qi < 1 or qi > grid.n // 2:
        raise ValueError(f"{a} is not a positive lattice abscissa of the quadrant")
    return qi - 1


def _quadrant_value(ensemble, grid, a, b):
    if a == 0 or b == 0:
        return np.zeros(ensemble.shape[0])
    return ensemble[:, quadrant_index(grid, a), quadrant_index(grid, b)]


def rect_increments(ensemble: np.ndarray, grid: Grid2, a1, a2, b1, b2) -> np.ndarray:
    """Double increments of every replicate over ``[a1, a2] x [b1, b2]``."""
    if min(a1, a2, b1, b2) < 0:
        raise ValueError("rectangle must lie in the nonnegative quadrant")
    q = lambda a, b: _quadrant_value(ensemble, grid, a, b)
    return q(a2, b2) - q(a2, b1) - q(a1, b2) + q(a1, b1)


def rect_increment_variance(ensemble: np.ndarray, grid: Grid2, a1, a2, b1, b2) -> tuple[float, float]:
    """Empirical variance of the double increment and its standard error.

    The mean is known to be zero, so the variance estimate is ``mean(X^2)``.
    """
    if ensemble.shape[0] < 100:
        raise ValueError(f"need at least 100 replicates, got {ensemble.shape[0]}")
    x2 = rect_increments(ensemble, grid, a1, a2, b1, b2) ** 2
    return float(x2.mean()), float(x2.std(ddof=1) / np.sqrt(x2.size))


def rect_variance_exact(hurst: HurstPair, a1, a2, b1, b2) -> float:
    """Variance of the double increment from the covariance (bilinear expansion)."""
    ra = covariance_R(hurst.h1, a2, a2) - 2 * covariance_R(hurst.h1, a1, a2) + covariance_R(hurst.h1, a1, a1)
    rb = covariance_R(hurst.h2, b2, b2) - 2 * covariance_R(hurst.h2, b1, b2) + covariance_R(hurst.h2, b1, b1)
    return float(ra * rb)


def empirical_covariance(ensemble: np.ndarray, grid: Grid2,
                         pairs: Iterable[tuple[tuple[float, float], tuple[float, float]]]):
    """Mean of ``X(p) X(q)`` with standard errors, for probe pairs of points."""
    rows = []
    for p, q in pairs:
        prod = _quadrant_value(ensemble, grid, *p) * _quadrant_value(ensemble, grid, *q)
        rows.append((float(prod.mean()), float(prod.std(ddof=1) / np.sqrt(prod.size))))
    return rows


def standardized_moments(ensemble: np.ndarray, points) -> tuple[float, float]:
    """Pooled skewness and kurtosis of the standardised marginals."""
    pooled = []
    for i, k in points:
        x = ensemble[:, i, k]
        pooled.append((x - x.mean()) / x.std())
    z = np.concatenate(pooled)
    return float(np.mean(z**3)), float(np.mean(z**4))


def regularity_check(sample: FbsSample | Field2, h1p: float, h2p: float, eta=None) -> float:
    """``||eta(a) eta(b) Xi||`` in the mixed space with exponents ``(h1p, h2p)``."""
    sheet = sample.sheet if isinstance(sample, FbsSample) else sample
    if eta is None:
        eta = cutoffs.eta
    a, b = sheet.grid.mesh()
    window = eta(a) * eta(b)
    return mixed_norm_many(sheet * window, [(h1p, h2p)])[0]


def coarsen(sample: FbsSample) -> FbsSample:
    """Restrict a sample to the grid with half as many points per axis.

    The coarse lattice is a sublattice, so the result is an exact sample on
    the coarse grid and nested with the fine one.
    """
    g = sample.grid
    coarse = Grid2(g.half_width, g.n // 2)
    vals = sample.sheet.values[::2, ::2]
    return _make_sample(coarse, vals, sample.seed, sample.hurst)
