"""Scaled cutoff fixed-point map, Picard iteration, lambda selection, inverse
rescaling, residuals and gluing of local solutions along the diagonal.

The local problem at a diagonal point ``(x0, -x0)`` is posed in a chart that
is translated twice: in space, so that the point becomes the origin, and in
the target, so that the psi-average of the rescaled position is removed.
The Christoffel table and ``sigma`` are re-expressed in the translated chart,
hence all local solutions live on identical grids and can be compared
pointwise after undoing the translations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .cutoffs import CutoffPair
from .fbs import FbsSample, HurstPair
from .geometry import ChristoffelTable, DiffusionCoeff, nonlinearity
from .lp import _power, bracket, mixed_norm
from .spectral import NULL, Field2, Grid2
from .wave_ops import InitialData, dalembert_inverse_quadrature, homogeneous_solution, stochastic_convolution


class SolverError(RuntimeError):
    pass


class DivergedError(SolverError):
    pass


class BallExitError(SolverError):
    pass


class LambdaCapError(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    s: float = 0.8
    delta: float = 0.8
    hurst: HurstPair = HurstPair(0.85, 0.85)
    lam: float = 1.0
    r0: float = 0.5
    grid: Grid2 = Grid2()
    picard_tol: float = 1e-8
    max_iters: int = 50
    seed: int = 0
    lambda_cap: float = 2.0**16
    derivative: str = "central"
    enforce_ball: bool = True

    def __post_init__(self):
        if not (0.75 < self.delta <= self.s < 1.0):
            raise ValueError(f"need 3/4 < delta <= s < 1, got s={self.s}, delta={self.delta}")
        if self.s + self.delta <= 1.5:
            raise ValueError(f"need s + delta > 3/2, got {self.s + self.delta}")
        self.hurst.require_above(self.s)
        if self.lam < 1.0:
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        if not 0.0 < self.r0 < 1.0:
            raise ValueError(f"ball radius must lie in (0, 1), got {self.r0}")
        if self.picard_tol <= 0 or self.max_iters < 1:
            raise ValueError("picard_tol must be positive and max_iters at least 1")
        if self.derivative not in ("central", "spectral"):
            raise ValueError(f"unknown derivative scheme {self.derivative!r}")

    def with_lambda(self, lam: float) -> "SolverConfig":
        return replace(self, lam=float(lam))

    def norm(self, f: Field2) -> float:
        return mixed_norm(f, self.s, self.delta)


@dataclass
class PicardState:
    iterate: Field2
    iteration: int = 0
    increments: list = field(default_factory=list)
    factors: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    residual: float = float("nan")
    converged: bool = False

    @property
    def last_increment(self) -> float:
        return self.increments[-1] if self.increments else float("nan")

    @property
    def contraction_factor(self) -> float:
        """Largest measured ratio of consecutive increments (0 if none)."""
        return max(self.factors, default=0.0)

    def in_ball(self, r0: float) -> bool:
        return all(n <= r0 for n in self.norms)

    def trace_rows(self) -> list[tuple]:
        rows = []
        for n, inc in enumerate(self.increments, start=1):
            fac = self.factors[n - 2] if n >= 2 and n - 2 < len(self.factors) else float("nan")
            rows.append((n, inc, fac, self.norms[n - 1]))
        return rows


@dataclass
class LocalSolution:
    center: float
    u: Field2
    lam: float
    residual: float
    norm: float
    mean: np.ndarray
    state: PicardState

    def certified(self, r0: float) -> bool:
        return self.norm <= r0


# ---------------------------------------------------------------------------
# scaled data and noise
# ---------------------------------------------------------------------------


def data_mean(d: InitialData, lam: float, cut: CutoffPair, center: float = 0.0) -> np.ndarray:
    """``int u0(y / lam + x0) psi(y) dy`` by the trapezoid rule of ``cut``."""
    y, w = cut.quadrature()
    return d.position(y / lam + center) @ (w * cut.psi(y))


def scale_data(d: InitialData, lam: float, cut: CutoffPair | None = None,
               center: float = 0.0) -> tuple[InitialData, np.ndarray]:
    """``chi(a) [u0(a / lam) - mean]`` and ``chi(a) u1(a / lam) / lam``, plus the mean."""
    if lam < 1.0:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    cut = cut or CutoffPair()
    mean = data_mean(d, lam, cut, center)

    def u0(a):
        return cut.chi(a) * (d.position(a / lam + center) - mean[:, None])

    def u1(a):
        return cut.chi(a) * d.velocity(a / lam + center) / lam

    return InitialData(u0, u1, d.s), mean


def _sheet_interpolator(sample: FbsSample) -> RegularGridInterpolator:
    g = sample.grid
    vals = sample.sheet.values
    # the sheet is even, so its value at +L equals the value at -L
    ext = np.concatenate([vals, vals[:1]], axis=0)
    ext = np.concatenate([ext, ext[:, :1]], axis=1)
    x = g.extended_axis
    return RegularGridInterpolator((x, x), ext, method="linear", bounds_error=True)


def scale_noise(sample: FbsSample, lam: float, center: float = 0.0) -> Field2:
    """``lam^-2 Pi_lam Xi_ab``: the mixed difference quotient of ``Xi(a/lam + x0, b/lam - x0)``.

    The sheet is extended between lattice points bilinearly, so the result is
    a cell-wise constant density on the same grid.
    """
    if lam < 1.0:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    g = sample.grid
    x = g.extended_axis / lam
    pa, pb = x + center, x - center
    L = g.half_width
    if min(pa.min(), pb.min()) < -L - 1e-12 or max(pa.max(), pb.max()) > L + 1e-12:
        raise ValueError(
            f"dilated noise window [{pa.min():.4g}, {pa.max():.4g}] x [{pb.min():.4g}, {pb.max():.4g}] "
            f"leaves the sampled box [-{L}, {L}]"
        )
    if lam == 1.0 and center == 0.0:
        return sample.derivative
    pa, pb = np.clip(pa, -L, L), np.clip(pb, -L, L)
    interp = _sheet_interpolator(sample)
    A, B = np.meshgrid(pa, pb, indexing="ij")
    s = interp(np.stack([A, B], axis=-1))
    inc = s[1:, 1:] - s[1:, :-1] - s[:-1, 1:] + s[:-1, :-1]
    return Field2(g, inc / g.spacing**2, NULL)


def noise_scaling_bound(sample: FbsSample, lam: float, s: float, delta: float,
                        cut: CutoffPair | None = None) -> float:
    """``|| lam^-2 Pi_lam (eta eta Xi_ab) ||`` in the mixed space of order ``(s-1, delta-1)``.

    Dilation acts on the Fourier side as ``lam^2 g^(lam tau, lam xi)``, which
    after the change of variables leaves ``lam^-2`` times the norm of ``g``
    with weights ``<tau / lam>`` and ``<xi / lam>``.
    """
    cut = cut or CutoffPair()
    g = sample.derivative * cut.window(sample.grid)
    power = _power(g)
    k = sample.grid.freqs / lam
    wa = bracket(k) ** (2.0 * (s - 1.0))
    wb = bracket(k) ** (2.0 * (delta - 1.0))
    wa2 = bracket(k) ** (2.0 * (delta - 1.0))
    wb2 = bracket(k) ** (2.0 * (s - 1.0))
    w = wa[:, None] * wb[None, :] + wa2[:, None] * wb2[None, :]
    return float(np.sqrt(np.sum(w * power) / lam**2))


# ---------------------------------------------------------------------------
# local problems
# ---------------------------------------------------------------------------


class LocalProblem:
    """``u -> window (S + box^-1 N(u) + box^-1 sigma(u) dXi)`` on one grid.

    ``increments`` are the cell increments of the driving sheet; ``table``
    and ``sigma`` are already expressed in the chart of the unknown.
    """

    def __init__(self, grid: Grid2, window: np.ndarray, data: InitialData, increments: np.ndarray,
                 table: ChristoffelTable, sigma: DiffusionCoeff, derivative: str = "central"):
        self.grid = grid
        self.window = window
        self.table = table
        self.sigma = sigma
        self.increments = increments
        self.derivative = derivative
        self.homogeneous = homogeneous_solution(data, grid)
        self._noise_active = not sigma.is_zero and np.any(increments)

    def source(self, u: Field2) -> Field2:
        out = self.homogeneous
        if not self.table.is_flat:
            out = out + dalembert_inverse_quadrature(nonlinearity(u, self.table, self.derivative))
        if self._noise_active:
            out = out + stochastic_convolution(u, self.sigma, self.increments)
        return out

    def __call__(self, u: Field2) -> Field2:
        return self.source(u) * self.window

    def zero(self) -> Field2:
        return Field2(self.grid, np.zeros((2, self.grid.n, self.grid.n)), NULL)


def scaled_problem(cfg: SolverConfig, data: InitialData, sample: FbsSample, table: ChristoffelTable,
                   sigma: DiffusionCoeff, cut: CutoffPair | None = None,
                   center: float = 0.0) -> tuple[LocalProblem, np.ndarray]:
    """The problem on the lambda-scaled window, and the removed mean."""
    cut = cut or CutoffPair()
    if sample.grid != cfg.grid:
        raise ValueError("the noise sample lives on a different grid than the solver")
    scaled, mean = scale_data(data, cfg.lam, cut, center)
    noise = scale_noise(sample, cfg.lam, center)
    inc = noise.values * cfg.grid.spacing**2
    prob = LocalProblem(cfg.grid, cut.window(cfg.grid), scaled, inc,
                        table.translated(mean), sigma.translated(mean), cfg.derivative)
    return prob, mean


def rescaled_problem(cfg: SolverConfig, data: InitialData, sample: FbsSample, table: ChristoffelTable,
                     sigma: DiffusionCoeff, cut: CutoffPair | None = None,
                     center: float = 0.0) -> tuple[LocalProblem, np.ndarray]:
    """The same problem in the original (unscaled) variables around ``center``.

    The window is ``eta(lam a) eta(lam b)`` on ``Grid2(L / lam, N)`` and the data
    are ``chi(lam a) (u0(a + x0) - mean)`` and ``chi(lam a) u1(a + x0)``.
    """
    cut = cut or CutoffPair()
    lam = cfg.lam
    mean = data_mean(data, lam, cut, center)
    grid = cfg.grid.scaled(1.0 / lam)

    def u0(a):
        return cut.chi(lam * a) * (data.position(a + center) - mean[:, None])

    def u1(a):
        return cut.chi(lam * a) * data.velocity(a + center)

    inc = scale_noise(sample, lam, center).values * cfg.grid.spacing**2
    prob = LocalProblem(grid, cut.window(grid, 1.0 / lam), InitialData(u0, u1), inc,
                        table.translated(mean), sigma.translated(mean), cfg.derivative)
    return prob, mean


def theta_map(u: Field2, cfg: SolverConfig, data: InitialData, sample: FbsSample,
              table: ChristoffelTable, sigma: DiffusionCoeff, cut: CutoffPair | None = None,
              center: float = 0.0) -> Field2:
    """One application of the scaled cutoff map."""
    if cfg.norm(u) > cfg.r0:
        warnings.warn(f"theta_map input lies outside the ball of radius {cfg.r0}", RuntimeWarning)
    prob, _ = scaled_problem(cfg, data, sample, table, sigma, cut, center)
    return prob(u)


# ---------------------------------------------------------------------------
# Picard iteration and lambda selection
# ---------------------------------------------------------------------------


def _factor_floor(norm_scale: float) -> float:
    return 1e-13 * max(norm_scale, 1e-300)


def iterate_problem(prob: LocalProblem, cfg: SolverConfig, start: Field2 | None = None,
                    max_iters: int | None = None, check_ball: bool | None = None) -> PicardState:
    """Run ``u_{n+1} = Theta(u_n)`` until the increment drops below ``picard_tol``."""
    max_iters = cfg.max_iters if max_iters is None else max_iters
    check_ball = cfg.enforce_ball if check_ball is None else check_ball
    u = prob.zero() if start is None else start
    state = PicardState(u)
    above_one = 0
    for n in range(1, max_iters + 1):
        nxt = prob(u)
        inc = cfg.norm(nxt - u)
        nrm = cfg.norm(nxt)
        state.increments.append(inc)
        state.norms.append(nrm)
        state.iteration = n
        if n >= 2:
            prev = state.increments[-2]
            if prev > _factor_floor(nrm):
                fac = inc / prev
                state.factors.append(fac)
                above_one = above_one + 1 if fac >= 1.0 else 0
        u = nxt
        state.iterate = u
        if check_ball and nrm > cfg.r0:
            raise BallExitError(
                f"iterate {n} has norm {nrm:.4g} > R0 = {cfg.r0} at lambda = {cfg.lam}; "
                "increase lambda"
            )
        if above_one >= 3:
            raise DivergedError(
                f"no contraction at lambda = {cfg.lam}: increments {state.increments[-4:]}; "
                "increase lambda"
            )
        if inc <= cfg.picard_tol:
            state.converged = True
            break
    state.residual = cfg.norm(prob(u) - u)
    return state


def picard_solve(cfg: SolverConfig, data: InitialData, sample: FbsSample, table: ChristoffelTable,
                 sigma: DiffusionCoeff, cut: CutoffPair | None = None, center: float = 0.0,
                 start: Field2 | None = None) -> tuple[PicardState, Field2]:
    prob, _ = scaled_problem(cfg, data, sample, table, sigma, cut, center)
    state = iterate_problem(prob, cfg, start)
    return state, state.iterate


def _probe(cfg, data, sample, table, sigma, cut, center) -> tuple[bool, str]:
    prob, _ = scaled_problem(cfg, data, sample, table, sigma, cut, center)
    try:
        st = iterate_problem(prob, cfg, max_iters=3, check_ball=False)
    except DivergedError as exc:
        return False, str(exc)
    ok = st.contraction_factor <= 0.5 and st.in_ball(cfg.r0)
    return ok, f"factor {st.contraction_factor:.3g}, max norm {max(st.norms):.3g}"


def choose_lambda(cfg: SolverConfig, data: InitialData, sample: FbsSample, table: ChristoffelTable,
                  sigma: DiffusionCoeff, cut: CutoffPair | None = None, center: float = 0.0,
                  start: float = 1.0) -> float:
    """Smallest ``lam = start 2^k`` whose 3-step probe contracts by 1/2 inside the ball."""
    lam = float(start)
    log = []
    while lam <= cfg.lambda_cap:
        ok, info = _probe(cfg.with_lambda(lam), data, sample, table, sigma, cut, center)
        log.append(f"lambda={lam:g}: {info}")
        if ok:
            return lam
        lam *= 2.0
    raise LambdaCapError("no admissible lambda below the cap; probes: " + "; ".join(log))


# ---------------------------------------------------------------------------
# inverse scaling, residuals, gluing
# ---------------------------------------------------------------------------


def rescale_solution(u_lam: Field2, lam: float) -> Field2:
    """``u(a, b) = u_lam(lam a, lam b)``: the same samples on ``Grid2(L / lam, N)``."""
    if lam < 1.0:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    return Field2(u_lam.grid.scaled(1.0 / lam), u_lam.values, u_lam.frame)


def residual(u: Field2, cfg: SolverConfig, data: InitialData, sample: FbsSample,
             table: ChristoffelTable, sigma: DiffusionCoeff, cut: CutoffPair | None = None,
             center: float = 0.0) -> float:
    """Mild-form defect of a rescaled solution, in the chart translated by the mean."""
    prob, _ = rescaled_problem(cfg, data, sample, table, sigma, cut, center)
    if u.grid != prob.grid:
        raise ValueError(f"expected a field on {prob.grid}, got {u.grid}")
    return cfg.norm(u - prob(u))


def solve_local(cfg: SolverConfig, data: InitialData, sample: FbsSample, table: ChristoffelTable,
                sigma: DiffusionCoeff, cut: CutoffPair | None = None, center: float = 0.0) -> LocalSolution:
    state, u_lam = picard_solve(cfg, data, sample, table, sigma, cut, center)
    if not state.converged:
        raise SolverError(
            f"Picard iteration at center {center} did not reach {cfg.picard_tol:g} in {cfg.max_iters} steps"
        )
    u = rescale_solution(u_lam, cfg.lam)
    res = residual(u, cfg, data, sample, table, sigma, cut, center)
    mean = data_mean(data, cfg.lam, cut or CutoffPair(), center)
    return LocalSolution(center, u, cfg.lam, res, cfg.norm(u_lam), mean, state)


@dataclass
class GlueReport:
    centers: list
    lam: float
    disagreements: dict
    overlap_cells: dict
    solutions: list
    tol: float

    @property
    def max_disagreement(self) -> float:
        return max(self.disagreements.values(), default=0.0)

    @property
    def success(self) -> bool:
        return self.max_disagreement <= self.tol


def snap_centers(centers, grid: Grid2, lam: float) -> list[float]:
    """Round centers to multiples of the rescaled spacing so grids coincide."""
    h = grid.spacing / lam
    return [float(np.round(c / h) * h) for c in centers]


def overlap_disagreement(a: LocalSolution, b: LocalSolution, margin: int = 0) -> tuple[float, int]:
    """Sup of ``|(mean_a + u_a) - (mean_b + u_b)|`` where both cutoffs equal one.

    Returns the disagreement and the number of compared points per axis.
    """
    g = a.u.grid
    h = g.spacing
    m = int(round((b.center - a.center) / h))
    n = g.n
    inside = np.abs(g.axis) <= 2.0 / a.lam + 1e-12
    idx = np.nonzero(inside)[0]
    lo, hi = idx[0] + margin, idx[-1] - margin
    # point (i, k) of b sits at (i + m, k - m) of a
    ia = np.arange(max(lo, lo + m), min(hi, hi + m) + 1)
    ka = np.arange(max(lo, lo - m), min(hi, hi - m) + 1)
    if ia.size == 0 or ka.size == 0:
        return 0.0, 0
    ua = a.u.values[:, ia[:, None], ka[None, :]] + a.mean[:, None, None]
    ub = b.u.values[:, (ia - m)[:, None], (ka + m)[None, :]] + b.mean[:, None, None]
    assert 0 <= min(ia.min() - m, ka.min() + m) and max(ia.max() - m, ka.max() + m) < n
    return float(np.max(np.abs(ua - ub))), int(min(ia.size, ka.size))


def glue_solutions(centers, cfg: SolverConfig, data: InitialData, sample: FbsSample,
                   table: ChristoffelTable, sigma: DiffusionCoeff, cut: CutoffPair | None = None,
                   lam: float | None = None, tol: float = 1e-5, margin: int = 0) -> GlueReport:
    """Solve the translated problem at each center with a shared lambda and
    compare consecutive solutions on their overlaps."""
    cut = cut or CutoffPair()
    centers = list(centers)
    if lam is None:
        lam = 1.0
        for c in centers:
            lam = choose_lambda(cfg, data, sample, table, sigma, cut, c, start=lam)
    cfg = cfg.with_lambda(lam)
    centers = snap_centers(centers, cfg.grid, lam)
    sols = []
    for c in centers:
        try:
            sols.append(solve_local(cfg, data, sample, table, sigma, cut, c))
        except SolverError as exc:
            raise SolverError(f"local solve at center {c} failed: {exc}") from exc
    dis, cells = {}, {}
    for a, b in zip(sols, sols[1:]):
        d, nc = overlap_disagreement(a, b, margin)
        dis[(a.center, b.center)] = d
        cells[(a.center, b.center)] = nc
    return GlueReport(centers, lam, dis, cells, sols, tol)
