"""The three constituents of the mild form in null coordinates.

* :func:`homogeneous_solution` -- d'Alembert's formula for the data.
* :func:`dalembert_inverse_quadrature` and :func:`dalembert_inverse_lp` --
  two independent routes to the inverse wave operator ``box^{-1}``, i.e. the
  solution ``F`` of ``4 d_alpha d_beta F = f`` with ``F = 0`` and
  ``(d_alpha + d_beta) F = 0`` on the anti-diagonal ``beta = -alpha``.
* :func:`stochastic_convolution` -- the pathwise Riemann-Stieltjes version
  driven by the cell increments of a sheet.

Triangle integrals use the anti-diagonal reflection ``x_i -> -x_i``, which on
the grid is the index map ``i -> N - i`` (index ``N`` meaning ``+L``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .cutoffs import CutoffPair
from .lp import DyadicPartition, build_partition, mixed_norm
from .spectral import NULL, VECTOR2, Field2, Grid2, cumulative_integral


@dataclass(frozen=True, eq=False)
class InitialData:
    """Position ``u0`` and velocity ``u1`` as callables ``x -> (2, len(x))``."""

    u0: Callable
    u1: Callable
    s: float | None = None

    def position(self, x) -> np.ndarray:
        return _as_pair(self.u0(np.asarray(x, dtype=float)), np.shape(x))

    def velocity(self, x) -> np.ndarray:
        return _as_pair(self.u1(np.asarray(x, dtype=float)), np.shape(x))

    @classmethod
    def zero(cls) -> "InitialData":
        return cls(_zero_pair, _zero_pair)

    @classmethod
    def from_arrays(cls, grid: Grid2, u0_values, u1_values) -> "InitialData":
        """Grid samples (shape ``(2, N)``) extended by cubic splines."""
        x = grid.axis
        s0 = CubicSpline(x, np.asarray(u0_values, dtype=float), axis=-1)
        s1 = CubicSpline(x, np.asarray(u1_values, dtype=float), axis=-1)
        return cls(s0, s1)

    def shifted(self, x0: float) -> "InitialData":
        """Data of the problem translated so that ``x0`` becomes the origin."""
        u0, u1 = self.u0, self.u1
        return InitialData(lambda x: u0(np.asarray(x) + x0), lambda x: u1(np.asarray(x) + x0), self.s)

    def scaled(self, factor: float) -> "InitialData":
        u0, u1 = self.u0, self.u1
        return InitialData(lambda x: factor * _as_pair(u0(x), np.shape(x)),
                           lambda x: factor * _as_pair(u1(x), np.shape(x)), self.s)


def _zero_pair(x):
    return np.zeros((2,) + np.shape(x))


def _as_pair(v, shape) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == len(shape):
        v = np.array([v, np.zeros_like(v)])
    return np.broadcast_to(v, (2,) + tuple(shape))


def homogeneous_solution(d: InitialData, grid: Grid2, method: str = "trapezoid") -> Field2:
    """``S(a, b) = [u0(a) + u0(-b)] / 2 + int_{-b}^{a} u1 / 2``.

    The 1-D integral is a cumulative trapezoid on the extended axis, or a
    cumulative Simpson rule with ``method='simpson'``.
    """
    x = grid.extended_axis
    u0 = d.position(x)
    u1 = d.velocity(x)
    if method == "trapezoid":
        prim = cumulative_trapezoid(u1, x, axis=-1, initial=0.0)
    elif method == "simpson":
        prim = cumulative_simpson(u1, x=x, axis=-1, initial=0.0)
    else:
        raise ValueError(f"unknown integration method {method!r}")
    i = np.arange(grid.n)
    r = grid.reflected_index()
    s = 0.5 * (u0[:, i, None] + u0[:, None, r]) + 0.5 * (prim[:, i, None] - prim[:, None, r])
    return Field2(grid, s, NULL)


def _finish(f: Field2, d: np.ndarray) -> Field2:
    """``F[i, k] = (D[i, k] - D[N - k, k]) / 4`` from an outer prefix array."""
    n = f.grid.n
    k = np.arange(n)
    r = f.grid.reflected_index()
    out = 0.25 * (d[..., :n, :n] - d[..., r, k][..., None, :])
    if f.is_real:
        out = np.real(out)
    return f.with_values(out)


def dalembert_inverse_quadrature(f: Field2, method: str = "trapezoid") -> Field2:
    """``(1/4) int_{-b}^{a} int_{-a'}^{b} f(a', b') db' da'`` by two prefix sweeps.

    The first sweep integrates along ``beta`` from ``-L``, the anti-diagonal
    value is subtracted, and the second sweep integrates along ``alpha``.
    ``method`` selects the 1-D rule (``'trapezoid'``, second order, or
    ``'spectral'`` for compactly supported smooth ``f``).  Reversed limits
    follow the signed-integral convention.
    """
    g = f.grid
    n, h = g.n, g.spacing
    v = f.values
    c = cumulative_integral(v, h, axis=-1, method=method)  # (..., N, N+1)
    i = np.arange(n)
    inner = c - c[..., i, g.reflected_index()][..., :, None]
    if method == "trapezoid":
        top = c[..., :1, :] - c[..., :1, :1]  # alpha = +L row; -alpha = -L
        inner = np.concatenate([inner, top], axis=-2)
        outer = cumulative_trapezoid(inner, dx=h, axis=-2, initial=0.0)
    else:
        outer = cumulative_integral(inner[..., :, :], h, axis=-2, method=method)
    return _finish(f, outer)


def stochastic_convolution(u: Field2, sigma, increments, hurst=None) -> Field2:
    """``(1/4) sum sigma(u) dXi`` over the cells of the characteristic triangle.

    ``increments`` are mixed cell increments (an :class:`FbsSample`, a
    derivative :class:`Field2` multiplied by ``dx^2``, or a raw array).
    ``sigma(u)`` is taken at the lower-left corner of each cell.
    """
    from .fbs import FbsSample

    if isinstance(increments, FbsSample):
        hurst = increments.hurst if hurst is None else hurst
        inc = increments.increments()
    elif isinstance(increments, Field2):
        inc = increments.values * increments.grid.spacing**2
    else:
        inc = np.asarray(increments, dtype=float)
    if hurst is not None and min(hurst.h1, hurst.h2) <= 0.5:
        raise ValueError(
            f"pathwise Young integration needs H1, H2 > 1/2, got ({hurst.h1}, {hurst.h2})"
        )
    g = u.grid
    if u.arity != VECTOR2:
        raise ValueError("the stochastic convolution acts on R^2-valued fields")
    weights = np.asarray(sigma(u.values[0], u.values[1]))
    m = weights * inc
    n = g.n
    zeros = np.zeros(m.shape[:-1] + (1,))
    c = np.concatenate([zeros, np.cumsum(m, axis=-1)], axis=-1)  # (..., N, N+1)
    i = np.arange(n)
    inner = c - c[..., i, g.reflected_index()][..., :, None]
    zeros = np.zeros(inner.shape[:-2] + (1, inner.shape[-1]))
    outer = np.concatenate([zeros, np.cumsum(inner, axis=-2)], axis=-2)  # (..., N+1, N+1)
    return _finish(u, outer)


# ---------------------------------------------------------------------------
# Littlewood-Paley route
# ---------------------------------------------------------------------------


class _TrigPoly:
    """Exact operations on trigonometric polynomials sampled on a grid.

    A coefficient array ``d[m, n]`` stands for ``sum d e^{i(tau_m a + xi_n b)}``
    with ``tau_m`` in FFT order.
    """

    def __init__(self, grid: Grid2):
        self.grid = grid
        n = grid.n
        self.n = n
        self.k = grid.freqs
        self.x = grid.axis
        sign = np.where(grid.mode_numbers % 2 == 0, 1.0, -1.0)
        self.phase = sign[:, None] * sign[None, :]
        self.refl = (n - np.arange(n)) % n
        self.diag_i = np.arange(n)

    def coeffs(self, v: np.ndarray) -> np.ndarray:
        return np.fft.fft2(v, axes=(-2, -1)) * self.phase / self.n**2

    def synth(self, d: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(d * self.phase, axes=(-2, -1)) * self.n**2

    def at_alpha_diag(self, e: np.ndarray) -> np.ndarray:
        """``e(alpha_i, -alpha_i)`` as a function of ``i``."""
        return e[..., self.diag_i, self.refl]

    def at_beta_diag(self, e: np.ndarray) -> np.ndarray:
        """``e(-beta_k, beta_k)`` as a function of ``k``."""
        return e[..., self.refl, self.diag_i]

    def _inverse(self, w: np.ndarray) -> np.ndarray:
        out = np.zeros_like(w, dtype=complex)
        nz = w != 0
        out[nz] = 1.0 / (1j * w[nz])
        return out

    def antidiag_integral(self, d: np.ndarray) -> np.ndarray:
        """``int_{-b}^{a} Q(g, -g) dg`` on the grid, ``Q`` given by ``d``."""
        omega = self.k[:, None] - self.k[None, :]
        e = self.synth(d * self._inverse(omega))
        mean = np.trace(d, axis1=-2, axis2=-1)
        x = self.x
        return (self.at_alpha_diag(e)[..., :, None] - self.at_beta_diag(e)[..., None, :]
                + mean[..., None, None] * (x[:, None] + x[None, :]))

    def alpha_line_integral(self, d: np.ndarray) -> np.ndarray:
        """``int_{-b}^{a} Q(g, b) dg``."""
        inv = self._inverse(self.k)[:, None]
        e = self.synth(d * inv)
        zero_row = np.zeros_like(d)
        zero_row[..., 0, :] = d[..., 0, :]
        q0 = self.synth(zero_row)[..., 0, :]  # independent of alpha
        x = self.x
        return e - self.at_beta_diag(e)[..., None, :] + q0[..., None, :] * (x[:, None] + x[None, :])

    def beta_line_integral(self, d: np.ndarray) -> np.ndarray:
        """``int_{-a}^{b} R(a, g) dg``."""
        inv = self._inverse(self.k)[None, :]
        e = self.synth(d * inv)
        zero_col = np.zeros_like(d)
        zero_col[..., :, 0] = d[..., :, 0]
        p0 = self.synth(zero_col)[..., :, 0]
        x = self.x
        return e - self.at_alpha_diag(e)[..., :, None] + p0[..., :, None] * (x[:, None] + x[None, :])

    def weighted_line(self, mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``int_{-b}^{a} m`` and ``int_{-b}^{a} g m(g) dg`` for ``m = sum mu e^{i tau g}``."""
        k, x = self.k, self.x
        ex = np.exp(1j * np.outer(x, k))  # (N points, N modes)
        exr = np.exp(-1j * np.outer(x, k))  # evaluated at -x
        nz = k != 0
        a1 = np.zeros((self.n, self.n), dtype=complex)
        a1r = np.zeros_like(a1)
        a2 = np.zeros_like(a1)
        a2r = np.zeros_like(a1)
        a1[:, nz] = ex[:, nz] / (1j * k[nz])
        a1r[:, nz] = exr[:, nz] / (1j * k[nz])
        a2[:, nz] = ex[:, nz] * (x[:, None] / (1j * k[nz]) + 1.0 / k[nz] ** 2)
        a2r[:, nz] = exr[:, nz] * (-x[:, None] / (1j * k[nz]) + 1.0 / k[nz] ** 2)
        a1[:, ~nz] = x[:, None]
        a1r[:, ~nz] = -x[:, None]
        a2[:, ~nz] = 0.5 * x[:, None] ** 2
        a2r[:, ~nz] = 0.5 * x[:, None] ** 2
        A1, A1r = mu @ a1.T, mu @ a1r.T
        A2, A2r = mu @ a2.T, mu @ a2r.T
        first = A1[..., :, None] - A1r[..., None, :]
        second = A2[..., :, None] - A2r[..., None, :]
        return first, second


@dataclass
class LPPieces:
    """The four parts ``H, I, J, G`` (each solving ``d_a d_b X = block``)."""

    H: np.ndarray
    I: np.ndarray
    J: np.ndarray
    G: np.ndarray

    def total(self) -> np.ndarray:
        return self.H + self.I + self.J + self.G


def lp_pieces(f: Field2, p: DyadicPartition | None = None) -> LPPieces:
    """Frequency-split construction of ``F`` with ``d_a d_b F = f``.

    ``H`` integrates the (0,0) block exactly over the characteristic triangle,
    ``I``/``J`` divide the mixed low/high blocks by ``i xi`` / ``i tau`` and
    integrate along one variable, ``G`` divides the doubly high block by
    ``(i tau)(i xi)`` and subtracts the boundary corrections.  Every operation
    is exact for the trigonometric interpolant of ``f``.
    """
    g = f.grid
    p = p if p is not None else build_partition(g)
    if p.grid != g:
        raise ValueError("partition was built on a different grid")
    tp = _TrigPoly(g)
    k = g.freqs
    low = p.low()
    high = 1.0 - low
    floor = np.min(np.abs(k[high > 0]))
    if floor < 0.5:
        raise RuntimeError(f"high-frequency shell reaches |k| = {floor:.3g}, below the shell floor")
    c = tp.coeffs(f.values)
    c00 = c * low[:, None] * low[None, :]
    c0h = c * low[:, None] * high[None, :]
    ch0 = c * high[:, None] * low[None, :]
    chh = c * high[:, None] * high[None, :]
    inv = tp._inverse(k)
    # H
    kk = c00 * inv[None, :]
    mu = c00[..., :, 0]
    first, second = tp.weighted_line(mu)
    x = g.axis
    H = (tp.alpha_line_integral(kk) - tp.antidiag_integral(kk)
         + x[None, :] * first + second)
    # I and J
    q = c0h * inv[None, :]
    I = tp.alpha_line_integral(q) - tp.antidiag_integral(q)
    r = ch0 * inv[:, None]
    J = tp.beta_line_integral(r) - tp.antidiag_integral(r)
    # G
    pc = chh * inv[:, None] * inv[None, :]
    P = tp.synth(pc)
    G = (P - 0.5 * tp.at_alpha_diag(P)[..., :, None] - 0.5 * tp.at_beta_diag(P)[..., None, :]
         - 0.5 * tp.antidiag_integral(pc * (1j * k)[:, None])
         - 0.5 * tp.antidiag_integral(pc * (1j * k)[None, :]))
    pieces = LPPieces(H, I, J, G)
    if f.is_real:
        pieces = LPPieces(*(np.real(a) for a in (H, I, J, G)))
    return pieces


def dalembert_inverse_lp(f: Field2, p: DyadicPartition | None = None) -> Field2:
    """``box^{-1} f = (H + I + J + G) / 4`` via the Littlewood-Paley split."""
    return f.with_values(0.25 * lp_pieces(f, p).total())


def dalembert_inverse(f: Field2, route: str = "quadrature", **kwargs) -> Field2:
    if route == "quadrature":
        return dalembert_inverse_quadrature(f, **kwargs)
    if route in ("lp", "littlewood-paley"):
        return dalembert_inverse_lp(f, **kwargs)
    raise ValueError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def box_central(F: Field2) -> np.ndarray:
    """``4 d_a d_b F`` by the centred mixed difference (periodic indexing)."""
    v = F.values
    h = F.grid.spacing
    r = lambda a, s0, s1: np.roll(np.roll(a, -s0, axis=-2), -s1, axis=-1)
    return (r(v, 1, 1) - r(v, 1, -1) - r(v, -1, 1) + r(v, -1, -1)) / h**2


def box_spectral(F: Field2) -> np.ndarray:
    from .spectral import mixed_derivative

    return 4.0 * mixed_derivative(F).values


def diagonal_trace(F: Field2) -> np.ndarray:
    """``F(a_i, -a_i)`` for ``i = 1 .. N-1``."""
    n = F.grid.n
    i = np.arange(1, n)
    return F.values[..., i, n - i]


def diagonal_flux(F: Field2) -> np.ndarray:
    """``(d_a + d_b) F`` at ``(a_i, -a_i)``, centred differences, ``i = 2 .. N-2``."""
    n, h = F.grid.n, F.grid.spacing
    v = F.values
    i = np.arange(2, n - 1)
    j = n - i
    da = (v[..., i + 1, j] - v[..., i - 1, j]) / (2 * h)
    db = (v[..., i, j + 1] - v[..., i, j - 1]) / (2 * h)
    return da + db


def window_mask(grid: Grid2, half: float) -> np.ndarray:
    x = grid.axis
    inside = np.abs(x) <= half + 1e-12
    return inside[:, None] & inside[None, :]


@dataclass
class InverseEstimateReport:
    ratios: list[float]
    skipped: int

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)


def inverse_estimate_ratio(f: Field2, s: float, delta: float, T: float = 1.0,
                           cut: CutoffPair | None = None, route: str = "lp",
                           partition: DyadicPartition | None = None) -> float | None:
    """``||eta_T chi_T box^{-1} f||_{s, delta} / ||f||_{s-1, delta-1}``; ``None`` for zero ``f``."""
    den = mixed_norm(f, s - 1.0, delta - 1.0)
    if den == 0.0:
        return None
    cut = cut or CutoffPair()
    if route == "lp":
        F = dalembert_inverse_lp(f, partition)
    else:
        F = dalembert_inverse_quadrature(f)
    return mixed_norm(F * cut.window(f.grid, T), s, delta) / den


def inverse_estimate_check(ensemble, s: float, delta: float, T: float = 1.0,
                           cut: CutoffPair | None = None, route: str = "lp") -> InverseEstimateReport:
    if not (0.75 < delta <= s < 1.0):
        raise ValueError(f"the estimate is stated for 3/4 < delta <= s < 1, got s={s}, delta={delta}")
    ratios, skipped = [], 0
    partition = None
    for f in ensemble:
        if partition is None or partition.grid != f.grid:
            partition = build_partition(f.grid)
        r = inverse_estimate_ratio(f, s, delta, T, cut, route, partition)
        if r is None:
            skipped += 1
        else:
            ratios.append(r)
    return InverseEstimateReport(ratios, skipped)
