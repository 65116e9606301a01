"""Dyadic partitions of unity, Littlewood-Paley blocks and Sobolev-type norms.

All norms are evaluated on the discrete spectrum with the normalisation of
:mod:`sgwave.spectral`, so that every family reduces to the discrete L2 norm
when both exponents vanish.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral import CARTESIAN, NULL, Field2, Grid2, dft2, idft2, Spectrum2

PRODUCT_AB = "product_Hs_ab"
PRODUCT_BA = "product_Hs_ba"
MIXED = "mixed"
HYPERBOLIC = "hyperbolic"
BESOV = "besov_S22"
FAMILIES = (PRODUCT_AB, PRODUCT_BA, MIXED, HYPERBOLIC, BESOV)


def _g(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def bump(x):
    """Smooth radial bump: 1 on ``[-1, 1]``, 0 outside ``[-2, 2]``."""
    r = np.abs(np.asarray(x, dtype=float))
    a = _g(2.0 - r)
    b = _g(r - 1.0)
    return a / (a + b)


def bump_derivative(x):
    """Exact derivative of :func:`bump`."""
    x = np.asarray(x, dtype=float)
    r = np.abs(x)
    a, b = _g(2.0 - r), _g(r - 1.0)
    out = np.zeros_like(r)
    mid = (r > 1.0) & (r < 2.0)
    u, v = 2.0 - r[mid], r[mid] - 1.0
    da = -a[mid] / u**2  # d/dr g(2 - r)
    db = b[mid] / v**2
    den = a[mid] + b[mid]
    out[mid] = (da * den - a[mid] * (da + db)) / den**2
    return np.sign(x) * out


def bracket(x):
    """Japanese bracket ``(1 + |x|^2)^(1/2)``."""
    return np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


def phi(j: int, x):
    """Member ``j`` of the dyadic partition evaluated at ``x``."""
    if j < 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    if j == 0:
        return bump(x)
    x = np.asarray(x, dtype=float)
    return bump(x / 2.0**j) - bump(x / 2.0 ** (j - 1))


@dataclass(frozen=True)
class DyadicPartition:
    """The family ``phi_0 .. phi_J`` cached on the frequency axis of a grid."""

    grid: Grid2

    def __post_init__(self):
        if self.j_max < 2:
            raise ValueError(
                f"grid too coarse for a dyadic decomposition: J_max = {self.j_max} < 2"
            )

    @cached_property
    def j_max(self) -> int:
        top = np.max(np.abs(self.grid.freqs))
        j = 0
        while 2.0**j < top:  # largest j with 2^(j-1) < top
            j += 1
        return j

    @cached_property
    def table(self) -> np.ndarray:
        """``table[j, m] = phi_j(freqs[m])``."""
        k = self.grid.freqs
        rows = [phi(j, k) for j in range(self.j_max + 1)]
        table = np.array(rows)
        table.setflags(write=False)
        return table

    def __call__(self, j: int) -> np.ndarray:
        if j < 0 or j > self.j_max:
            return np.zeros(self.grid.n)
        return self.table[j]

    def low(self) -> np.ndarray:
        return self.table[0]

    def high(self) -> np.ndarray:
        return self.table[1:].sum(axis=0)

    def shell_weight(self, s: float) -> np.ndarray:
        """``sum_j 2^(2 s j) phi_j(k)^2`` on the frequency axis."""
        powers = 2.0 ** (2.0 * s * np.arange(self.j_max + 1))
        return powers @ self.table**2


def build_partition(grid: Grid2) -> DyadicPartition:
    return DyadicPartition(grid)


def lp_block(f: Field2, j: int, k: int, p: DyadicPartition) -> Field2:
    """``F^{-1}(phi_j(tau) phi_k(xi) F f)``; the zero field for negative indices."""
    if j < 0 or k < 0:
        return f.with_values(np.zeros_like(f.values))
    s = dft2(f)
    mask = p(j)[:, None] * p(k)[None, :]
    return idft2(Spectrum2(s.grid, s.coefficients * mask, s.frame, s.real_input))


@dataclass(frozen=True)
class NormSpec:
    s: float
    delta: float
    family: str = PRODUCT_AB

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown norm family {self.family!r}")


def _power(f: Field2) -> np.ndarray:
    """Spectral power summed over components, already normalised."""
    s = dft2(f)
    power = np.abs(s.coefficients) ** 2
    if power.ndim == 3:
        power = power.sum(axis=0)
    return power * s.normalization


def _product_weight(grid: Grid2, s: float, delta: float, swap: bool = False) -> np.ndarray:
    k = grid.freqs
    w_first = bracket(k) ** (2.0 * (delta if swap else s))
    w_second = bracket(k) ** (2.0 * (s if swap else delta))
    return w_first[:, None] * w_second[None, :]


def product_norm(f: Field2, spec: NormSpec) -> float:
    """Norm of ``H^s H^delta`` with the exponent ``s`` on the first axis.

    The ``product_Hs_ba`` family puts ``s`` on the second axis instead.
    """
    if spec.family not in (PRODUCT_AB, PRODUCT_BA):
        raise ValueError(f"product_norm needs a product family, got {spec.family!r}")
    w = _product_weight(f.grid, spec.s, spec.delta, swap=spec.family == PRODUCT_BA)
    return float(np.sqrt(np.sum(w * _power(f))))


def mixed_norm(f: Field2, s: float, delta: float) -> float:
    """Root-sum-square of the two product norms (the intersection space norm)."""
    if f.frame != NULL:
        raise ValueError("mixed_norm expects a field in null coordinates")
    return _mixed_from_power(f.grid, _power(f), s, delta)


def _mixed_from_power(grid: Grid2, power: np.ndarray, s: float, delta: float) -> float:
    w = _product_weight(grid, s, delta) + _product_weight(grid, s, delta, swap=True)
    return float(np.sqrt(np.sum(w * power)))


def mixed_norm_many(f: Field2, exponents) -> list[float]:
    """:func:`mixed_norm` for several ``(s, delta)`` pairs sharing one FFT."""
    if f.frame != NULL:
        raise ValueError("mixed_norm expects a field in null coordinates")
    power = _power(f)
    return [_mixed_from_power(f.grid, power, s, d) for s, d in exponents]


def hyperbolic_norm(f: Field2, s: float, delta: float) -> float:
    """Wave-adapted norm with weights <|tau|+|xi|>^s <|tau|-|xi|>^delta."""
    if f.frame != CARTESIAN:
        raise ValueError("hyperbolic_norm expects a field in cartesian coordinates")
    tau, xi = f.grid.freq_mesh()
    w = bracket(np.abs(tau) + np.abs(xi)) ** (2.0 * s) * bracket(np.abs(tau) - np.abs(xi)) ** (2.0 * delta)
    return float(np.sqrt(np.sum(w * _power(f))))


def besov_norm(f: Field2, s1: float, s2: float, p: DyadicPartition) -> float:
    """``(sum_{j,k} 2^{2(s1 j + s2 k)} ||Delta_{j,k} f||_2^2)^(1/2)``.

    Evaluated in frequency space; identical to summing the blocks of
    :func:`lp_block` one by one.
    """
    w = p.shell_weight(s1)[:, None] * p.shell_weight(s2)[None, :]
    return float(np.sqrt(np.sum(w * _power(f))))


def block_energies(f: Field2, p: DyadicPartition) -> np.ndarray:
    """``E[j, k] = ||Delta_{j,k} f||_2^2`` for all retained shells."""
    power = _power(f)
    t = p.table**2
    return t @ power @ t.T


def norm(f: Field2, spec: NormSpec, p: DyadicPartition | None = None) -> float:
    """Dispatch on ``spec.family``."""
    if spec.family in (PRODUCT_AB, PRODUCT_BA):
        return product_norm(f, spec)
    if spec.family == MIXED:
        return mixed_norm(f, spec.s, spec.delta)
    if spec.family == HYPERBOLIC:
        return hyperbolic_norm(f, spec.s, spec.delta)
    return besov_norm(f, spec.s, spec.delta, p if p is not None else build_partition(f.grid))


def derivative_decay_constants(j_max: int, samples: int = 4001) -> np.ndarray:
    """Finite-difference estimates of ``sup_x |2^j phi_j'(x)|`` for each ``j``."""
    out = []
    for j in range(j_max + 1):
        top = 2.0 ** (j + 1) * 1.05
        x = np.linspace(-top, top, samples)
        d = np.gradient(phi(j, x), x)
        out.append(np.max(np.abs(d)) * 2.0**j)
    return np.array(out)
