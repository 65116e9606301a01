"""Polynomial Christoffel symbols, the null-frame nonlinearity and the noise
coefficient ``sigma``.

Targets are two dimensional.  Indices ``k, a, b`` are 1-based in the JSON
configuration and 0-based in arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .lp import mixed_norm
from .spectral import VECTOR2, Field2, central_derivative, spectral_derivative

DIM = 2


@dataclass(frozen=True, eq=False)
class ChristoffelTable:
    """``Gamma^k_ab(u) = sum_{|l| <= r} A[k, a, b, l1, l2] u1^l1 u2^l2``."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros((DIM, DIM, DIM, 1, 1)))

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 5 or c.shape[:3] != (DIM, DIM, DIM) or c.shape[3] != c.shape[4]:
            raise ValueError(f"coefficient array has shape {c.shape}, expected (2, 2, 2, r+1, r+1)")
        r = c.shape[3] - 1
        l1, l2 = np.meshgrid(np.arange(r + 1), np.arange(r + 1), indexing="ij")
        if np.any(c[..., l1 + l2 > r]):
            raise ValueError(f"monomials of total degree above r = {r} are not allowed")
        if not np.allclose(c, c.transpose(0, 2, 1, 3, 4), rtol=0, atol=0):
            raise ValueError("Christoffel symbols must be symmetric in the lower indices")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[3] - 1

    @property
    def is_flat(self) -> bool:
        return not np.any(self.coeffs)

    @classmethod
    def flat(cls) -> "ChristoffelTable":
        return cls()

    @classmethod
    def from_entries(cls, entries) -> "ChristoffelTable":
        """Build from ``{"k", "a", "b", "l": [l1, l2], "coeff"}`` records.

        An entry with ``a != b`` is mirrored to ``(k, b, a)`` unless the mirror
        is given explicitly, in which case both must agree.
        """
        entries = list(entries)
        r = max((sum(e["l"]) for e in entries), default=0)
        c = np.zeros((DIM, DIM, DIM, r + 1, r + 1))
        given = set()
        for e in entries:
            k, a, b = int(e["k"]) - 1, int(e["a"]) - 1, int(e["b"]) - 1
            l1, l2 = (int(v) for v in e["l"])
            if min(k, a, b, l1, l2) < 0 or max(k, a, b) >= DIM:
                raise ValueError(f"index out of range in Christoffel entry {e}")
            c[k, a, b, l1, l2] += float(e["coeff"])
            given.add((k, a, b, l1, l2))
        for k, a, b, l1, l2 in list(given):
            if a != b and (k, b, a, l1, l2) not in given:
                c[k, b, a, l1, l2] = c[k, a, b, l1, l2]
        return cls(c)

    def to_entries(self) -> list[dict]:
        out = []
        for idx in zip(*np.nonzero(self.coeffs)):
            k, a, b, l1, l2 = (int(i) for i in idx)
            out.append({"k": k + 1, "a": a + 1, "b": b + 1, "l": [l1, l2],
                        "coeff": float(self.coeffs[idx])})
        return out

    @classmethod
    def random(cls, degree: int, amplitude: float, seed: int) -> "ChristoffelTable":
        """Symmetric table with coefficients uniform in ``[-amplitude, amplitude]``."""
        rng = np.random.default_rng(seed)
        c = rng.uniform(-amplitude, amplitude, (DIM, DIM, DIM, degree + 1, degree + 1))
        c = 0.5 * (c + c.transpose(0, 2, 1, 3, 4))
        l1, l2 = np.meshgrid(np.arange(degree + 1), np.arange(degree + 1), indexing="ij")
        c[..., l1 + l2 > degree] = 0.0
        return cls(c)

    def scaled(self, factor: float) -> "ChristoffelTable":
        return ChristoffelTable(self.coeffs * factor)

    def translated(self, shift) -> "ChristoffelTable":
        """Table of ``u -> Gamma(u + shift)``, re-expanded in monomials."""
        s1, s2 = (float(v) for v in shift)
        r = self.degree
        c = self.coeffs
        out = np.zeros_like(c)
        for l1 in range(r + 1):
            for l2 in range(r + 1 - l1):
                block = c[..., l1, l2]
                if not np.any(block):
                    continue
                for m1 in range(l1 + 1):
                    for m2 in range(l2 + 1):
                        w = comb(l1, m1) * comb(l2, m2) * s1 ** (l1 - m1) * s2 ** (l2 - m2)
                        out[..., m1, m2] += w * block
        return ChristoffelTable(out)


def christoffel_eval(table: ChristoffelTable, u) -> np.ndarray:
    """``Gamma[k, a, b]`` at ``u = (u1, u2)``; broadcasts over trailing grid axes.

    Uses nested Horner evaluation in ``u2`` and then ``u1``.
    """
    u1, u2 = (np.asarray(v, dtype=float) for v in u)
    c = table.coeffs
    r = table.degree
    shape = np.broadcast(u1, u2).shape
    out = np.zeros((DIM, DIM, DIM) + shape)
    for l1 in range(r, -1, -1):
        inner = np.zeros((DIM, DIM, DIM) + shape)
        for l2 in range(r - l1, -1, -1):
            inner = inner * u2 + c[..., l1, l2].reshape((DIM, DIM, DIM) + (1,) * len(shape))
        out = out * u1 + inner
    return out


def nonlinearity(u: Field2, table: ChristoffelTable, derivative: str = "spectral") -> Field2:
    """``N^k(u) = 4 sum_{a,b} Gamma^k_ab(u) d_alpha u^a d_beta u^b`` pointwise."""
    if u.arity != VECTOR2:
        raise ValueError("the nonlinearity acts on R^2-valued fields")
    if table.is_flat:
        return u.with_values(np.zeros_like(u.values))
    diff = spectral_derivative if derivative == "spectral" else central_derivative
    da = diff(u, 0).values
    db = diff(u, 1).values
    gamma = christoffel_eval(table, u.values)
    out = 4.0 * np.einsum("kab...,a...,b...->k...", gamma, da, db)
    return u.with_values(out)


# sup norms of f, f', f'', f''' for each catalogue profile
_PROFILE_BOUNDS = {
    "zero": (0.0, 0.0, 0.0, 0.0),
    "constant": (0.0, 0.0, 0.0, 0.0),
    "sin": (1.0, 1.0, 1.0, 1.0),
    "sin_cos": (1.0, 1.0, 1.0, 1.0),
    "saturating": (0.5, 1.0, 1.5, 6.0),
}


def _saturating(x):
    return x / (1.0 + x * x)


@dataclass(frozen=True)
class DiffusionCoeff:
    """``sigma(u) = offset + scale * profile(u + shift)`` from a closed catalogue.

    Profiles: ``zero``; ``constant`` (offset only); ``sin`` = (sin u1, sin u2);
    ``sin_cos`` = (sin u1, cos u2); ``saturating`` = u / (1 + u^2) componentwise.
    """

    kind: str = "zero"
    scale: float = 0.0
    offset: tuple[float, float] = (0.0, 0.0)
    shift: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in _PROFILE_BOUNDS:
            raise ValueError(f"unknown sigma kind {self.kind!r}; choose from {sorted(_PROFILE_BOUNDS)}")
        object.__setattr__(self, "offset", tuple(float(v) for v in self.offset))
        object.__setattr__(self, "shift", tuple(float(v) for v in self.shift))

    @property
    def is_zero(self) -> bool:
        return (self.kind in ("zero", "constant") or self.scale == 0.0) and not any(self.offset)

    def __call__(self, u1, u2) -> tuple[np.ndarray, np.ndarray]:
        u1 = np.asarray(u1, dtype=float) + self.shift[0]
        u2 = np.asarray(u2, dtype=float) + self.shift[1]
        o1, o2 = self.offset
        if self.kind in ("zero", "constant"):
            z = np.zeros(np.broadcast(u1, u2).shape)
            return z + o1, z + o2
        if self.kind == "sin":
            p1, p2 = np.sin(u1), np.sin(u2)
        elif self.kind == "sin_cos":
            p1, p2 = np.sin(u1), np.cos(u2)
        else:
            p1, p2 = _saturating(u1), _saturating(u2)
        return o1 + self.scale * p1, o2 + self.scale * p2

    def cb3_bound(self) -> float:
        """Recorded bound on ``max_{|m| <= 3} sup |D^m sigma|``."""
        bounds = _PROFILE_BOUNDS[self.kind]
        return max(abs(self.offset[0]), abs(self.offset[1])) + abs(self.scale) * max(bounds)

    def derivative_bounds(self) -> tuple[float, float, float, float]:
        off = max(abs(v) for v in self.offset)
        b = _PROFILE_BOUNDS[self.kind]
        return (off + abs(self.scale) * b[0],) + tuple(abs(self.scale) * v for v in b[1:])

    def translated(self, shift) -> "DiffusionCoeff":
        return DiffusionCoeff(self.kind, self.scale, self.offset,
                              (self.shift[0] + float(shift[0]), self.shift[1] + float(shift[1])))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "scale": self.scale, "offset": list(self.offset)}


def probe_derivative_sup(sigma: DiffusionCoeff, span: float = 10.0, samples: int = 4001) -> np.ndarray:
    """Finite-difference sup of ``|d^m sigma_i / du_i^m|`` for ``m = 0..3``."""
    x = np.linspace(-span, span, samples)
    h = x[1] - x[0]
    out = np.zeros(4)
    for comp in range(2):
        vals = sigma(x, np.zeros_like(x))[0] if comp == 0 else sigma(np.zeros_like(x), x)[1]
        d = vals
        for m in range(4):
            out[m] = max(out[m], np.max(np.abs(d[3:-3])))
            d = np.gradient(d, h)
    return out


def sigma_apply(sigma: DiffusionCoeff, u: Field2) -> Field2:
    """Pointwise composition ``sigma(u)``."""
    if u.arity != VECTOR2:
        raise ValueError("sigma acts on R^2-valued fields")
    s1, s2 = sigma(u.values[0], u.values[1])
    return u.with_values(np.array([s1, s2]))


@dataclass
class CompositionReport:
    c1: float
    c2: float
    ratios1: list[float]
    ratios2: list[float]
    skipped: int


def composition_bound_check(sigma: DiffusionCoeff, ensemble, s: float, delta: float) -> CompositionReport:
    """Empirical constants of the two composition estimates over an ensemble.

    ``C1 = max ||sigma(u)||^2 / (||u||^2 (1 + ||u||^2))`` and, over consecutive
    pairs, ``C2 = max ||sigma(u1) - sigma(u2)||^2 / (||u1 - u2||^2 (1 + sum_{i,k} ||u_i||^{2k}))``.
    Zero denominators are skipped.
    """
    ensemble = list(ensemble)
    if not ensemble:
        raise ValueError("empty ensemble")
    norms = [mixed_norm(u, s, delta) for u in ensemble]
    images = [sigma_apply(sigma, u) for u in ensemble]
    r1, r2, skipped = [], [], 0
    for u, nu, su in zip(ensemble, norms, images):
        if nu == 0.0:
            skipped += 1
            continue
        r1.append(mixed_norm(su, s, delta) ** 2 / (nu**2 * (1.0 + nu**2)))
    for i in range(len(ensemble) - 1):
        d = mixed_norm(ensemble[i] - ensemble[i + 1], s, delta)
        if d == 0.0:
            skipped += 1
            continue
        grow = 1.0 + sum(n ** (2 * k) for n in (norms[i], norms[i + 1]) for k in (1, 2))
        r2.append(mixed_norm(images[i] - images[i + 1], s, delta) ** 2 / (d**2 * grow))
    return CompositionReport(max(r1, default=0.0), max(r2, default=0.0), r1, r2, skipped)
