"""Reproducible ensembles of smooth test fields.

Every field is a real trigonometric polynomial in the grid frequencies
``pi m / L`` with ``|m| <= modes``, optionally multiplied by a Gaussian
envelope.  Because the frequencies do not depend on ``N``, the same seed
gives samples of the same continuous field on every grid with the same half
width, which is what refinement comparisons need.
"""

from __future__ import annotations

import numpy as np

from .spectral import NULL, Field2, Grid2


def child_rngs(base_seed: int, size: int) -> list[np.random.Generator]:
    return [np.random.default_rng(c) for c in np.random.SeedSequence(base_seed).spawn(size)]


def trig_field(grid: Grid2, rng: np.random.Generator, modes: int = 6, decay: float = 1.0,
               envelope: float | None = None, frame=NULL, vector: bool = False) -> Field2:
    """Random real field ``sum c_mn exp(i pi (m a + n b) / L)`` with ``|c| ~ <(m, n)>^-decay``."""
    m = np.arange(-modes, modes + 1)
    k = np.pi * m / grid.half_width
    a, b = grid.mesh()
    comps = []
    for _ in range(2 if vector else 1):
        c = rng.standard_normal((m.size, m.size)) + 1j * rng.standard_normal((m.size, m.size))
        c = c * (1.0 + m[:, None] ** 2 + m[None, :] ** 2) ** (-decay / 2.0)
        ea = np.exp(1j * np.outer(k, a[:, 0]))  # (modes, N)
        eb = np.exp(1j * np.outer(k, b[0, :]))
        vals = np.real(ea.T @ c @ eb)
        if envelope is not None:
            vals = vals * np.exp(-(a**2 + b**2) / (2.0 * envelope**2))
        comps.append(vals)
    values = np.array(comps) if vector else comps[0]
    return Field2(grid, values, frame)


def trig_ensemble(grid: Grid2, base_seed: int, size: int, **kwargs) -> list[Field2]:
    return [trig_field(grid, rng, **kwargs) for rng in child_rngs(base_seed, size)]


def gaussian_wave_data(amplitude: float = 0.3, velocity: float = 0.2, width: float = 2.0):
    """Initial data ``A g(x) (cos x, sin x)`` and ``B g(x) (sin x, cos x)``, ``g`` Gaussian."""
    from .wave_ops import InitialData

    def env(x):
        return np.exp(-np.asarray(x, dtype=float) ** 2 / (2.0 * width**2))

    def u0(x):
        return amplitude * env(x) * np.array([np.cos(x), np.sin(x)])

    def u1(x):
        return velocity * env(x) * np.array([np.sin(x), np.cos(x)])

    return InitialData(u0, u1)
