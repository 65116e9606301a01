"""Even cutoffs equal to one on ``[-2, 2]`` and vanishing outside ``[-4, 4]``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import bump


def eta(x):
    return bump(np.asarray(x, dtype=float) / 2.0)


def scaled(profile, T: float):
    """``x -> profile(x / T)``."""
    return lambda x: profile(np.asarray(x, dtype=float) / T)


@dataclass(frozen=True)
class CutoffPair:
    """The cutoffs ``eta``, ``chi`` and the averaging bump ``psi``.

    ``psi = eta / int(eta)`` with the integral taken by the trapezoid rule on
    ``[-4, 4]`` at ``quad_points`` nodes, so ``int psi = 1`` holds for that
    rule to rounding error.
    """

    quad_points: int = 4097

    def eta(self, x):
        return eta(x)

    def chi(self, x):
        return eta(x)

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.linspace(-4.0, 4.0, self.quad_points)
        w = np.full_like(x, x[1] - x[0])
        w[0] = w[-1] = 0.5 * (x[1] - x[0])
        return x, w

    @property
    def eta_mass(self) -> float:
        x, w = self.quadrature()
        return float(np.sum(w * eta(x)))

    def psi(self, x):
        return eta(x) / self.eta_mass

    def eta_T(self, T: float):
        return scaled(eta, T)

    def chi_T(self, T: float):
        return scaled(eta, T)

    def window(self, grid, T: float = 1.0) -> np.ndarray:
        """``eta_T(alpha) chi_T(beta)`` sampled on ``grid``."""
        x = grid.axis / T
        return eta(x)[:, None] * eta(x)[None, :]
