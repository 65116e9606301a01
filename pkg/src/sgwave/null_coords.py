"""Change of variables between ``(t, x)`` and null coordinates ``(t + x, t - x)``.

Both frames share one :class:`~sgwave.spectral.Grid2`.  The map
``(t, x) -> (t + x, t - x)`` sends the cartesian lattice onto the even
sublattice of the null lattice, so :func:`from_null` is an exact gather.
:func:`to_null` also needs the odd sublattice, which corresponds to the
cartesian lattice shifted by half a cell in both directions; those values are
obtained by a spectral shift and are exact for band-limited fields.

Points whose preimage lies outside the box are filled with zero, which is
only legitimate for fields that vanish near the boundary; a support check
guards that assumption.
"""

from __future__ import annotations

import numpy as np

from .lp import hyperbolic_norm, mixed_norm
from .spectral import CARTESIAN, NULL, Field2, spectral_multiply

SUPPORT_TOL = 1e-8


def _check_margin(f: Field2, what: str, tol: float = SUPPORT_TOL):
    n = f.grid.n
    band = max(n // 16, 1)
    v = np.abs(f.values)
    top = v.max()
    if top == 0.0:
        return
    edge = max(
        v[..., :band, :].max(), v[..., -band:, :].max(),
        v[..., :, :band].max(), v[..., :, -band:].max(),
    )
    if edge > tol * top:
        raise ValueError(
            f"{what}: field is not negligible near the box boundary "
            f"(edge/max = {edge / top:.2e}); enlarge the grid half width"
        )


def _half_shift(f: Field2) -> np.ndarray:
    """Values at ``(t_j + dx/2, x_l + dx/2)``."""
    k = f.grid.freqs
    h = 0.5 * f.grid.spacing
    symbol = np.exp(1j * h * (k[:, None] + k[None, :]))
    return spectral_multiply(f, symbol).values


def to_null(u: Field2, check_support: bool = True) -> Field2:
    """``u*(alpha, beta) = u((alpha + beta)/2, (alpha - beta)/2)``."""
    if u.frame != CARTESIAN:
        raise ValueError("to_null expects a cartesian field")
    if check_support:
        _check_margin(u, "to_null")
    n = u.grid.n
    i, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    even = (i + k) % 2 == 0
    j = np.where(even, (i + k) // 2, (i + k - 1) // 2)
    l = np.where(even, (i - k) // 2, (i - k - 1) // 2) + n // 2
    direct = u.values[..., j, l]
    shifted = _half_shift(u)[..., j, l]
    out = np.where(even, direct, shifted)
    return Field2(u.grid, out, NULL)


def from_null(u_star: Field2, check_support: bool = True) -> Field2:
    """``u(t, x) = u*(t + x, t - x)``; zero where the preimage leaves the box."""
    if u_star.frame != NULL:
        raise ValueError("from_null expects a null-frame field")
    n = u_star.grid.n
    j, l = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i = j + l - n // 2
    k = j - l + n // 2
    inside = (i >= 0) & (i < n) & (k >= 0) & (k < n)
    if check_support and not inside.all():
        _check_margin(u_star, "from_null")
    vals = u_star.values[..., np.clip(i, 0, n - 1), np.clip(k, 0, n - 1)]
    out = np.where(inside, vals, 0.0)
    return Field2(u_star.grid, out, CARTESIAN)


def isomorphism_ratio(u: Field2, s: float, delta: float) -> float:
    """``||u*||_{mixed} / ||u||_{hyperbolic}`` for one cartesian field."""
    if s < delta:
        raise ValueError(f"the null-coordinate isomorphism needs s >= delta, got s={s}, delta={delta}")
    den = hyperbolic_norm(u, s, delta)
    if den == 0.0:
        raise ValueError("isomorphism_ratio is undefined for the zero field")
    return mixed_norm(to_null(u), s, delta) / den
