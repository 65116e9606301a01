"""Input checks shared by the estimator facade and the command line."""

from __future__ import annotations

import numbers

import numpy as np


def check_field_stack(X, n: int | None = None, name: str = "X", vector: bool = False) -> np.ndarray:
    """Return ``X`` as a float array of square fields, shape ``(m, [2,] n, n)``.

    A single field is promoted to a stack of one.
    """
    arr = np.asarray(X)
    if not np.issubdtype(arr.dtype, np.number):
        raise TypeError(f"{name} must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(complex if np.iscomplexobj(arr) else float, copy=False)
    core = 3 if vector else 2
    if arr.ndim == core:
        arr = arr[None]
    if arr.ndim != core + 1:
        raise ValueError(f"{name} must have {core} or {core + 1} dimensions, got shape {arr.shape}")
    if vector and arr.shape[1] != 2:
        raise ValueError(f"{name} must hold R^2-valued fields, got shape {arr.shape}")
    if arr.shape[-1] != arr.shape[-2]:
        raise ValueError(f"{name} fields must be square, got {arr.shape[-2:]}")
    if n is not None and arr.shape[-1] != n:
        raise ValueError(f"{name} fields have {arr.shape[-1]} points per axis, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def check_unit_interval(value, name: str, low: float = 0.0, high: float = 1.0) -> float:
    if not isinstance(value, numbers.Real) or not low < value < high:
        raise ValueError(f"{name} must lie in ({low}, {high}), got {value!r}")
    return float(value)


def check_exponents(s, delta) -> tuple[float, float]:
    s = check_unit_interval(s, "s", 0.75, 1.0)
    delta = check_unit_interval(delta, "delta", 0.75, 1.0)
    if delta > s:
        raise ValueError(f"need delta <= s, got s={s}, delta={delta}")
    return s, delta


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_seed(value, name: str = "seed") -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or not 0 <= value < 2**64:
        raise ValueError(f"{name} must be an integer in [0, 2^64), got {value!r}")
    return int(value)
