"""Periodic 2-D grids, sampled fields and the discrete Fourier machinery.

The plane is replaced by the torus ``[-L, L)^2`` sampled with ``N`` points per
axis.  Spectral coefficients approximate the continuous Fourier transform

    F(f)(tau, xi) = \\int\\int f(a, b) exp(-i (tau a + xi b)) da db

so that ``sum |F f|^2 / (2L)^2`` is the discrete L2 norm ``sum |f|^2 dx^2``.
Axis 0 of every array is the first variable (``t`` or ``alpha``), axis 1 the
second (``x`` or ``beta``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

import numpy as np

NULL = "null"
CARTESIAN = "cartesian"
SCALAR = "scalar"
VECTOR2 = "vector2"

Frame = Literal["null", "cartesian"]


@dataclass(frozen=True)
class Grid2:
    """Uniform periodic grid on ``[-L, L)^2`` with ``N`` points per axis."""

    half_width: float = 16.0
    n: int = 512

    def __post_init__(self):
        n = int(self.n)
        if n < 4 or n & (n - 1):
            raise ValueError(f"points per axis must be a power of two >= 4, got {self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half width must be positive, got {self.half_width}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n)

    @property
    def extended_axis(self) -> np.ndarray:
        """Grid axis plus the right end point ``+L`` (length ``N + 1``)."""
        return -self.half_width + self.spacing * np.arange(self.n + 1)

    @property
    def freqs(self) -> np.ndarray:
        """Angular frequencies ``pi m / L`` in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.axis
        return np.meshgrid(x, x, indexing="ij")

    def freq_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.freqs
        return np.meshgrid(k, k, indexing="ij")

    def reflected_index(self) -> np.ndarray:
        """Index of ``-x_i`` on the extended axis (``N`` stands for ``+L``)."""
        return self.n - np.arange(self.n)

    def scaled(self, factor: float) -> "Grid2":
        return Grid2(self.half_width * factor, self.n)


@dataclass(frozen=True, eq=False)
class Field2:
    """Scalar or R^2-valued samples on a :class:`Grid2`, tagged with a frame.

    ``values`` has shape ``(N, N)`` for scalar fields and ``(2, N, N)`` for
    vector fields (component first).
    """

    grid: Grid2
    values: np.ndarray
    frame: Frame = NULL

    def __post_init__(self):
        if self.frame not in (NULL, CARTESIAN):
            raise ValueError(f"unknown frame {self.frame!r}")
        values = np.asarray(self.values)
        n = self.grid.n
        if values.shape not in ((n, n), (2, n, n)):
            raise ValueError(f"values of shape {values.shape} do not fit an {n}x{n} grid")
        if not np.issubdtype(values.dtype, np.complexfloating):
            values = values.astype(float, copy=False)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def arity(self) -> str:
        return VECTOR2 if self.values.ndim == 3 else SCALAR

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def components(self) -> list["Field2"]:
        if self.arity == SCALAR:
            return [self]
        return [self.with_values(v) for v in self.values]

    def with_values(self, values) -> "Field2":
        return Field2(self.grid, np.asarray(values), self.frame)

    def real(self) -> "Field2":
        return self.with_values(np.real(self.values))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)) * self.grid.spacing)

    def _coerce(self, other):
        if isinstance(other, Field2):
            if other.grid != self.grid or other.frame != self.frame:
                raise ValueError("fields live on different grids or frames")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._coerce(other))

    def __rsub__(self, other):
        return self.with_values(self._coerce(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / self._coerce(other))

    def __neg__(self):
        return self.with_values(-self.values)

    @classmethod
    def zeros(cls, grid: Grid2, frame: Frame = NULL, arity: str = SCALAR) -> "Field2":
        shape = (grid.n, grid.n) if arity == SCALAR else (2, grid.n, grid.n)
        return cls(grid, np.zeros(shape), frame)

    @classmethod
    def from_function(cls, grid: Grid2, func, frame: Frame = NULL) -> "Field2":
        """Sample ``func(a, b)`` on the grid; vector results are stacked first."""
        a, b = grid.mesh()
        values = np.asarray(func(a, b))
        if values.ndim == 0:
            values = np.full((grid.n, grid.n), float(values))
        elif values.ndim == 3 and values.shape[0] == 2:
            values = np.array([np.broadcast_to(v, (grid.n, grid.n)) for v in values])
        else:
            values = np.broadcast_to(values, (grid.n, grid.n)).copy()
        return cls(grid, values, frame)


@dataclass(frozen=True, eq=False)
class Spectrum2:
    """Fourier coefficients of a :class:`Field2` in FFT index order.

    ``coefficients[..., m, n]`` approximates the continuous transform at
    ``(grid.freqs[m], grid.freqs[n])``; the phase of the left-edge origin
    ``-L`` is already folded in.
    """

    grid: Grid2
    coefficients: np.ndarray
    frame: Frame = NULL
    real_input: bool = field(default=True)

    @property
    def normalization(self) -> float:
        """Weight turning ``sum |c|^2`` into the discrete squared L2 norm."""
        return 1.0 / (2.0 * self.grid.half_width) ** 2


def _origin_phase(grid: Grid2) -> np.ndarray:
    # exp(i tau_m L) = (-1)^m on this lattice
    return np.where(grid.mode_numbers % 2 == 0, 1.0, -1.0)


def dft2(f: Field2) -> Spectrum2:
    """Forward transform with the continuous-Fourier scaling ``dx^2``."""
    g = f.grid
    ph = _origin_phase(g)
    coeffs = np.fft.fft2(f.values, axes=(-2, -1)) * g.spacing**2
    coeffs = coeffs * ph[:, None] * ph[None, :]
    return Spectrum2(g, coeffs, f.frame, f.is_real)


def idft2(s: Spectrum2) -> Field2:
    """Inverse of :func:`dft2`; real output when the input field was real."""
    g = s.grid
    ph = _origin_phase(g)
    values = np.fft.ifft2(s.coefficients * ph[:, None] * ph[None, :], axes=(-2, -1))
    values = values / g.spacing**2
    if s.real_input:
        values = values.real
    return Field2(g, values, s.frame)


def spectral_multiply(f: Field2, symbol: np.ndarray, drop_nyquist: bool = True) -> Field2:
    """Apply the Fourier multiplier ``symbol`` (shape ``(N, N)``) to ``f``.

    The unpaired Nyquist row and column are zeroed when ``drop_nyquist`` is
    set, which keeps odd multipliers real on real input.
    """
    g = f.grid
    values = np.fft.fft2(f.values, axes=(-2, -1)) * symbol
    if drop_nyquist:
        values[..., g.n // 2, :] = 0.0
        values[..., :, g.n // 2] = 0.0
    out = np.fft.ifft2(values, axes=(-2, -1))
    if f.is_real:
        out = out.real
    return f.with_values(out)


def spectral_derivative(f: Field2, axis: int | str) -> Field2:
    """Differentiate along ``axis`` (0/'alpha'/'t' or 1/'beta'/'x') spectrally."""
    k = f.grid.freqs
    symbol = 1j * (k[:, None] if _axis_index(axis) == 0 else k[None, :])
    return spectral_multiply(f, np.broadcast_to(symbol, (f.grid.n, f.grid.n)))


def mixed_derivative(f: Field2) -> Field2:
    """Spectral ``d^2 f / (d alpha d beta)``."""
    k = f.grid.freqs
    return spectral_multiply(f, -(k[:, None] * k[None, :]))


def central_derivative(f: Field2, axis: int | str) -> Field2:
    """Second-order centred difference on the periodic grid."""
    ax = _axis_index(axis) + (f.values.ndim - 2)
    v = f.values
    d = (np.roll(v, -1, axis=ax) - np.roll(v, 1, axis=ax)) / (2.0 * f.grid.spacing)
    return f.with_values(d)


def _axis_index(axis) -> int:
    if axis in (0, "alpha", "t", "tau"):
        return 0
    if axis in (1, "beta", "x", "xi"):
        return 1
    raise ValueError(f"unknown axis {axis!r}")


def cumulative_integral(values: np.ndarray, spacing: float, axis: int = -1,
                        method: str = "trapezoid") -> np.ndarray:
    """Integral from the left edge ``-L`` to every point of the extended axis.

    The output has ``N + 1`` entries along ``axis``; entry ``N`` is the
    integral up to ``+L``, where the integrand takes its periodic value.

    ``method='trapezoid'`` is the second-order cumulative rule.
    ``method='spectral'`` integrates the trigonometric interpolant exactly,
    which is spectrally accurate for smooth periodic or compactly supported
    integrands.
    """
    v = np.moveaxis(np.asarray(values), axis, -1)
    n = v.shape[-1]
    if method == "trapezoid":
        ext = np.concatenate([v, v[..., :1]], axis=-1)
        mids = 0.5 * (ext[..., 1:] + ext[..., :-1]) * spacing
        out = np.concatenate([np.zeros(v.shape[:-1] + (1,), dtype=mids.dtype),
                              np.cumsum(mids, axis=-1)], axis=-1)
    elif method == "spectral":
        length = n * spacing
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=spacing)
        vh = np.fft.fft(v, axis=-1)
        mean = vh[..., :1] / n
        inv = np.zeros(n, dtype=complex)
        inv[1:] = 1.0 / (1j * k[1:])
        inv[n // 2] = 0.0
        prim = np.fft.ifft(vh * inv, axis=-1)
        prim = np.concatenate([prim, prim[..., :1]], axis=-1)
        x = spacing * np.arange(n + 1)
        out = mean * x + (prim - prim[..., :1])
        if not np.iscomplexobj(v):
            out = out.real
    else:
        raise ValueError(f"unknown integration method {method!r}")
    return np.moveaxis(out, -1, axis)


def save_field(f: Field2, path: str | Path) -> tuple[Path, Path]:
    """Write ``path.bin`` (row-major little-endian float64) and ``path.json``.

    Complex fields store interleaved real/imaginary pairs.
    """
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".bin", ".json") else path
    bin_path = base.with_suffix(".bin")
    header_path = base.with_suffix(".json")
    complex_values = not f.is_real
    dtype = "<c16" if complex_values else "<f8"
    np.ascontiguousarray(f.values, dtype=dtype).tofile(bin_path)
    header = {
        "L": f.grid.half_width,
        "N": f.grid.n,
        "frame": f.frame,
        "arity": f.arity,
        "dtype": "complex128" if complex_values else "float64",
        "byte_order": "little",
        "layout": "row-major",
    }
    header_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return bin_path, header_path


def load_field(path: str | Path) -> Field2:
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".bin", ".json") else path
    header = json.loads(base.with_suffix(".json").read_text())
    grid = Grid2(header["L"], header["N"])
    dtype = "<c16" if header.get("dtype") == "complex128" else "<f8"
    shape = (grid.n, grid.n) if header["arity"] == SCALAR else (2, grid.n, grid.n)
    values = np.fromfile(base.with_suffix(".bin"), dtype=dtype).reshape(shape)
    return Field2(grid, values, header["frame"])


def with_frame(f: Field2, frame: Frame) -> Field2:
    return replace(f, frame=frame)
