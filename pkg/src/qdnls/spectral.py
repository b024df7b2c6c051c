"""Periodic grid, complex fields, and Fourier-multiplier primitives.

All operators act through the FFT on a uniform box [-L/2, L/2)^d and are
exact on band-limited inputs: spatial derivatives, free Schrodinger
propagators, per-axis Hilbert transforms and half derivatives, and the
2/3-rule dealiasing mask.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import fft as _sfft

_HEADER = struct.Struct("<IIddi")  # dim, n, length, time, equation

_FFT_WORKERS = 1  # fixed default keeps reruns bit-identical


def set_fft_workers(n: int) -> None:
    """Set the worker count used by all transforms (determinism: keep fixed)."""
    global _FFT_WORKERS
    if n < 1:
        raise ValueError("worker count must be >= 1")
    _FFT_WORKERS = n


def fftn(values: np.ndarray) -> np.ndarray:
    return _sfft.fftn(values, workers=_FFT_WORKERS)


def ifftn(values: np.ndarray) -> np.ndarray:
    return _sfft.ifftn(values, workers=_FFT_WORKERS)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L/2, L/2)^d with N points per axis."""

    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError("points per axis must be a power of two >= 8")
        if not self.length > 0:
            raise ValueError("box length must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis_coordinates(self) -> np.ndarray:
        """1-d coordinates -L/2 + i*h, identical for every axis."""
        return -0.5 * self.length + self.spacing * np.arange(self.n)

    def coordinate(self, axis: int) -> np.ndarray:
        """Coordinate array of one axis broadcast to the full grid shape."""
        self._check_axis(axis)
        x = self.axis_coordinates()
        if self.dim == 1:
            return x
        shape = [1] * self.dim
        shape[axis - 1] = self.n
        return x.reshape(shape) * np.ones(self.shape)

    def frequencies(self, axis: int) -> np.ndarray:
        """Angular frequencies 2*pi*k/L of one axis, FFT ordering, broadcastable."""
        self._check_axis(axis)
        xi = _axis_frequencies(self.n, self.length)
        if self.dim == 1:
            return xi
        shape = [1] * self.dim
        shape[axis - 1] = self.n
        return xi.reshape(shape)

    def frequency_sq(self) -> np.ndarray:
        """|xi|^2 on the full frequency grid."""
        total = np.zeros(self.shape)
        for axis in range(1, self.dim + 1):
            total = total + self.frequencies(axis) ** 2
        return total

    def mode_indices(self, axis: int) -> np.ndarray:
        """Integer mode numbers k in [-N/2, N/2), FFT ordering, broadcastable."""
        self._check_axis(axis)
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        if self.dim == 1:
            return k
        shape = [1] * self.dim
        shape[axis - 1] = self.n
        return k.reshape(shape)

    def dealias_mask(self) -> np.ndarray:
        return _dealias_mask(self.dim, self.n)

    def _check_axis(self, axis: int):
        if not 1 <= axis <= self.dim:
            raise ValueError(f"axis {axis} out of range 1..{self.dim}")


@lru_cache(maxsize=32)
def _axis_frequencies(n: int, length: float) -> np.ndarray:
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    xi.setflags(write=False)  # shared across callers
    return xi


@lru_cache(maxsize=32)
def _dealias_mask(dim: int, n: int) -> np.ndarray:
    k = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    keep = k <= n / 3.0
    mask = keep if dim == 1 else keep[:, None] & keep[None, :]
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True)
class Field:
    """One complex grid function; values are never mutated in place."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError("field values do not match grid shape")
        if self.values.dtype != np.complex128:
            object.__setattr__(self, "values", self.values.astype(np.complex128))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        if grid.dim == 1:
            vals = fn(grid.axis_coordinates())
        else:
            x = grid.coordinate(1)
            y = grid.coordinate(2)
            vals = fn(x, y)
        return cls(grid, np.asarray(vals, dtype=np.complex128))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values)

    def __mul__(self, other) -> "Field":
        if isinstance(other, Field):
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.values))


@dataclass(frozen=True)
class StateTriple:
    """The three unknowns on one shared grid at a common time."""

    fields: tuple[Field, Field, Field]
    time: float = 0.0

    def __post_init__(self):
        if len(self.fields) != 3:
            raise ValueError("state needs exactly three fields")
        g = self.fields[0].grid
        if any(f.grid != g for f in self.fields):
            raise ValueError("state fields must share one grid")

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    def field(self, j: int) -> Field:
        return self.fields[j - 1]

    def is_finite(self) -> bool:
        return all(f.is_finite() for f in self.fields)


def l2_norm(f: Field) -> float:
    """Grid-weighted L2 norm, h^d sum |f|^2 under the square root."""
    return float(np.sqrt(f.grid.cell_volume * np.sum(np.abs(f.values) ** 2)))


def linf_norm(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def l2_norm_hat(grid: Grid, values_hat: np.ndarray) -> float:
    """L2 norm evaluated from unnormalized FFT coefficients (Parseval)."""
    scale = grid.cell_volume / grid.n**grid.dim
    return float(np.sqrt(scale * np.sum(np.abs(values_hat) ** 2)))


def _apply_multiplier(f: Field, symbol: np.ndarray) -> Field:
    fhat = fftn(f.values)
    return Field(f.grid, ifftn(symbol * fhat))


def derivative(f: Field, axis: int) -> Field:
    """Spatial derivative along one axis (multiplier i*xi_a)."""
    return _apply_multiplier(f, 1j * f.grid.frequencies(axis))


def free_propagate(f: Field, mass: float, dt: float) -> Field:
    """Free Schrodinger flow over time dt (multiplier exp(-i dt |xi|^2 / 2m))."""
    if mass == 0:
        raise ValueError("mass must be nonzero")
    if dt == 0.0:
        return f
    phase = np.exp(-0.5j * dt / mass * f.grid.frequency_sq())
    return _apply_multiplier(f, phase)


def hilbert(f: Field, axis: int) -> Field:
    """Per-axis Hilbert transform (multiplier -i*sgn(xi_a), sgn(0)=0)."""
    return _apply_multiplier(f, -1j * np.sign(f.grid.frequencies(axis)))


def half_derivative(f: Field, axis: int) -> Field:
    """Half derivative along one axis (multiplier |xi_a|^(1/2))."""
    return _apply_multiplier(f, np.sqrt(np.abs(f.grid.frequencies(axis))))


def dealias(f: Field) -> Field:
    """Zero every mode whose index exceeds N/3 on any axis (2/3 rule)."""
    return _apply_multiplier(f, f.grid.dealias_mask())


def save_field(path, f: Field, time: float, equation: int) -> None:
    """Write the flat binary snapshot record of one field."""
    g = f.grid
    payload = f.values.astype("<c16").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.dim, g.n, g.length, time, equation))
        fh.write(payload)


def load_field(path) -> tuple[Field, float, int]:
    """Read back a snapshot record; returns (field, time, equation)."""
    raw = Path(path).read_bytes()
    dim, n, length, time, equation = _HEADER.unpack_from(raw, 0)
    grid = Grid(dim, n, length)
    count = n**dim
    values = np.frombuffer(raw, dtype="<c16", count=count, offset=_HEADER.size)
    return Field(grid, values.reshape(grid.shape).copy()), time, equation
