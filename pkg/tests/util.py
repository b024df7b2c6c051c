"""Shared builders for test grids, fields, and random exact tensors."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from qdnls.problem import (
    CoefficientTensor,
    ExactComplex,
    MassTriple,
    NullDecomposition,
    expand,
)
from qdnls.spectral import Field, Grid

RESONANT = MassTriple(1, 2, 3)
RESONANT_NEG = MassTriple(2, -1, 1)
NON_RESONANT = MassTriple(1, 1, 1)


def grid_1d(n=1024, length=32 * np.pi) -> Grid:
    return Grid(1, n, length)


def grid_2d(n=128, length=12 * np.pi) -> Grid:
    return Grid(2, n, length)


def gaussian(grid: Grid, center=None, width=1.0, wavevector=None) -> Field:
    center = center or (0.0,) * grid.dim
    wavevector = wavevector or (0.0,) * grid.dim
    r2 = np.zeros(grid.shape)
    phase = np.zeros(grid.shape)
    for a in range(1, grid.dim + 1):
        x = grid.coordinate(a)
        r2 = r2 + (x - center[a - 1]) ** 2
        phase = phase + wavevector[a - 1] * x
    return Field(grid, np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * phase))


def random_band_limited(grid: Grid, rng, scale=1.0) -> Field:
    from qdnls.spectral import dealias

    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return dealias(Field(grid, scale * vals))


def random_exact(rng, span=6) -> ExactComplex:
    return ExactComplex(
        Fraction(int(rng.integers(-span, span + 1)), int(rng.integers(1, 4))),
        Fraction(int(rng.integers(-span, span + 1)), int(rng.integers(1, 4))),
    )


def random_tensor(dim: int, rng, fill=0.4) -> CoefficientTensor:
    items = []
    for eq in (1, 2, 3):
        for a in range(dim + 1):
            for b in range(dim + 1):
                if rng.random() < fill:
                    items.append((eq, a, b, random_exact(rng)))
    return CoefficientTensor.from_entries(dim, items)


def random_decomposition(dim: int, rng, fill=0.7) -> NullDecomposition:
    gauge = []
    strong = []
    for eq in (1, 2, 3):
        for a in range(1, dim + 1):
            if rng.random() < fill:
                gauge.append((eq, a, random_exact(rng)))
        for a in range(1, dim + 1):
            for b in range(a + 1, dim + 1):
                if rng.random() < fill:
                    strong.append((eq, a, b, random_exact(rng)))
    return NullDecomposition.from_weights(dim, gauge=gauge, strong=strong)


def random_null_tensor(dim: int, rng, masses=RESONANT) -> CoefficientTensor:
    return expand(random_decomposition(dim, rng), masses)
