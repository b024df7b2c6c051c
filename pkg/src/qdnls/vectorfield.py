"""Galilean vector fields and the weighted norms built from them.

The operator J acts through conjugation of multiplication-by-x by the
free flow, which is exact on the grid and regular at t = 0; the singular
phase form (it/m) e^{im|x|^2/2t} d/dx e^{-im|x|^2/2t} is kept only as a
cross-check.  Norms of products of derivatives and J factors are taken
on the pulled-back profile where they reduce to derivative/monomial
norms, evaluated spectrally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .problem import MassTriple
from .spectral import Field, Grid, StateTriple, fftn, free_propagate, ifftn, l2_norm

BOUNDARY_SHELL = 0.9  # inner edge of the outer shell, fraction of L/2
BOUNDARY_TOL = 1e-8  # pullback mass fraction beyond which x-weights are suspect


def multi_indices(dim: int, max_total: int):
    """All multi-indices alpha in Z_+^dim with |alpha| <= max_total."""
    return [
        idx
        for idx in itertools.product(range(max_total + 1), repeat=dim)
        if sum(idx) <= max_total
    ]


def pullback(u: Field, mass: float, t: float) -> Field:
    """Profile U_m(-t)u; free solutions pull back to their data."""
    return free_propagate(u, mass, -t)


def push_forward(f: Field, mass: float, t: float) -> Field:
    return free_propagate(f, mass, t)


def apply_J(u: Field, mass: float, t: float, axis: int) -> Field:
    """J_{m,a}(t) u = U_m(t)(x_a U_m(-t) u); multiplication by x_a at t = 0."""
    prof = pullback(u, mass, t)
    weighted = prof.with_values(u.grid.coordinate(axis) * prof.values)
    return push_forward(weighted, mass, t)


def apply_J_phase(u: Field, mass: float, t: float, axis: int) -> Field:
    """Phase form (it/m) e^{im theta} d_a (e^{-im theta} u), theta = |x|^2/2t.

    Singular at t = 0 and alias-prone for large |x|^2/t; cross-check only.
    """
    if t == 0.0:
        raise ValueError("phase form of J is singular at t = 0")
    grid = u.grid
    theta = np.zeros(grid.shape)
    for a in range(1, grid.dim + 1):
        theta = theta + grid.coordinate(a) ** 2
    theta = theta / (2.0 * t)
    from .spectral import derivative

    inner = u.with_values(np.exp(-1j * mass * theta) * u.values)
    dinner = derivative(inner, axis)
    return u.with_values((1j * t / mass) * np.exp(1j * mass * theta) * dinner.values)


def shell_mass_fraction(f: Field) -> float:
    """Fraction of |f|^2 mass in the outer shell of the box."""
    grid = f.grid
    edge = BOUNDARY_SHELL * 0.5 * grid.length
    outer = np.zeros(grid.shape, dtype=bool)
    for a in range(1, grid.dim + 1):
        outer |= np.abs(grid.coordinate(a)) >= edge
    total = float(np.sum(np.abs(f.values) ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(f.values[outer]) ** 2) / total)


def gamma_norms_by_index(u: Field, mass: float, t: float, order: int):
    """L2 norm of every product of derivatives and J factors up to `order`.

    Returns {(alpha_partial, alpha_j): norm} with both parts d-tuples;
    the value equals || d^{alpha_partial} (x^{alpha_j} U_m(-t)u) ||.
    """
    if mass == 0:
        raise ValueError("mass must be nonzero")
    grid = u.grid
    prof = pullback(u, mass, t)
    scale = grid.cell_volume / grid.n**grid.dim
    out = {}
    for alpha_j in multi_indices(grid.dim, order):
        weighted = prof.values
        for a in range(1, grid.dim + 1):
            if alpha_j[a - 1]:
                weighted = weighted * grid.coordinate(a) ** alpha_j[a - 1]
        what = fftn(weighted)
        budget = order - sum(alpha_j)
        for alpha_p in multi_indices(grid.dim, budget):
            sym = np.ones(grid.shape)
            for a in range(1, grid.dim + 1):
                if alpha_p[a - 1]:
                    sym = sym * np.abs(grid.frequencies(a)) ** alpha_p[a - 1]
            out[(alpha_p, alpha_j)] = float(
                np.sqrt(scale * np.sum((sym * np.abs(what)) ** 2))
            )
    return out


def gamma_fields(u: Field, mass: float, t: float, order: int):
    """Physical-space fields Gamma^alpha u for all |alpha| <= order."""
    grid = u.grid
    prof = pullback(u, mass, t)
    out = {}
    for alpha_j in multi_indices(grid.dim, order):
        weighted = prof.values
        for a in range(1, grid.dim + 1):
            if alpha_j[a - 1]:
                weighted = weighted * grid.coordinate(a) ** alpha_j[a - 1]
        what = fftn(weighted)
        budget = order - sum(alpha_j)
        for alpha_p in multi_indices(grid.dim, budget):
            sym = np.ones(grid.shape, dtype=complex)
            for a in range(1, grid.dim + 1):
                if alpha_p[a - 1]:
                    sym = sym * (1j * grid.frequencies(a)) ** alpha_p[a - 1]
            deriv = ifftn(sym * what)
            out[(alpha_p, alpha_j)] = push_forward(Field(grid, deriv), mass, t)
    return out


@dataclass(frozen=True)
class GammaNormRow:
    equation: int
    deriv_order: int
    j_order: int
    value: float


@dataclass(frozen=True)
class GammaNormReport:
    """Per-equation, per-order table of Gamma-norm contributions."""

    time: float
    order: int
    rows: tuple[GammaNormRow, ...]
    aggregate: float
    boundary_fractions: tuple[float, float, float]
    boundary_flagged: bool

    def row_value(self, equation: int, deriv_order: int, j_order: int) -> float:
        for row in self.rows:
            if (row.equation, row.deriv_order, row.j_order) == (
                equation,
                deriv_order,
                j_order,
            ):
                return row.value
        raise KeyError((equation, deriv_order, j_order))


MAX_DEFAULT_ORDER = 7  # higher orders allowed, but only on request


def gamma_norm(
    state: StateTriple,
    masses: MassTriple,
    order: int,
    allow_high_order: bool = False,
) -> GammaNormReport:
    """Gamma(t)-norm table of a state, aggregated by (derivative, J) orders.

    Orders above 7 multiply the transform count quickly; they must be
    requested explicitly.
    """
    if order < 0:
        raise ValueError("norm order must be >= 0")
    if order > MAX_DEFAULT_ORDER and not allow_high_order:
        raise ValueError(
            f"norm order {order} exceeds the default cap {MAX_DEFAULT_ORDER}; "
            "pass allow_high_order=True"
        )
    rows = []
    total_sq = 0.0
    fractions = []
    for j in (1, 2, 3):
        u = state.field(j)
        m = float(masses.mass(j))
        table = gamma_norms_by_index(u, m, state.time, order)
        bucket: dict[tuple[int, int], float] = {}
        for (alpha_p, alpha_j), value in table.items():
            key = (sum(alpha_p), sum(alpha_j))
            bucket[key] = bucket.get(key, 0.0) + value**2
        for (kp, kj), sq in sorted(bucket.items()):
            rows.append(GammaNormRow(j, kp, kj, float(np.sqrt(sq))))
            total_sq += sq
        fractions.append(shell_mass_fraction(pullback(u, m, state.time)))
    flagged = any(fr > BOUNDARY_TOL for fr in fractions)
    return GammaNormReport(
        time=state.time,
        order=order,
        rows=tuple(rows),
        aggregate=float(np.sqrt(total_sq)),
        boundary_fractions=tuple(fractions),
        boundary_flagged=flagged,
    )


def sigma_norm_field(f: Field, order: int) -> float:
    """Weighted Sobolev norm of one profile (the t = 0 Gamma norm)."""
    table = gamma_norms_by_index(f, 1.0, 0.0, order)
    return float(np.sqrt(sum(v**2 for v in table.values())))


def sigma_norm(fields, order: int) -> float:
    """Root-sum-square weighted Sobolev norm of a profile collection."""
    return float(np.sqrt(sum(sigma_norm_field(f, order) ** 2 for f in fields)))


def klainerman_ratio(u: Field, mass: float, t: float) -> float:
    """Sup-norm over the dispersive-decay envelope built from Gamma norms.

    Returns ||u||_inf <t>^{d/2} / sum_{|alpha| <= [d/2]+1} ||Gamma^alpha u||;
    bounded uniformly in t for localized fields.
    """
    d = u.grid.dim
    sigma = d // 2 + 1
    table = gamma_norms_by_index(u, mass, t, sigma)
    denom = sum(table.values())
    if denom == 0.0:
        raise ValueError("Klainerman ratio undefined for the zero field")
    sup = float(np.max(np.abs(u.values)))
    return sup * (1.0 + t * t) ** (d / 4.0) / denom
