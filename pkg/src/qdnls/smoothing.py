"""Gauge operators that trade a bounded conjugation for half a derivative.

The per-axis operator multiplies by cosh/sinh of a bounded arctan phase
and mixes in the axis Hilbert transform; it is invertible by a Neumann
iteration whose contraction factor tanh(kappa*pi/2) < 1 comes with the
construction.  The energy-budget check integrates the dissipated
half-derivative term along a trajectory and fits the constant in front
of the kappa/<t> energy leak.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import Field, dealias, half_derivative, hilbert, l2_norm


@dataclass(frozen=True)
class SmoothingParams:
    """Gauge strength kappa in (0,1], sign branch, and evaluation time."""

    kappa: float
    sign: int = +1
    t: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.kappa <= 1.0:
            raise ValueError("kappa must lie in (0, 1]")
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def for_mass(cls, mass: float, kappa: float, t: float) -> "SmoothingParams":
        return cls(kappa=kappa, sign=+1 if mass > 0 else -1, t=t)


def lambda_phase(params: SmoothingParams, x_a: np.ndarray) -> np.ndarray:
    """Bounded gauge phase kappa*arctan(x_a/<t>), valued in (-kappa*pi/2, kappa*pi/2)."""
    bracket = np.sqrt(1.0 + params.t**2)
    return params.kappa * np.arctan(np.asarray(x_a) / bracket)


def w_weight(t: float, x_a: np.ndarray) -> np.ndarray:
    """Spatial weight (1 + x_a^2/(1+t^2))^(-1/2), valued in (0, 1]."""
    return 1.0 / np.sqrt(1.0 + np.asarray(x_a) ** 2 / (1.0 + t * t))


def _axis_lambda(params: SmoothingParams, grid, axis: int) -> np.ndarray:
    return lambda_phase(params, grid.coordinate(axis))

def apply_S_axis(f: Field, params: SmoothingParams, axis: int) -> Field:
    lam = _axis_lambda(params, f.grid, axis)
    hf = hilbert(f, axis)
    sgn = 1j if params.sign > 0 else -1j
    return Field(f.grid, np.cosh(lam) * f.values - sgn * np.sinh(lam) * hf.values)


def apply_S(f: Field, params: SmoothingParams) -> Field:
    """Product of the per-axis gauge factors, applied in axis order."""
    out = f
    for axis in range(1, f.grid.dim + 1):
        out = apply_S_axis(out, params, axis)
    return out


def apply_S_inverse_axis(
    f: Field,
    params: SmoothingParams,
    axis: int,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> Field:
    lam = _axis_lambda(params, f.grid, axis)
    tanh = np.tanh(lam)
    base = f.values / np.cosh(lam)
    scale = max(l2_norm(Field(f.grid, base)), 1e-300)
    sgn = 1j if params.sign > 0 else -1j
    g = base.copy()
    for _ in range(max_iter):
        hg = hilbert(Field(f.grid, g), axis)
        new = base + sgn * tanh * hg.values
        inc = l2_norm(Field(f.grid, new - g)) / scale
        g = new
        if inc <= tol:
            return Field(f.grid, g)
    raise RuntimeError(
        f"gauge inversion did not reach {tol:g} within {max_iter} iterations"
    )


def apply_S_inverse(
    f: Field,
    params: SmoothingParams,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> Field:
    """Inverse gauge; per-axis factors are undone in reverse order."""
    out = f
    for axis in range(f.grid.dim, 0, -1):
        out = apply_S_inverse_axis(out, params, axis, tol=tol, max_iter=max_iter)
    return out


def apply_S_adjoint(f: Field, params: SmoothingParams) -> Field:
    """L2 adjoint of the gauge: per axis, cosh*f -/+ i H_a(sinh*f)."""
    out = f
    sgn = 1j if params.sign > 0 else -1j
    for axis in range(f.grid.dim, 0, -1):
        lam = _axis_lambda(params, out.grid, axis)
        hsf = hilbert(Field(out.grid, np.sinh(lam) * out.values), axis)
        out = Field(out.grid, np.cosh(lam) * out.values - sgn * hsf.values)
    return out


def apply_S_adjoint_inverse(
    f: Field,
    params: SmoothingParams,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> Field:
    """Inverse of the adjoint gauge, by the same contraction iteration."""
    out = f
    sgn = 1j if params.sign > 0 else -1j
    for axis in range(1, f.grid.dim + 1):
        lam = _axis_lambda(params, out.grid, axis)
        tanh = np.tanh(lam)
        base = out.values
        scale = max(l2_norm(out), 1e-300)
        g = base.copy()
        for _ in range(max_iter):
            hg = hilbert(Field(out.grid, tanh * g), axis)
            new = base + sgn * hg.values
            inc = l2_norm(Field(out.grid, new - g)) / scale
            g = new
            if inc <= tol:
                break
        else:
            raise RuntimeError(
                f"adjoint gauge inversion did not reach {tol:g} within {max_iter} iterations"
            )
        out = Field(out.grid, g / np.cosh(lam))
    return out


def operator_norm(apply_fn, apply_adjoint_fn, grid, iters: int = 60, seed: int = 0) -> float:
    """Largest singular value of a matrix-free operator, by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    field = Field(grid, v)
    field = Field(grid, field.values / l2_norm(field))
    value = 0.0
    for _ in range(iters):
        w = apply_adjoint_fn(apply_fn(field))
        norm = l2_norm(w)
        if norm == 0.0:
            return 0.0
        value = norm
        field = Field(grid, w.values / norm)
    return float(np.sqrt(value))


@dataclass(frozen=True)
class BudgetRow:
    t: float
    lhs_energy: float
    lhs_smoothing_integral: float
    rhs_energy0: float
    rhs_kappa_term: float
    rhs_pairing_term: float


@dataclass(frozen=True)
class BudgetReport:
    """Componentwise sides of the smoothing energy budget along a trajectory.

    The inequality reads, for every sample time t,

        lhs_energy(t) + lhs_smoothing_integral(t)
            <= rhs_energy0 + C * rhs_kappa_term(t) + rhs_pairing_term(t),

    and fitted_c is the smallest C >= 0 making it hold on all samples.
    """

    kappa: float
    mass: float
    rows: tuple[BudgetRow, ...]
    fitted_c: float


def smoothing_budget(
    times: Sequence[float],
    profiles: Sequence[Field],
    mass: float,
    kappa: float,
    forcings: Sequence[Field] | None = None,
) -> BudgetReport:
    """Evaluate the smoothing energy budget on a sampled trajectory.

    `forcings` are the values of the evolution operator applied to the
    trajectory (zero for free solutions).  Time integrals use the
    trapezoidal rule on the given sampling.
    """
    if mass == 0:
        raise ValueError("mass must be nonzero")
    n = len(times)
    if len(profiles) != n or (forcings is not None and len(forcings) != n):
        raise ValueError("times, profiles and forcings must have equal length")
    steps = np.diff(np.asarray(times, dtype=float))
    if n > 1 and (np.any(steps <= 0) or steps.max() > 0.05 + 1e-12):
        raise ValueError("budget needs increasing samples no coarser than 0.05")
    energies = np.zeros(n)
    smooth_rate = np.zeros(n)
    kappa_rate = np.zeros(n)
    pairing_rate = np.zeros(n)
    for i, (t, f) in enumerate(zip(times, profiles)):
        params = SmoothingParams.for_mass(mass, kappa, t)
        sf = apply_S(f, params)
        energies[i] = l2_norm(sf) ** 2
        bracket = np.sqrt(1.0 + t * t)
        rate = 0.0
        for axis in range(1, f.grid.dim + 1):
            wa = w_weight(t, f.grid.coordinate(axis))
            shalf = apply_S(half_derivative(f, axis), params)
            rate += l2_norm(Field(f.grid, wa * shalf.values)) ** 2
        smooth_rate[i] = kappa / (abs(mass) * bracket) * rate
        kappa_rate[i] = kappa / bracket * energies[i]
        if forcings is not None:
            sL = apply_S(forcings[i], params)
            inner = f.grid.cell_volume * np.sum(np.conj(sf.values) * sL.values)
            pairing_rate[i] = 2.0 * abs(inner)
    ts = np.asarray(times, dtype=float)
    smooth_int = _cumtrapz(smooth_rate, ts)
    kappa_int = _cumtrapz(kappa_rate, ts)
    pairing_int = _cumtrapz(pairing_rate, ts)
    fitted = 0.0
    for i in range(1, n):
        deficit = energies[i] + smooth_int[i] - energies[0] - pairing_int[i]
        if kappa_int[i] > 0:
            fitted = max(fitted, deficit / kappa_int[i])
    rows = tuple(
        BudgetRow(
            t=float(ts[i]),
            lhs_energy=float(energies[i]),
            lhs_smoothing_integral=float(smooth_int[i]),
            rhs_energy0=float(energies[0]),
            rhs_kappa_term=float(kappa_int[i]),
            rhs_pairing_term=float(pairing_int[i]),
        )
        for i in range(n)
    )
    return BudgetReport(kappa=kappa, mass=mass, rows=rows, fitted_c=float(fitted))


def _cumtrapz(rates: np.ndarray, ts: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rates)
    if len(ts) > 1:
        increments = 0.5 * (rates[1:] + rates[:-1]) * np.diff(ts)
        out[1:] = np.cumsum(increments)
    return out


def write_budget_csv(report: BudgetReport, path) -> None:
    """Append-style CSV of the budget components plus the fitted constant."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "t",
                "lhs_energy",
                "lhs_smoothing_integral",
                "rhs_energy0",
                "rhs_kappa_term",
                "rhs_pairing_term",
                "fitted_C",
            ]
        )
        for row in report.rows:
            writer.writerow(
                [
                    repr(row.t),
                    repr(row.lhs_energy),
                    repr(row.lhs_smoothing_integral),
                    repr(row.rhs_energy0),
                    repr(row.rhs_kappa_term),
                    repr(row.rhs_pairing_term),
                    repr(report.fitted_c),
                ]
            )


def commutator_ratio(f: Field, g: Field, axis: int) -> float:
    """Half-derivative commutator norm over its sup-norm bound.

    Returns ||[|d_a|^(1/2), g] f|| / (||g||_inf^(1/2) ||d_a g||_inf^(1/2) ||f||);
    exactly 0 for constant g, where the commutator vanishes.
    """
    gv = g.values
    if np.all(gv == gv.flat[0]):
        return 0.0
    from .spectral import derivative

    prod = Field(f.grid, gv * f.values)
    comm = half_derivative(prod, axis) - Field(
        f.grid, gv * half_derivative(f, axis).values
    )
    dg = derivative(g, axis)
    denom = (
        np.sqrt(float(np.max(np.abs(gv))))
        * np.sqrt(float(np.max(np.abs(dg.values))))
        * l2_norm(f)
    )
    if denom == 0.0:
        raise ValueError("degenerate commutator bound: zero f or flat g")
    return l2_norm(comm) / denom
