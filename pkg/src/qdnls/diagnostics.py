"""Post-processing of trajectories into measurable asymptotic claims.

Log-log decay fits with standard errors, the free-profile construction
with its truncated-Duhamel error bar, the null/non-null nonlinearity
decay contrast, the amplitude-threshold lifespan scan, and the
periodic-surrogate boundary monitor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nullforms import eval_nonlinearity
from .problem import MassTriple
from .solver import SolverConfig, Trajectory, evolve, with_epsilon
from .spectral import Field, StateTriple
from .vectorfield import (
    gamma_norms_by_index,
    pullback,
    shell_mass_fraction,
    sigma_norm_field,
)

MIN_FIT_SAMPLES = 8
MIN_FIT_DECADES = 1.0


@dataclass(frozen=True)
class DecayFit:
    """Ordinary least squares on (log t, log value) over a time window."""

    quantity: str
    t_min: float
    t_max: float
    slope: float
    stderr: float
    n_samples: int
    intercept: float

    def value_at(self, t: float) -> float:
        return float(np.exp(self.intercept + self.slope * np.log(t)))


def decay_fit(times, values, window=None, quantity: str = "") -> DecayFit:
    """Fit a power law to positive samples inside the window.

    Needs at least 8 samples spanning a decade in t; raises ValueError
    otherwise.
    """
    ts = np.asarray(times, dtype=float)
    vs = np.asarray(values, dtype=float)
    if window is not None:
        lo, hi = window
        keep = (ts >= lo) & (ts <= hi)
        ts, vs = ts[keep], vs[keep]
    if np.any(vs <= 0):
        raise ValueError("decay fit needs strictly positive values")
    if len(ts) < MIN_FIT_SAMPLES:
        raise ValueError(f"decay fit needs >= {MIN_FIT_SAMPLES} samples, got {len(ts)}")
    if np.log10(ts.max() / ts.min()) < MIN_FIT_DECADES:
        raise ValueError("decay fit window must span at least one decade in t")
    x = np.log(ts)
    y = np.log(vs)
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    dof = len(x) - 2
    sigma_sq = float(np.sum(resid**2) / dof) if dof > 0 else 0.0
    stderr = float(np.sqrt(sigma_sq / sxx))
    return DecayFit(
        quantity=quantity,
        t_min=float(ts.min()),
        t_max=float(ts.max()),
        slope=slope,
        stderr=stderr,
        n_samples=len(ts),
        intercept=intercept,
    )


@dataclass(frozen=True)
class ScatterReport:
    """Free-profile estimate and the convergence of pullbacks towards it.

    The profile is the final pullback, so the last series entry is
    exactly zero and is excluded from the fit; the truncated Duhamel
    tail, extrapolated from the fitted forcing decay, bounds the
    distance between this estimate and the true limit.
    """

    profile: tuple[Field, Field, Field]
    times: tuple[float, ...]
    series: tuple[float, ...]
    fit: DecayFit | None
    forcing_fit: DecayFit | None
    duhamel_tail: float


def scattering_profile(
    traj: Trajectory,
    masses: MassTriple,
    order: int,
    fit_window: tuple[float, float] | None = None,
) -> ScatterReport:
    """Estimate the free profile of a completed run and its convergence rate."""
    if not traj.completed:
        raise ValueError(f"trajectory was interrupted ({traj.interrupted})")
    if len(traj.snapshots) < 3:
        raise ValueError("need at least three snapshots")
    s_norm = order - 1
    final = traj.final_state()
    t_end = final.time
    profile = tuple(
        pullback(final.field(j), float(masses.mass(j)), t_end) for j in (1, 2, 3)
    )
    times = []
    series = []
    for snap in traj.snapshots:
        dist = 0.0
        for j in (1, 2, 3):
            prof = pullback(snap.field(j), float(masses.mass(j)), snap.time)
            dist += sigma_norm_field(prof - profile[j - 1], s_norm)
        times.append(snap.time)
        series.append(dist)
    if fit_window is None:
        fit_window = (4.0, t_end)
    fit = None
    forcing_fit = None
    tail = float("inf")
    fit_times = [t for t, v in zip(times[:-1], series[:-1]) if v > 0]
    fit_vals = [v for t, v in zip(times[:-1], series[:-1]) if v > 0]
    if fit_vals:
        try:
            fit = decay_fit(fit_times, fit_vals, fit_window, quantity="pullback distance")
        except ValueError:
            fit = None
    else:
        tail = 0.0  # zero forcing: the pullback is already constant
    forcing_times = []
    forcing_vals = []
    for snap in traj.snapshots:
        forces = eval_nonlinearity(traj.config.tensor, snap, traj.config.use_dealias)
        g = 0.0
        for j in (1, 2, 3):
            prof = pullback(forces[j - 1], float(masses.mass(j)), snap.time)
            g += sigma_norm_field(prof, s_norm)
        forcing_times.append(snap.time)
        forcing_vals.append(g)
    if any(v > 0 for v in forcing_vals):
        try:
            forcing_fit = decay_fit(
                forcing_times,
                [max(v, 1e-300) for v in forcing_vals],
                fit_window,
                quantity="pulled-back forcing",
            )
            if forcing_fit.slope < -1.0:
                amp = forcing_fit.value_at(t_end)
                tail = amp * t_end / (-1.0 - forcing_fit.slope)
        except ValueError:
            forcing_fit = None
    else:
        tail = 0.0
    return ScatterReport(
        profile=profile,
        times=tuple(times),
        series=tuple(series),
        fit=fit,
        forcing_fit=forcing_fit,
        duhamel_tail=tail,
    )


def gamma_forcing_series(
    traj: Trajectory, masses: MassTriple, order: int, use_dealias: bool = False
):
    """Sum of Gamma norms of the nonlinearity over snapshots.

    The nonlinearity is evaluated without the stepping dealias mask by
    default: the hard spectral cut rings under the monomial weights of
    the J factors and can dominate the high-order norms, while the
    unmasked product is alias-free for band-limited states anyway.
    """
    times = []
    values = []
    for snap in traj.snapshots:
        forces = eval_nonlinearity(traj.config.tensor, snap, use_dealias)
        total = 0.0
        for j in (1, 2, 3):
            table = gamma_norms_by_index(
                forces[j - 1], float(masses.mass(j)), snap.time, order
            )
            total += sum(table.values())
        times.append(snap.time)
        values.append(total)
    return times, values


def nonlinearity_decay_contrast(
    traj_null: Trajectory,
    traj_nonnull: Trajectory,
    order: int,
    fit_window: tuple[float, float] | None = None,
) -> tuple[DecayFit, DecayFit]:
    """Paired decay fits of the Gamma-norm forcing series of two runs."""
    ca, cb = traj_null.config, traj_nonnull.config
    if ca.grid != cb.grid or ca.masses != cb.masses or ca.epsilon != cb.epsilon:
        raise ValueError("contrast runs must share grid, masses and amplitude")
    fits = []
    for traj, tag in ((traj_null, "null"), (traj_nonnull, "nonnull")):
        times, values = gamma_forcing_series(traj, traj.config.masses, order - 1)
        if all(v == 0 for v in values):
            raise ValueError(f"{tag} run has identically zero nonlinearity")
        if fit_window is None:
            fit_window = (4.0, times[-1])
        fits.append(
            decay_fit(times, values, fit_window, quantity=f"{tag} forcing Gamma norm")
        )
    return tuple(fits)


@dataclass(frozen=True)
class LifespanRow:
    epsilon: float
    t_reached: float
    cause: str  # doubling | blowup | boundary | cap


@dataclass(frozen=True)
class LifespanTable:
    rows: tuple[LifespanRow, ...]
    omega_estimate: float | None

    def t_effective(self, epsilon: float) -> float:
        for row in self.rows:
            if row.epsilon == epsilon:
                return row.t_reached
        raise KeyError(epsilon)


def lifespan_scan(base_config: SolverConfig, epsilons) -> LifespanTable:
    """Effective-lifespan scan over decreasing amplitudes.

    The working criterion is the first snapshot where the Gamma norm of
    order `gamma_order` exceeds twice its initial value; runs that never
    trigger it report the time cap (or their interruption time).
    """
    eps = list(epsilons)
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("amplitudes must be strictly decreasing")
    rows = []
    for e in eps:
        traj = evolve(with_epsilon(base_config, e))
        t_eff = None
        cause = "cap"
        initial = traj.gamma_reports[0].aggregate
        for report in traj.gamma_reports:
            if report.aggregate > 2.0 * initial:
                t_eff = report.time
                cause = "doubling"
                break
        if t_eff is None:
            if traj.interrupted is not None:
                t_eff = traj.interruption_time
                cause = traj.interrupted
            else:
                t_eff = base_config.t_final
        rows.append(LifespanRow(epsilon=e, t_reached=float(t_eff), cause=cause))
    omega = None
    if len(rows) >= 2 and all(r.t_reached > 0 for r in rows):
        x = np.array([1.0 / r.epsilon for r in rows])
        y = np.log([r.t_reached for r in rows])
        xbar = x.mean()
        sxx = float(np.sum((x - xbar) ** 2))
        if sxx > 0:
            omega = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    return LifespanTable(rows=tuple(rows), omega_estimate=omega)


def boundary_mass(f: Field) -> float:
    """Mass fraction of |f|^2 in the outer shell of the box."""
    return shell_mass_fraction(f)


def state_boundary_mass(state: StateTriple) -> float:
    return max(boundary_mass(state.field(j)) for j in (1, 2, 3))
