"""Time integration of the coupled system in the moving frame.

One step is a classical 4-stage Runge-Kutta applied to the profile
v_j = U_{m_j}(-t) u_j, arranged so that only forward (decaying when the
diffusive regularization is on) linear factors are ever applied.  The
nonlinearity is evaluated pseudo-spectrally with optional 2/3-rule
dealiasing.  Evolution is deterministic: identical configurations give
bit-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .problem import CoefficientTensor, MassTriple
from .spectral import Field, Grid, StateTriple, fftn, ifftn, load_field
from .vectorfield import (
    BOUNDARY_TOL,
    GammaNormReport,
    gamma_norm,
    pullback,
    shell_mass_fraction,
    sigma_norm,
)

BLOWUP_AMPLITUDE_FACTOR = 1e6


class BlowUpSuspected(RuntimeError):
    """Non-finite values or runaway amplitude; carries the last good state."""

    def __init__(self, message: str, state: StateTriple, time: float):
        super().__init__(message)
        self.state = state
        self.time = time


@dataclass(frozen=True)
class SolverConfig:
    """Everything needed to reproduce one run."""

    masses: MassTriple
    tensor: CoefficientTensor
    grid: Grid
    epsilon: float
    dt: float
    t_final: float
    nu: float = 0.0
    use_dealias: bool = True
    snapshot_every: int = 100
    family: str = "gaussian"
    width: float = 2.0
    weights: tuple[complex, complex, complex] = (1.0 + 0j, 1.0 + 0j, 1.0 + 0j)
    snapshot_files: tuple[str, str, str] | None = None
    gamma_order: int = 6
    norm_order: int = 7

    def __post_init__(self):
        if self.tensor.dim != self.grid.dim:
            raise ValueError("tensor dimension does not match the grid")
        if not self.epsilon > 0:
            raise ValueError("data amplitude must be positive")
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.t_final < 0:
            raise ValueError("final time must be nonnegative")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError("regularization nu must lie in [0, 1]")
        if self.snapshot_every < 1:
            raise ValueError("snapshot cadence must be >= 1")
        if self.width <= 0:
            raise ValueError("data width must be positive")

    @property
    def phase_rotation_per_step(self) -> float:
        """Linear phase swing per step at the grid's top mode.

        Advisory only: the moving-frame integrator has no linear
        stability limit; this guards a plain-RK diagnostic path.
        """
        top = np.pi * self.grid.n / self.grid.length
        return self.dt * top**2 / max(abs(m) for m in self.masses.as_floats())

    def step_count(self) -> int:
        n = round(self.t_final / self.dt)
        if abs(n * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ValueError("t_final must be an integer number of steps")
        return n


@dataclass(frozen=True)
class StepRecord:
    t: float
    l2: tuple[float, float, float]
    linf: tuple[float, float, float]


@dataclass
class Trajectory:
    """Uniform-cadence snapshots plus per-step diagnostic rows."""

    config: SolverConfig
    snapshots: list[StateTriple] = field(default_factory=list)
    gamma_reports: list[GammaNormReport] = field(default_factory=list)
    step_rows: list[StepRecord] = field(default_factory=list)
    interrupted: str | None = None
    interruption_time: float | None = None

    @property
    def times(self) -> list[float]:
        return [s.time for s in self.snapshots]

    @property
    def completed(self) -> bool:
        return self.interrupted is None

    def final_state(self) -> StateTriple:
        return self.snapshots[-1]


def gaussian_data(grid: Grid, width: float, weights) -> list[Field]:
    r2 = np.zeros(grid.shape)
    for a in range(1, grid.dim + 1):
        r2 = r2 + grid.coordinate(a) ** 2
    bump = np.exp(-r2 / (2.0 * width**2))
    return [Field(grid, complex(w) * bump) for w in weights]


def initial_data(config: SolverConfig) -> StateTriple:
    """Build the configured data family, normalized to the given amplitude.

    The raw profile is rescaled so the weighted Sobolev norm of the
    triple at order `norm_order` equals epsilon exactly.
    """
    if config.family == "gaussian":
        fields = gaussian_data(config.grid, config.width, config.weights)
    elif config.family == "snapshot":
        # snapshots are used verbatim so reruns restart bit-exactly
        if config.snapshot_files is None:
            raise ValueError("snapshot family needs three snapshot files")
        fields = []
        for path in config.snapshot_files:
            f, _, _ = load_field(path)
            if f.grid != config.grid:
                raise ValueError(f"snapshot {path} is on a different grid")
            fields.append(f)
        return StateTriple(tuple(fields), 0.0)
    else:
        raise ValueError(f"unknown data family {config.family!r}")
    raw = sigma_norm(fields, config.norm_order)
    if raw == 0.0:
        raise ValueError("data family produced the zero state")
    scale = config.epsilon / raw
    return StateTriple(tuple(f * scale for f in fields), 0.0)


class _Stepper:
    """Moving-frame RK4 kernel with precomputed multipliers."""

    def __init__(self, config: SolverConfig, dt: float):
        grid = config.grid
        self.grid = grid
        self.dt = dt
        xi_sq = grid.frequency_sq()
        self.symbols = []
        for m in config.masses.as_floats():
            a = -0.5j * xi_sq / m - config.nu * xi_sq
            self.symbols.append(a)
        self.e_half = [np.exp(0.5 * dt * a) for a in self.symbols]
        self.e_full = [eh * eh for eh in self.e_half]
        self.deriv = [1j * grid.frequencies(a) for a in range(1, grid.dim + 1)]
        self.mask = grid.dealias_mask() if config.use_dealias else None
        c = config.tensor.as_array()
        # terms[eq] = list of (coeff, factor-unknown indices, conjugations, slots)
        factor_of = {1: (1, 2), 2: (2, 0), 3: (0, 1)}
        conj_of = {1: (True, False), 2: (False, True), 3: (False, False)}
        self.terms = {1: [], 2: [], 3: []}
        needed = [set() for _ in range(3)]
        for eq in (1, 2, 3):
            for alpha in range(grid.dim + 1):
                for beta in range(grid.dim + 1):
                    coeff = c[eq - 1, alpha, beta]
                    if coeff != 0:
                        iu, iv = factor_of[eq]
                        self.terms[eq].append(
                            (coeff, (iu, iv), conj_of[eq], (alpha, beta))
                        )
                        needed[iu].add(alpha)
                        needed[iv].add(beta)
        for s in needed:
            s.add(0)  # the plain field is always kept for the monitors
        self.needed = [sorted(s) for s in needed]

    def _nonlin(self, hats):
        """-i F_j from frequency-space states; also returns physical fields.

        Overflow is left to the explicit finiteness checks downstream.
        """
        with np.errstate(over="ignore", invalid="ignore"):
            return self._nonlin_impl(hats)

    def _nonlin_impl(self, hats):
        phys = []
        for j, hat in enumerate(hats):
            base = {}
            for slot in self.needed[j]:
                base[slot] = ifftn(hat if slot == 0 else self.deriv[slot - 1] * hat)
            phys.append(base)
        out = []
        for eq in (1, 2, 3):
            acc = None
            for coeff, (iu, iv), (cu, cv), (alpha, beta) in self.terms[eq]:
                left = phys[iu][alpha]
                right = phys[iv][beta]
                if cu:
                    left = np.conj(left)
                if cv:
                    right = np.conj(right)
                term = coeff * left * right
                acc = term if acc is None else acc + term
            if acc is None:
                out.append(np.zeros(self.grid.shape, dtype=complex))
                continue
            fhat = fftn(acc)
            if self.mask is not None:
                fhat = fhat * self.mask
            out.append(-1j * fhat)
        return out, phys

    def step(self, hats):
        """One RK4 step in the moving frame; only forward factors applied."""
        dt = self.dt
        k1, phys = self._nonlin(hats)
        a2 = [
            e * (u + 0.5 * dt * k) for e, u, k in zip(self.e_half, hats, k1)
        ]
        k2, _ = self._nonlin(a2)
        a3 = [
            e * u + 0.5 * dt * k for e, u, k in zip(self.e_half, hats, k2)
        ]
        k3, _ = self._nonlin(a3)
        a4 = [
            e2 * u + dt * e * k
            for e2, e, u, k in zip(self.e_full, self.e_half, hats, k3)
        ]
        k4, _ = self._nonlin(a4)
        new = [
            e2 * u + (dt / 6.0) * (e2 * p1 + 2.0 * e * p2 + 2.0 * e * p3 + p4)
            for e2, e, u, p1, p2, p3, p4 in zip(
                self.e_full, self.e_half, hats, k1, k2, k3, k4
            )
        ]
        return new, phys


def _to_hats(state: StateTriple):
    return [fftn(f.values) for f in state.fields]


def _to_state(grid: Grid, hats, time: float) -> StateTriple:
    fields = tuple(Field(grid, ifftn(h)) for h in hats)
    return StateTriple(fields, time)


def step(state: StateTriple, dt: float, config: SolverConfig) -> StateTriple:
    """Advance a state by one time step.

    Raises BlowUpSuspected if the result stops being finite.
    """
    stepper = _Stepper(config, dt)
    hats, _ = stepper.step(_to_hats(state))
    new = _to_state(config.grid, hats, state.time + dt)
    if not new.is_finite():
        raise BlowUpSuspected("non-finite state after step", state, state.time)
    return new


def evolve(
    config: SolverConfig,
    on_snapshot: Callable[[StateTriple], None] | None = None,
) -> Trajectory:
    """Integrate to t_final, or stop at blow-up / boundary contamination.

    Snapshots (with Gamma-norm reports) are taken every `snapshot_every`
    steps and at the final step; per-step rows carry the cheap norms.
    """
    n_steps = config.step_count()
    stepper = _Stepper(config, config.dt)
    state0 = initial_data(config)
    traj = Trajectory(config=config)
    hats = _to_hats(state0)
    grid = config.grid
    scale = grid.cell_volume / grid.n**grid.dim
    amp0 = max(np.max(np.abs(f.values)) for f in state0.fields)
    amp_ceiling = BLOWUP_AMPLITUDE_FACTOR * amp0

    def record_snapshot(step_idx: int) -> bool:
        t = step_idx * config.dt
        state = _to_state(grid, hats, t)
        if not state.is_finite():
            raise BlowUpSuspected("non-finite snapshot", traj.snapshots[-1], t)
        traj.snapshots.append(state)
        traj.gamma_reports.append(gamma_norm(state, config.masses, config.gamma_order))
        if on_snapshot is not None:
            on_snapshot(state)
        amp = max(np.max(np.abs(f.values)) for f in state.fields)
        if amp > amp_ceiling:
            raise BlowUpSuspected("amplitude exceeded 1e6 x initial", state, t)
        fractions = [
            shell_mass_fraction(pullback(state.field(j), float(config.masses.mass(j)), t))
            for j in (1, 2, 3)
        ]
        return any(fr > BOUNDARY_TOL for fr in fractions)

    try:
        contaminated = record_snapshot(0)
        if contaminated:
            traj.interrupted = "boundary"
            traj.interruption_time = 0.0
            return traj
        for i in range(n_steps):
            t = i * config.dt
            new_hats, phys = stepper.step(hats)
            l2 = tuple(
                float(np.sqrt(scale * np.sum(np.abs(h) ** 2))) for h in hats
            )
            linf = tuple(float(np.max(np.abs(p[0]))) for p in phys)
            traj.step_rows.append(StepRecord(t=t, l2=l2, linf=linf))
            if not all(np.all(np.isfinite(h)) for h in new_hats):
                raise BlowUpSuspected(
                    "non-finite state during step", _to_state(grid, hats, t), t
                )
            hats = new_hats
            if (i + 1) % config.snapshot_every == 0 or i + 1 == n_steps:
                if record_snapshot(i + 1):
                    traj.interrupted = "boundary"
                    traj.interruption_time = (i + 1) * config.dt
                    return traj
    except BlowUpSuspected as blow:
        traj.interrupted = "blowup"
        traj.interruption_time = blow.time
        if not traj.snapshots:
            traj.snapshots.append(blow.state)
    return traj


def with_epsilon(config: SolverConfig, epsilon: float) -> SolverConfig:
    return replace(config, epsilon=epsilon)
