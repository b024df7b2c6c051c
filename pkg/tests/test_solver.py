"""Integrator: free-flow exactness, regularization, order, determinism."""

import numpy as np
import pytest

from qdnls.problem import CoefficientTensor, MassTriple
from qdnls.solver import (
    BlowUpSuspected,
    SolverConfig,
    Trajectory,
    evolve,
    initial_data,
    step,
    with_epsilon,
)
from qdnls.spectral import (
    Field,
    Grid,
    StateTriple,
    fftn,
    free_propagate,
    l2_norm,
    save_field,
)
from qdnls.vectorfield import sigma_norm

from .util import RESONANT, gaussian

GRID_1D = Grid(1, 256, 32 * np.pi)

NULL_1D = CoefficientTensor.from_entries(
    1, [(3, 0, 1, 1), (3, 1, 0, -2), (1, 0, 1, 0.5), (1, 1, 0, 0.75), (2, 0, 0, 0.3)]
)


def config_1d(**kw) -> SolverConfig:
    base = dict(
        masses=RESONANT,
        tensor=CoefficientTensor.zeros(1),
        grid=GRID_1D,
        epsilon=1e-2,
        dt=0.01,
        t_final=1.0,
        snapshot_every=25,
    )
    base.update(kw)
    return SolverConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            config_1d(epsilon=0.0)
        with pytest.raises(ValueError):
            config_1d(dt=-0.1)
        with pytest.raises(ValueError):
            config_1d(nu=1.5)
        with pytest.raises(ValueError):
            config_1d(tensor=CoefficientTensor.zeros(2))

    def test_step_count_requires_integer_steps(self):
        with pytest.raises(ValueError):
            config_1d(dt=0.3, t_final=1.0).step_count()
        assert config_1d(dt=0.01, t_final=1.0).step_count() == 100

    def test_phase_rotation_advisory(self):
        cfg = config_1d()
        top = np.pi * cfg.grid.n / cfg.grid.length
        assert cfg.phase_rotation_per_step == pytest.approx(0.01 * top**2 / 3.0)


class TestInitialData:
    def test_normalized_to_epsilon(self):
        for eps in (1e-3, 1e-2):
            state = initial_data(config_1d(epsilon=eps))
            norm = sigma_norm([state.field(j) for j in (1, 2, 3)], 7)
            assert norm == pytest.approx(eps, rel=1e-10)

    def test_gamma_norm_matches_sigma_at_t0(self):
        from qdnls.vectorfield import gamma_norm

        state = initial_data(config_1d(epsilon=1e-3, norm_order=4))
        rep = gamma_norm(state, RESONANT, 4)
        assert rep.aggregate == pytest.approx(1e-3, rel=1e-10)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            initial_data(config_1d(family="vortex"))

    def test_snapshot_family_roundtrips(self, tmp_path):
        base = initial_data(config_1d(epsilon=2e-3))
        paths = []
        for j in (1, 2, 3):
            p = tmp_path / f"u{j}.bin"
            save_field(p, base.field(j), 0.0, j)
            paths.append(str(p))
        cfg = config_1d(
            epsilon=2e-3, family="snapshot", snapshot_files=tuple(paths)
        )
        loaded = initial_data(cfg)
        for j in (1, 2, 3):
            assert np.array_equal(loaded.field(j).values, base.field(j).values)

    def test_weights_enter_componentwise(self):
        cfg = config_1d(weights=(1.0, 1.0j, -1.0))
        state = initial_data(cfg)
        assert np.allclose(
            state.field(2).values, 1.0j * state.field(1).values, atol=1e-18
        )


class TestStep:
    def test_zero_tensor_is_free_propagation(self):
        cfg = config_1d()
        state = initial_data(cfg)
        out = step(state, 0.5, cfg)
        for j in (1, 2, 3):
            free = free_propagate(state.field(j), float(RESONANT.mass(j)), 0.5)
            assert l2_norm(out.field(j) - free) <= 1e-12 * l2_norm(free)

    def test_regularized_free_decay_exact(self):
        nu = 0.5
        cfg = config_1d(nu=nu)
        state = initial_data(cfg)
        out = step(state, 0.1, cfg)
        xi_sq = cfg.grid.frequency_sq()
        for j in (1, 2, 3):
            m = float(RESONANT.mass(j))
            target = fftn(state.field(j).values) * np.exp(
                -0.1 * (0.5j / m) * xi_sq - nu * 0.1 * xi_sq
            )
            got = fftn(out.field(j).values)
            assert np.max(np.abs(got - target)) <= 1e-12 * np.max(np.abs(target))

    def test_fourth_order_self_convergence(self):
        # oracle: reference at dt/16 of the finest step
        cfg_base = dict(tensor=NULL_1D, epsilon=2e4, t_final=0.5, snapshot_every=10**9)
        ref = evolve(config_1d(dt=0.005 / 16, **cfg_base)).final_state()
        errs = []
        for dt in (0.02, 0.01, 0.005):
            got = evolve(config_1d(dt=dt, **cfg_base)).final_state()
            errs.append(
                max(
                    l2_norm(got.field(j) - ref.field(j)) / l2_norm(ref.field(j))
                    for j in (1, 2, 3)
                )
            )
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        for order in orders:
            assert order == pytest.approx(4.0, abs=0.5)


class TestEvolve:
    def test_free_run_matches_free_propagation(self):
        cfg = config_1d(t_final=1.0)
        traj = evolve(cfg)
        assert traj.completed
        first, last = traj.snapshots[0], traj.snapshots[-1]
        for j in (1, 2, 3):
            free = free_propagate(first.field(j), float(RESONANT.mass(j)), 1.0)
            assert l2_norm(last.field(j) - free) <= 1e-12 * l2_norm(free)

    def test_gamma_norm_constant_on_free_run(self):
        cfg = config_1d(t_final=2.0, snapshot_every=50, gamma_order=3)
        traj = evolve(cfg)
        aggs = [r.aggregate for r in traj.gamma_reports]
        assert max(aggs) - min(aggs) <= 1e-9 * aggs[0]

    def test_deterministic_rerun(self):
        cfg = config_1d(tensor=NULL_1D, epsilon=1e3, t_final=0.5)
        a = evolve(cfg).final_state()
        b = evolve(cfg).final_state()
        for j in (1, 2, 3):
            assert np.array_equal(a.field(j).values, b.field(j).values)

    def test_snapshot_cadence_and_final(self):
        cfg = config_1d(t_final=1.0, dt=0.01, snapshot_every=30)
        traj = evolve(cfg)
        assert traj.times == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])

    def test_restart_consistency(self):
        # semigroup property across a snapshot boundary
        cfg = config_1d(tensor=NULL_1D, epsilon=1e4, t_final=0.5, snapshot_every=25)
        direct = evolve(cfg)
        half = direct.snapshots[1]
        assert half.time == pytest.approx(0.25)
        rest = half
        for _ in range(25):
            rest = step(rest, cfg.dt, cfg)
        final = direct.final_state()
        for j in (1, 2, 3):
            diff = l2_norm(rest.field(j) - final.field(j))
            assert diff <= 1e-10 * l2_norm(final.field(j))

    def test_nu_limit_monotone(self):
        outs = {}
        for nu in (0.0, 1e-4, 1e-3, 1e-2):
            cfg = config_1d(tensor=NULL_1D, epsilon=1e4, t_final=0.5, nu=nu)
            outs[nu] = evolve(cfg).final_state()
        diffs = []
        for nu in (1e-2, 1e-3, 1e-4):
            diffs.append(
                sum(
                    l2_norm(outs[nu].field(j) - outs[0.0].field(j))
                    for j in (1, 2, 3)
                )
            )
        assert diffs[0] > diffs[1] > diffs[2]

    def test_duhamel_residual_second_order(self):
        # residual of the integral form over one snapshot interval is O(dt^2)
        from qdnls.nullforms import eval_nonlinearity

        cfg = config_1d(tensor=NULL_1D, epsilon=2e4, t_final=0.4, snapshot_every=20)
        residuals = {}
        for cadence in (20, 10):
            c = config_1d(
                tensor=NULL_1D, epsilon=2e4, t_final=0.4, snapshot_every=cadence
            )
            traj = evolve(c)
            s0, s1 = traj.snapshots[0], traj.snapshots[1]
            delta = s1.time - s0.time
            total = 0.0
            for j in (1, 2, 3):
                m = float(RESONANT.mass(j))
                f0 = eval_nonlinearity(c.tensor, s0)[j - 1]
                f1 = eval_nonlinearity(c.tensor, s1)[j - 1]
                integral = 0.5 * delta * (
                    free_propagate(f0, m, delta).values + f1.values
                )
                resid = (
                    s1.field(j).values
                    - free_propagate(s0.field(j), m, delta).values
                    + 1j * integral
                )
                total += l2_norm(Field(cfg.grid, resid))
            residuals[cadence] = total
        # trapezoidal consistency: at least second order in the interval
        ratio = residuals[20] / residuals[10]
        assert 3.5 <= ratio <= 16.0

    def test_blowup_detected(self):
        # huge amplitude with a focusing-type quadratic source blows up fast
        strong = CoefficientTensor.from_entries(
            1, [(1, 0, 0, 50), (2, 0, 0, 50), (3, 0, 0, 50)]
        )
        cfg = config_1d(tensor=strong, epsilon=1e8, dt=0.05, t_final=40.0,
                        snapshot_every=2)
        traj = evolve(cfg)
        assert traj.interrupted == "blowup"
        assert traj.interruption_time is not None
        assert traj.snapshots  # last finite state retained

    def test_with_epsilon_helper(self):
        cfg = config_1d()
        assert with_epsilon(cfg, 0.5).epsilon == 0.5
