"""Nonlinearity evaluation, form algebra, and the exact-identity residuals."""

import numpy as np
import pytest

from qdnls.nullforms import (
    eval_G,
    eval_Q,
    eval_nonlinearity,
    extra_decay_bound,
    extra_decay_residual,
    j_action_residual,
    leibniz_residual,
    relative_residual,
)
from qdnls.problem import CoefficientTensor, MassTriple, NotNullError, decompose
from qdnls.spectral import Field, StateTriple, dealias, free_propagate, l2_norm

from .util import (
    NON_RESONANT,
    RESONANT,
    gaussian,
    grid_1d,
    grid_2d,
    random_null_tensor,
)

IDENTITY_TOL = 1e-7


@pytest.fixture(scope="module")
def pair_2d():
    g = grid_2d()
    f = gaussian(g, wavevector=(0.3, 0.0))
    h = gaussian(g, center=(1.0, -0.5), wavevector=(0.0, -0.2))
    return f, h


class TestEvalG:
    def test_constants_annihilated(self):
        g = grid_2d(n=64)
        one = Field(g, np.ones(g.shape, complex))
        out = eval_G(3, 1, one, one, RESONANT)
        assert l2_norm(out) < 1e-12

    def test_equal_mass_antisymmetric_case(self):
        masses = MassTriple(2, 2, 4)
        g = grid_2d(n=64)
        f = gaussian(g)
        out = eval_G(3, 1, f, f, masses)
        assert l2_norm(out) <= 1e-12 * l2_norm(f)

    def test_gaussian_closed_form(self):
        # oracle: for f = e^{-|x|^2/2}, G_{3,1}(f,f) = (m1-m2) f d1 f = x1 e^{-|x|^2}
        g = grid_2d()
        f = gaussian(g)
        out = eval_G(3, 1, f, f, RESONANT)
        x1 = g.coordinate(1)
        target = Field(g, x1 * np.exp(-(x1**2 + g.coordinate(2) ** 2)))
        assert l2_norm(out - target) <= 1e-10 * l2_norm(target)


class TestEvalQ:
    def test_same_argument_vanishes(self, pair_2d):
        f, _ = pair_2d
        assert l2_norm(eval_Q(1, 2, f, f)) <= 1e-12 * l2_norm(f)

    def test_antisymmetry_in_axes(self, pair_2d):
        f, h = pair_2d
        a = eval_Q(1, 2, f, h)
        b = eval_Q(2, 1, f, h)
        assert l2_norm(a + b) <= 1e-12 * l2_norm(a)

    def test_equal_axes_rejected(self, pair_2d):
        f, h = pair_2d
        with pytest.raises(ValueError):
            eval_Q(1, 1, f, h)

    def test_against_finite_differences(self):
        # oracle: one-sided-free centered differences at two resolutions
        errs = []
        for n in (128, 256):
            g = grid_2d(n=n, length=12 * np.pi)
            f = gaussian(g, center=(1.0, 0.0))
            h = gaussian(g, center=(0.0, 1.0))
            spec = eval_Q(1, 2, f, h).values

            def dx(v, axis):
                return (np.roll(v, -1, axis) - np.roll(v, 1, axis)) / (2 * g.spacing)

            fd = dx(f.values, 0) * dx(h.values, 1) - dx(f.values, 1) * dx(h.values, 0)
            errs.append(np.max(np.abs(spec - fd)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.3)


class TestEvalNonlinearity:
    def test_zero_tensor(self):
        g = grid_2d(n=64)
        state = StateTriple((gaussian(g), gaussian(g), gaussian(g)), 0.0)
        for f in eval_nonlinearity(CoefficientTensor.zeros(2), state):
            assert l2_norm(f) == 0.0

    def test_constant_source(self):
        g = grid_2d(n=64)
        one = Field(g, np.ones(g.shape, complex))
        state = StateTriple((one, one, one), 0.0)
        tensor = CoefficientTensor.from_entries(2, [(3, 0, 0, 1)])
        f3 = eval_nonlinearity(tensor, state, use_dealias=False)[2]
        assert np.allclose(f3.values, 1.0)

    def test_conjugation_pattern(self):
        # equation 1 conjugates its first factor, equation 2 its second
        g = grid_1d(n=256)
        f = gaussian(g, wavevector=(0.4,))
        state = StateTriple((f, f, f), 0.0)
        t1 = CoefficientTensor.from_entries(1, [(1, 0, 0, 1)])
        out1 = eval_nonlinearity(t1, state, use_dealias=False)[0]
        assert l2_norm(out1 - Field(g, np.conj(f.values) * f.values)) < 1e-12
        t2 = CoefficientTensor.from_entries(1, [(2, 0, 0, 1)])
        out2 = eval_nonlinearity(t2, state, use_dealias=False)[1]
        assert l2_norm(out2 - Field(g, f.values * np.conj(f.values))) < 1e-12

    def test_bilinear_scaling_real(self):
        g = grid_2d(n=64)
        rng = np.random.default_rng(1)
        tensor = random_null_tensor(2, rng)
        state = StateTriple((gaussian(g), gaussian(g, width=1.5), gaussian(g)), 0.0)
        lam = 2.5
        scaled = StateTriple(tuple(state.field(j) * lam for j in (1, 2, 3)), 0.0)
        base = eval_nonlinearity(tensor, state)
        big = eval_nonlinearity(tensor, scaled)
        for a, b in zip(base, big):
            assert l2_norm(b - lam**2 * a) <= 1e-12 * max(l2_norm(b), 1e-300)

    def test_matches_form_evaluation_path(self, pair_2d):
        # oracle: evaluate the same null tensor through its certificate
        f, h = pair_2d
        g = gaussian(f.grid, width=1.2)
        state = StateTriple((f, h, g), 0.0)
        rng = np.random.default_rng(7)
        tensor = random_null_tensor(2, rng)
        dec = decompose(tensor, RESONANT)
        direct = eval_nonlinearity(tensor, state)
        args = {1: (state.field(2), state.field(3)),
                2: (state.field(3), state.field(1)),
                3: (state.field(1), state.field(2))}
        conj_first = {1: True, 2: False, 3: False}
        for eq in (1, 2, 3):
            u, v = args[eq]
            acc = np.zeros(f.grid.shape, dtype=complex)
            for a in (1, 2):
                w = dec.gauge_weight(eq, a)
                if not w.is_zero():
                    acc = acc + complex(w) * eval_G(eq, a, u, v, RESONANT).values
            w = dec.strong_weight(eq, 1, 2)
            if not w.is_zero():
                if eq == 2:
                    # second-factor conjugation: swap arguments and axes
                    q = eval_Q(2, 1, v, u, conjugate_first=True)
                else:
                    q = eval_Q(1, 2, u, v, conjugate_first=conj_first[eq])
                acc = acc + complex(w) * q.values
            expected = dealias(Field(f.grid, acc))
            assert relative_residual(direct[eq - 1], expected) <= 1e-12


class TestLeibnizRule:
    @pytest.mark.parametrize("eq", [1, 2, 3])
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_resonant_identity(self, pair_2d, eq, t):
        f, h = pair_2d
        for axis in (1, 2):
            res = leibniz_residual(eq, f, h, RESONANT, t, axis)
            assert res.residual <= IDENTITY_TOL

    def test_non_resonant_failure(self, pair_2d):
        f, h = pair_2d
        worst = max(
            leibniz_residual(eq, f, h, NON_RESONANT, 1.0, 1).residual
            for eq in (1, 2, 3)
        )
        assert worst > 1e-3


class TestExtraDecay:
    @pytest.mark.parametrize("form", ["G1", "G2", "G3"])
    def test_gauge_rewrite(self, pair_2d, form):
        f, h = pair_2d
        for t in (0.5, 1.0, 2.0):
            res = extra_decay_residual(form, f, h, RESONANT, t, (1,))
            assert res.residual <= IDENTITY_TOL

    @pytest.mark.parametrize("form", ["Q", "Qbar"])
    @pytest.mark.parametrize("aux", [None, (1.0, 1.0), (2.0, -1.0)])
    def test_strong_rewrite_any_aux_masses(self, pair_2d, form, aux):
        f, h = pair_2d
        res = extra_decay_residual(form, f, h, RESONANT, 1.0, (1, 2), aux_masses=aux)
        assert res.residual <= IDENTITY_TOL

    def test_zero_field_zero_residual(self):
        g = grid_2d(n=64)
        z = Field(g, np.zeros(g.shape, complex))
        res = extra_decay_residual("G3", z, z, RESONANT, 1.0, (1,))
        assert res.residual == 0.0

    def test_t_zero_rejected(self, pair_2d):
        f, h = pair_2d
        with pytest.raises(ValueError):
            extra_decay_residual("G3", f, h, RESONANT, 0.0, (1,))

    def test_gauge_forms_need_resonance(self, pair_2d):
        f, h = pair_2d
        with pytest.raises(ValueError):
            extra_decay_residual("G1", f, h, NON_RESONANT, 1.0, (1,))


class TestJAction:
    def test_order_zero_trivial(self, pair_2d):
        f, h = pair_2d
        res = j_action_residual("G3", (0, 0), f, h, RESONANT, 1.0, (1,))
        assert res.residual == 0.0

    @pytest.mark.parametrize("form", ["G1", "G2", "G3"])
    def test_gauge_first_order(self, pair_2d, form):
        f, h = pair_2d
        for c in ((1, 0), (0, 1)):
            for a in (1, 2):
                res = j_action_residual(form, c, f, h, RESONANT, 1.0, (a,))
                assert res.residual <= IDENTITY_TOL

    @pytest.mark.parametrize("form", ["Q1", "Q2", "Q3"])
    def test_strong_first_order_with_gauge_correction(self, pair_2d, form):
        f, h = pair_2d
        for c in ((1, 0), (0, 1)):
            res = j_action_residual(form, c, f, h, RESONANT, 1.0, (1, 2))
            assert res.residual <= IDENTITY_TOL

    @pytest.mark.parametrize("alpha", [(2, 0), (1, 1), (0, 2)])
    def test_second_order_membership(self, pair_2d, alpha):
        f, h = pair_2d
        res = j_action_residual("G3", alpha, f, h, RESONANT, 1.0, (1,))
        assert res.residual <= 1e-6
        res = j_action_residual("Q3", alpha, f, h, RESONANT, 1.0, (1, 2))
        assert res.residual <= 1e-6

    def test_non_resonant_rejected(self, pair_2d):
        f, h = pair_2d
        with pytest.raises(ValueError):
            j_action_residual("G3", (1, 0), f, h, NON_RESONANT, 1.0, (1,))

    def test_order_three_rejected(self, pair_2d):
        f, h = pair_2d
        with pytest.raises(ValueError):
            j_action_residual("G3", (2, 1), f, h, RESONANT, 1.0, (1,))


class TestExtraDecayBound:
    def test_zero_state(self):
        g = grid_2d(n=64)
        z = Field(g, np.zeros(g.shape, complex))
        state = StateTriple((z, z, z), 1.0)
        rng = np.random.default_rng(2)
        tensor = random_null_tensor(2, rng)
        assert extra_decay_bound(state, tensor, RESONANT, 1.0, 2) == 0.0

    def test_non_null_rejected_by_default(self):
        g = grid_2d(n=64)
        state = StateTriple((gaussian(g), gaussian(g), gaussian(g)), 1.0)
        tensor = CoefficientTensor.from_entries(2, [(3, 0, 0, 1)])
        with pytest.raises(NotNullError):
            extra_decay_bound(state, tensor, RESONANT, 1.0, 2)

    def test_null_ratio_bounded_nonnull_ratio_grows(self):
        # free-evolved Gaussians: the weighted ratio stays bounded for a null
        # tensor and grows roughly linearly through the non-null path
        g = grid_2d()
        rng = np.random.default_rng(3)
        tensor = random_null_tensor(2, rng)
        source = CoefficientTensor.from_entries(
            2, [(1, 0, 0, 1), (2, 0, 0, 1), (3, 0, 0, 1)]
        )
        phi = [gaussian(g), gaussian(g, center=(0.5, 0.0)), gaussian(g, width=1.3)]
        times = [1.0, 2.0, 4.0, 8.0]
        null_ratios = []
        nonnull_ratios = []
        for t in times:
            state = StateTriple(
                tuple(
                    free_propagate(phi[j - 1], float(RESONANT.mass(j)), t)
                    for j in (1, 2, 3)
                ),
                t,
            )
            null_ratios.append(extra_decay_bound(state, tensor, RESONANT, t, 2))
            nonnull_ratios.append(
                extra_decay_bound(state, source, RESONANT, t, 2, require_null=False)
            )
        assert max(null_ratios) / min(null_ratios) <= 10.0
        slope = np.polyfit(np.log(times), np.log(nonnull_ratios), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.2)
