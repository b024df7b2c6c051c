"""J operators, Gamma norms, commutation, and the decay-ratio diagnostic."""

import numpy as np
import pytest

from qdnls.spectral import Field, StateTriple, free_propagate, l2_norm
from qdnls.vectorfield import (
    apply_J,
    apply_J_phase,
    gamma_norm,
    gamma_norms_by_index,
    klainerman_ratio,
    multi_indices,
    pullback,
    shell_mass_fraction,
    sigma_norm,
    sigma_norm_field,
)

from .util import RESONANT, gaussian, grid_1d, grid_2d, random_band_limited


class TestPullback:
    def test_zero_time_identity(self):
        f = gaussian(grid_1d())
        assert pullback(f, 1.0, 0.0) is f

    def test_free_solutions_pull_back_to_data(self):
        g = grid_2d()
        phi = gaussian(g)
        u = free_propagate(phi, 2.0, 1.5)
        back = pullback(u, 2.0, 1.5)
        assert l2_norm(back - phi) <= 1e-12 * l2_norm(phi)

    def test_pushforward_inverts(self):
        g = grid_1d()
        rng = np.random.default_rng(0)
        u = random_band_limited(g, rng)
        again = free_propagate(pullback(u, -1.5, 2.0), -1.5, 2.0)
        assert l2_norm(again - u) <= 1e-12 * l2_norm(u)


class TestApplyJ:
    def test_time_zero_is_coordinate_multiplication(self):
        g = grid_1d()
        f = gaussian(g)
        out = apply_J(f, 2.0, 0.0, 1)
        target = Field(g, g.coordinate(1) * f.values)
        assert l2_norm(out - target) <= 1e-12 * l2_norm(target)

    def test_free_solution_conjugation(self):
        g = grid_2d()
        phi = gaussian(g)
        m, t = 3.0, 1.2
        u = free_propagate(phi, m, t)
        out = apply_J(u, m, t, 2)
        target = free_propagate(Field(g, g.coordinate(2) * phi.values), m, t)
        assert l2_norm(out - target) <= 1e-12 * l2_norm(target)

    @pytest.mark.parametrize("m", [1.0, 2.0, -2.0])
    def test_phase_form_cross_check(self, m):
        # the singular phase expression agrees at moderate t on localized fields
        g = grid_1d()
        f = gaussian(g, width=1.0)
        a = apply_J(f, m, 1.0, 1)
        b = apply_J_phase(f, m, 1.0, 1)
        assert l2_norm(a - b) <= 1e-7 * l2_norm(a)

    def test_phase_form_rejects_t0(self):
        with pytest.raises(ValueError):
            apply_J_phase(gaussian(grid_1d()), 1.0, 0.0, 1)


class TestGammaNorm:
    def test_order_zero_is_l2(self):
        g = grid_2d()
        state = StateTriple((gaussian(g), gaussian(g, width=2.0), gaussian(g)), 0.0)
        rep = gamma_norm(state, RESONANT, 0)
        direct = np.sqrt(sum(l2_norm(state.field(j)) ** 2 for j in (1, 2, 3)))
        assert rep.aggregate == pytest.approx(direct, rel=1e-12)

    def test_aggregate_is_rss_of_rows(self):
        g = grid_2d()
        state = StateTriple((gaussian(g), gaussian(g), gaussian(g)), 0.0)
        rep = gamma_norm(state, RESONANT, 3)
        rss = np.sqrt(sum(r.value**2 for r in rep.rows))
        assert rep.aggregate == pytest.approx(rss, rel=1e-12)

    def test_free_evolution_conserves_gamma_norms(self):
        # every Gamma^alpha u solves the free equation, so each norm is constant
        g = grid_2d()
        phi = [gaussian(g), gaussian(g, center=(1.0, 0.0)), gaussian(g, width=1.5)]
        s0 = StateTriple(tuple(phi), 0.0)
        rep0 = gamma_norm(s0, RESONANT, 3)
        for t in (0.5, 2.0, 8.0):
            ut = tuple(
                free_propagate(phi[j - 1], float(RESONANT.mass(j)), t)
                for j in (1, 2, 3)
            )
            rep = gamma_norm(StateTriple(ut, t), RESONANT, 3)
            assert rep.aggregate == pytest.approx(rep0.aggregate, rel=1e-9)
            for r0, rt in zip(rep0.rows, rep.rows):
                assert rt.value == pytest.approx(r0.value, rel=1e-9, abs=1e-12)

    def test_time_zero_matches_weighted_sobolev(self):
        g = grid_2d()
        state = StateTriple((gaussian(g), gaussian(g), gaussian(g)), 0.0)
        rep = gamma_norm(state, RESONANT, 4)
        sig = sigma_norm([state.field(j) for j in (1, 2, 3)], 4)
        assert rep.aggregate == pytest.approx(sig, rel=1e-12)

    def test_boundary_flag_on_offcenter_profile(self):
        g = grid_1d(n=256, length=20.0)
        shifted = gaussian(g, center=(9.5,), width=0.5)
        state = StateTriple((shifted, shifted, shifted), 0.0)
        rep = gamma_norm(state, RESONANT, 0)
        assert rep.boundary_flagged


class TestMultiIndices:
    def test_counts(self):
        assert len(multi_indices(1, 3)) == 4
        assert len(multi_indices(2, 2)) == 6
        assert len(multi_indices(4, 2)) == 15

    def test_gamma_table_covers_all_indices(self):
        g = grid_1d(n=256)
        f = gaussian(g)
        table = gamma_norms_by_index(f, 1.0, 0.5, 2)
        keys = set(table)
        expected = {
            (ap, aj)
            for aj in multi_indices(1, 2)
            for ap in multi_indices(1, 2 - sum(aj))
        }
        assert keys == expected


class TestKlainermanRatio:
    def test_free_gaussian_bounded_d2(self):
        # box sized for the t=64 spread: width sqrt(1+t^2) must stay inside
        g = grid_2d(n=1024, length=128 * np.pi)
        phi = gaussian(g)
        ratios = []
        for t in (1.0, 4.0, 16.0, 64.0):
            u = free_propagate(phi, 1.0, t)
            ratios.append(klainerman_ratio(u, 1.0, t))
        assert max(ratios) / min(ratios) < 1.10

    def test_zero_field_rejected(self):
        g = grid_1d()
        with pytest.raises(ValueError):
            klainerman_ratio(Field(g, np.zeros(g.shape, complex)), 1.0, 1.0)

    def test_scale_invariance(self):
        g = grid_1d()
        f = gaussian(g)
        r1 = klainerman_ratio(f, 1.0, 2.0)
        r2 = klainerman_ratio(f * 7.5, 1.0, 2.0)
        assert r2 == pytest.approx(r1, rel=1e-12)


class TestShellMass:
    def test_centered_gaussian_negligible(self):
        assert shell_mass_fraction(gaussian(grid_2d(), width=1.0)) < 1e-12

    def test_constant_field_matches_volume_fraction(self):
        for maker, dim in ((grid_1d, 1), (grid_2d, 2)):
            g = maker(n=256) if dim == 1 else maker(n=128)
            f = Field(g, np.ones(g.shape, complex))
            expect = 1 - 0.9**dim
            assert shell_mass_fraction(f) == pytest.approx(expect, abs=0.02)

    def test_zero_field(self):
        g = grid_1d(n=64)
        assert shell_mass_fraction(Field(g, np.zeros(g.shape, complex))) == 0.0


class TestSigmaNorm:
    def test_monomial_weights_included(self):
        # sigma norm at order 1 adds |x f| and |df| contributions to |f|
        g = grid_1d(n=512)
        f = gaussian(g)
        from qdnls.spectral import derivative

        direct = np.sqrt(
            l2_norm(f) ** 2
            + l2_norm(Field(g, g.coordinate(1) * f.values)) ** 2
            + l2_norm(derivative(f, 1)) ** 2
        )
        assert sigma_norm_field(f, 1) == pytest.approx(direct, rel=1e-12)


class TestOrderCap:
    def test_high_order_needs_explicit_flag(self):
        g = grid_1d(n=64, length=10.0)
        state = StateTriple((gaussian(g), gaussian(g), gaussian(g)), 0.0)
        with pytest.raises(ValueError, match="cap"):
            gamma_norm(state, RESONANT, 8)
        rep = gamma_norm(state, RESONANT, 8, allow_high_order=True)
        assert rep.aggregate > 0
