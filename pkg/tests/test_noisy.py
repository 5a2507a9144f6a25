import numpy as np
import pytest

from reportgame import (
    Bias,
    ContractViolation,
    FiniteAtoms,
    ReportTuple,
    VectorPrior,
    epsilon_br,
    foc_residual,
    noisy_posterior_mean,
    solve_binary_closed_form,
    solve_noisy_1d,
    solve_noisy_lifted,
)
from reportgame.bruteforce import grid_search_noisy

GOLDEN_PRIOR = FiniteAtoms((0.8, 0.9), (0.5, 0.5))
GOLDEN_B, GOLDEN_SIGMA = 0.03, 0.2


class TestFocResidual:
    def test_constant_tuple_has_zero_slope(self):
        prior = FiniteAtoms((0.1, 0.5, 0.9), (0.3, 0.4, 0.3))
        tup = ReportTuple((0.6, 0.6, 0.6), sigma=0.3)
        for i in range(3):
            assert foc_residual(prior, tup, i, bias=0.05) == pytest.approx(0.0, abs=1e-12)

    def test_golden_root(self):
        tup = ReportTuple((0.2823, 1.0), sigma=GOLDEN_SIGMA)
        assert abs(foc_residual(GOLDEN_PRIOR, tup, 0, GOLDEN_B)) < 1e-3

    def test_multiplicity_sign_pattern(self):
        prior = FiniteAtoms((0.0, 1.0), (0.7, 0.3))
        signs = {}
        for m in (0.35, 0.45, 0.75, 0.85):
            tup = ReportTuple((m, 1.0), sigma=0.5)
            signs[m] = foc_residual(prior, tup, 0, bias=0.303)
        assert signs[0.35] > 0 and signs[0.45] < 0
        assert signs[0.75] < 0 and signs[0.85] > 0


class TestSolveNoisy1D:
    def test_golden_instance(self):
        res = solve_noisy_1d(GOLDEN_PRIOR, GOLDEN_B, GOLDEN_SIGMA)
        assert res.verified and res.influential
        assert res.pattern == (0, 1)
        assert res.tup.reports[0] == pytest.approx(0.2823, abs=1e-3)
        assert res.tup.reports[1] == 1.0
        assert res.br_violation.value <= 1e-4

    def test_multiplicity_instance(self):
        prior = FiniteAtoms((0.0, 1.0), (0.7, 0.3))
        res = solve_noisy_1d(prior, 0.303, 0.5)
        pattern_01 = [c for c in res.verified_candidates if c.pattern == (0, 1)]
        assert len(pattern_01) >= 2
        roots = sorted(c.tup.reports[0] for c in pattern_01)
        assert any(0.35 < r < 0.45 for r in roots)
        assert any(0.75 < r < 0.85 for r in roots)
        best = max(pattern_01, key=lambda c: c.utility)
        assert res.tup.reports == best.tup.reports

    def test_single_atom(self):
        res = solve_noisy_1d(FiniteAtoms((0.4,), (1.0,)), 0.1, 0.2)
        assert res.tup.reports == (0.0,)
        assert res.verified and not res.influential
        assert res.br_violation.value == pytest.approx(0.0, abs=1e-12)

    def test_knife_edge_yields_near_degenerate_epsilon_equilibrium(self):
        # at pi2 = 1/2 with midpoint bias no exact influential equilibrium
        # exists; verification at the 1e-4 threshold still admits
        # near-pooled tuples, which are epsilon-equilibria barely above the
        # babbling utility
        prior = FiniteAtoms((0.0, 1.0), (0.5, 0.5))
        res = solve_noisy_1d(prior, 0.5, 0.3)
        assert res.br_violation.value <= 1e-4
        babbling_utility = -float(
            np.asarray(prior.masses) @ (np.asarray(prior.support) + 0.5 - prior.mean()) ** 2
        )
        assert res.tup.expected_user_utility >= babbling_utility - 1e-12
        if res.influential:
            assert res.tup.reports[1] - res.tup.reports[0] < 0.01

    def test_totality_single_atom_fallback_shape(self):
        res = solve_noisy_1d(FiniteAtoms((0.25,), (1.0,)), 0.2, 0.4)
        assert res.tup.reports == (0.0,)
        assert res.verified and not res.influential

    def test_four_atom_interior_chain(self):
        prior = FiniteAtoms((0.1, 0.35, 0.6, 0.95), (0.2, 0.3, 0.3, 0.2))
        res = solve_noisy_1d(prior, 0.05, 0.15)
        assert res.verified and res.influential
        assert res.tup.has_endpoint_pooling_structure()
        assert res.br_violation.value <= 1e-4
        t, tp = res.pattern
        interior = res.tup.reports[t : res.tup.size - tp]
        assert all(0.0 < r < 1.0 for r in interior)
        assert list(interior) == sorted(interior)

    def test_structure_law_on_outputs(self, rng):
        for _ in range(6):
            n = int(rng.integers(2, 4))
            support = np.sort(rng.uniform(0.0, 1.0, n))
            while np.any(np.diff(support) < 0.05):
                support = np.sort(rng.uniform(0.0, 1.0, n))
            prior = FiniteAtoms(tuple(support), tuple(rng.dirichlet(np.ones(n))))
            res = solve_noisy_1d(prior, float(rng.uniform(0.02, 0.3)), float(rng.uniform(0.1, 0.5)))
            for cand in res.verified_candidates:
                assert cand.tup.has_endpoint_pooling_structure()
            if res.influential:
                grid = np.linspace(0.0, 1.0, 1001)
                phi = noisy_posterior_mean(prior, res.tup, grid)
                assert np.all(np.diff(phi) > 0.0)

    def test_requires_unit_box_support(self):
        with pytest.raises(ContractViolation):
            solve_noisy_1d(FiniteAtoms((0.0, 1.2), (0.5, 0.5)), 0.1, 0.2)

    def test_grid_bruteforce_never_beats_solver(self):
        res = solve_noisy_1d(GOLDEN_PRIOR, GOLDEN_B, GOLDEN_SIGMA)
        _, grid_utility = grid_search_noisy(GOLDEN_PRIOR, GOLDEN_B, GOLDEN_SIGMA, grid_size=201)
        assert grid_utility <= res.tup.expected_user_utility + 5e-3


class TestBinaryClosedForm:
    def test_no_equilibrium_at_low_odds(self):
        assert solve_binary_closed_form(0.0, 1.0, 0.3, 0.2) is None
        assert solve_binary_closed_form(0.0, 1.0, 0.5, 0.2) is None

    def test_closed_form_value(self):
        tup = solve_binary_closed_form(0.0, 1.0, 0.7, 0.2)
        assert tup.reports[0] == pytest.approx(1 - 0.2 * np.sqrt(2 * np.log(7 / 3)), abs=1e-12)
        assert tup.reports[1] == 1.0

    def test_boundary_clamp(self):
        tup = solve_binary_closed_form(0.0, 1.0, 0.9, 2.0)
        assert tup.reports == (0.0, 1.0)

    def test_matches_generic_solver(self):
        for pi2, sigma in [(0.6, 0.2), (0.7, 0.5), (0.9, 0.1)]:
            closed = solve_binary_closed_form(0.0, 1.0, pi2, sigma)
            prior = FiniteAtoms((0.0, 1.0), (1.0 - pi2, pi2))
            res = solve_noisy_1d(prior, 0.5, sigma)
            assert res.verified
            assert abs(res.tup.reports[0] - closed.reports[0]) <= 1e-4
            assert res.tup.reports[1] == 1.0

    def test_input_contracts(self):
        with pytest.raises(ContractViolation):
            solve_binary_closed_form(1.0, 0.0, 0.7, 0.2)
        with pytest.raises(ContractViolation):
            solve_binary_closed_form(0.0, 1.0, 1.0, 0.2)


class TestNoisyLifted:
    def test_one_dimensional_prior_reduces_exactly(self):
        prior = VectorPrior(np.array([[0.8], [0.9]]), np.array([0.5, 0.5]))
        lifted = solve_noisy_lifted(prior, Bias.of(GOLDEN_B), GOLDEN_SIGMA)
        direct = solve_noisy_1d(GOLDEN_PRIOR, GOLDEN_B, GOLDEN_SIGMA)
        assert lifted.scale == 1.0 and lifted.offset == 0.0
        assert lifted.scalar.tup.reports == pytest.approx(direct.tup.reports, abs=1e-9)

    def test_product_prior_recovers_golden_tuple(self):
        bias = Bias.random_direction(3, GOLDEN_B, seed=5)
        bhat = bias.direction
        z = np.array([0.3, -0.1, 0.2])
        z -= (z @ bhat) * bhat
        atoms = np.array([0.8 * bhat + z, 0.8 * bhat - z, 0.9 * bhat + z, 0.9 * bhat - z])
        prior = VectorPrior(atoms, np.full(4, 0.25))
        lifted = solve_noisy_lifted(prior, bias, GOLDEN_SIGMA)
        assert lifted.scalar.verified
        assert lifted.scalar.tup.reports[0] == pytest.approx(0.2823, abs=1e-3)
        assert lifted.scalar.tup.reports[1] == 1.0

    def test_single_atom_prior(self):
        prior = VectorPrior(np.array([[2.0, 0.5]]), np.array([1.0]))
        lifted = solve_noisy_lifted(prior, Bias.of([0.1, 0.0]), 0.2)
        assert not lifted.scalar.influential
        assert lifted.scalar.verified

    def test_out_of_box_support_is_rescaled(self):
        # projections {-1, 3} map onto {0, 1} with bias and utilities rescaled
        prior = VectorPrior(np.array([[-1.0, 0.0], [3.0, 0.0]]), np.array([0.3, 0.7]))
        lifted = solve_noisy_lifted(prior, Bias.of([2.0, 0.0]), 0.2)
        assert lifted.offset == -1.0 and lifted.scale == 4.0
        closed = solve_binary_closed_form(0.0, 1.0, 0.7, 0.2)
        assert lifted.scalar.tup.reports[0] == pytest.approx(closed.reports[0], abs=1e-4)
        assert lifted.br_violation_original_units == pytest.approx(
            16.0 * lifted.scalar.br_violation.value
        )


class TestEpsilonBR:
    def test_constant_tuple(self):
        prior = FiniteAtoms((0.2, 0.7), (0.5, 0.5))
        cert = epsilon_br(prior, ReportTuple((0.4, 0.4), sigma=0.3), bias=0.1)
        assert cert.value == pytest.approx(0.0, abs=1e-12)

    def test_verified_golden_tuple(self):
        res = solve_noisy_1d(GOLDEN_PRIOR, GOLDEN_B, GOLDEN_SIGMA)
        cert = epsilon_br(GOLDEN_PRIOR, res.tup, GOLDEN_B)
        assert cert.value <= 1e-4

    def test_perturbed_tuple_yields_positive_violation(self):
        cert = epsilon_br(GOLDEN_PRIOR, ReportTuple((0.5, 1.0), sigma=GOLDEN_SIGMA), GOLDEN_B)
        assert cert.value > 1e-6
        assert cert.witness.atom_index == 0
        assert 0.0 <= cert.witness.target <= 1.0
