import numpy as np
import pytest

from reportgame import (
    Bias,
    BlockPartition,
    Certificate,
    ContractViolation,
    FiniteAtoms,
    Partition1D,
    PriorValidationError,
    ReportTuple,
    UniformInterval,
    VectorPrior,
    learner_utility,
    non_strategic_response,
    user_utility,
)
from conftest import random_finite_prior


class TestUtilities:
    def test_user_utility_ideal_point_vector(self):
        # least-squares fit (1/3, 1/3) shifted by (0.1, 0.1) is hit exactly
        assert user_utility([1 / 3, 1 / 3], [0.1, 0.1], [13 / 30, 13 / 30]) == pytest.approx(
            0.0, abs=1e-24
        )

    def test_user_utility_ideal_point_scalar(self):
        assert user_utility(0.5, 0.1, 0.6) == pytest.approx(0.0, abs=1e-24)

    def test_user_utility_quadratic_loss(self):
        assert user_utility(0.8, 0.03, 0.85) == pytest.approx(-4e-4, abs=1e-15)

    def test_learner_utility_examples(self):
        assert learner_utility([1 / 3, 1 / 3], [1 / 3, 1 / 3]) == 0.0
        assert learner_utility(0.3, 0.5) == pytest.approx(-0.04)
        assert learner_utility([0.6, 0.4], [0.9, 0.5]) == pytest.approx(-0.10)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            user_utility([0.1, 0.2], [0.1, 0.1], 0.3)
        with pytest.raises(ContractViolation):
            learner_utility([0.1, 0.2], [0.1, 0.2, 0.3])

    def test_shift_identity(self, rng):
        for _ in range(50):
            d = int(rng.integers(1, 5))
            w = rng.normal(size=d)
            b = rng.normal(size=d)
            while np.linalg.norm(b) == 0:
                b = rng.normal(size=d)
            x = rng.normal(size=d)
            assert user_utility(w, b, x) == pytest.approx(learner_utility(w + b, x), abs=1e-12)

    def test_nonpositive_with_equality_only_at_ideal(self, rng):
        for _ in range(30):
            w, b, x = rng.normal(), abs(rng.normal()) + 0.1, rng.normal()
            u = user_utility(w, b, x)
            assert u <= 0.0
            if x != w + b:
                assert u < 0.0
        assert learner_utility(1.3, 1.3) == 0.0


class TestNonStrategicResponse:
    def test_examples(self):
        assert non_strategic_response(FiniteAtoms((0.0, 1.0), (0.5, 0.5))) == pytest.approx(0.5)
        assert non_strategic_response(UniformInterval(0.0, 1.0)) == pytest.approx(0.5)
        assert non_strategic_response(FiniteAtoms((0.0, 1.0), (0.7, 0.3))) == pytest.approx(0.3)

    def test_vector_prior(self):
        prior = VectorPrior(np.array([[0.0, 0.0], [1.0, 2.0]]), np.array([0.25, 0.75]))
        assert non_strategic_response(prior) == pytest.approx([0.75, 1.5])

    def test_prior_mean_maximizes_expected_learner_utility(self, rng):
        # grid search never beats the prior mean by more than 1e-6
        for _ in range(20):
            prior = random_finite_prior(rng, max_atoms=6)
            w = np.asarray(prior.support)
            m = np.asarray(prior.masses)
            mean = non_strategic_response(prior)
            grid = np.arange(w.min(), w.max() + 1e-9, 1e-3)
            expected = -(m @ (w[:, None] - grid[None, :]) ** 2)
            at_mean = float(-(m @ (w - mean) ** 2))
            assert expected.max() <= at_mean + 1e-6


class TestPriors:
    def test_finite_atoms_merge_and_sort(self):
        prior = FiniteAtoms((0.5, 0.2, 0.5), (0.25, 0.5, 0.25))
        assert prior.support == (0.2, 0.5)
        assert prior.masses == (0.5, 0.5)

    def test_mass_renormalization_window(self):
        drift = FiniteAtoms((0.0, 1.0), (0.5 + 2e-10, 0.5))
        assert sum(drift.masses) == pytest.approx(1.0, abs=1e-15)
        with pytest.raises(PriorValidationError):
            FiniteAtoms((0.0, 1.0), (0.5 + 1e-6, 0.5))
        with pytest.raises(PriorValidationError):
            FiniteAtoms((0.0, 1.0), (-0.5, 1.5))

    def test_uniform_interval_validation(self):
        with pytest.raises(PriorValidationError):
            UniformInterval(1.0, 1.0)
        assert UniformInterval(0.0, 2.0).variance() == pytest.approx(4.0 / 12.0)

    def test_vector_prior_merges_duplicates(self):
        prior = VectorPrior(
            np.array([[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]]), np.array([0.25, 0.25, 0.5])
        )
        assert prior.size == 2
        assert prior.masses.sum() == pytest.approx(1.0)

    def test_bias_requires_positive_magnitude(self):
        with pytest.raises(ContractViolation):
            Bias.of(0.0)
        with pytest.raises(ContractViolation):
            Bias(np.zeros(3))
        b = Bias.random_direction(4, 0.05, seed=1)
        assert b.magnitude == pytest.approx(0.05)


class TestPartitionTypes:
    def test_partition1d_validation(self):
        p = Partition1D((0.0, 0.3, 1.0), (0.15, 0.65), 0.0308)
        assert p.n_regions == 2 and not p.is_babbling
        with pytest.raises(ContractViolation):
            Partition1D((0.0, 0.3, 0.2), (0.1, 0.5), 0.0)
        with pytest.raises(ContractViolation):
            Partition1D((0.0, 0.3, 1.0), (0.65, 0.15), 0.0)

    def test_block_partition_validation(self):
        bp = BlockPartition(
            support=(0.0, 0.5, 1.0),
            boundaries=(0, 1, 3),
            block_masses=(0.2, 0.8),
            block_means=(0.0, 0.75),
            block_second_moments=(0.0, 0.6),
            objective=0.03,
        )
        assert bp.blocks() == [(0, 0), (1, 2)]
        assert bp.block_of_atom(2) == 1
        with pytest.raises(ContractViolation):
            BlockPartition(
                support=(0.0, 1.0),
                boundaries=(0, 1),
                block_masses=(1.0,),
                block_means=(0.5,),
                block_second_moments=(0.5,),
                objective=0.0,
            ).block_of_atom(5)

    def test_report_tuple_pattern_and_structure(self):
        t = ReportTuple((0.0, 0.0, 0.3, 0.7, 1.0), sigma=0.2)
        assert t.pattern == (2, 1)
        assert t.is_influential
        assert t.has_endpoint_pooling_structure()
        pooled_interior = ReportTuple((0.4, 0.4), sigma=0.2)
        assert not pooled_interior.has_endpoint_pooling_structure()
        assert not pooled_interior.is_influential
        with pytest.raises(ContractViolation):
            ReportTuple((0.5, 0.4), sigma=0.2)
        with pytest.raises(ContractViolation):
            ReportTuple((0.5, 1.2), sigma=0.2)
        with pytest.raises(ContractViolation):
            ReportTuple((0.5, 1.0), sigma=0.0)

    def test_certificate_validation(self):
        with pytest.raises(ContractViolation):
            Certificate(kind="nonsense", value=0.0, witness=None)
        with pytest.raises(ContractViolation):
            Certificate(kind="epsilon_ic", value=-1.0, witness=None)
