import numpy as np
import pytest

from reportgame import FiniteAtoms, SizeGuardError
from reportgame.bruteforce import (
    best_feasible_contiguous,
    enumerate_all_partitions,
    grid_search_noisy,
)


class TestEnumerate:
    def test_two_atoms_both_partitions(self):
        prior = FiniteAtoms((0.0, 1.0), (0.5, 0.5))
        records = enumerate_all_partitions(prior, 0.3, contiguous_only=True)
        assert len(records) == 2
        separating = next(r for r in records if len(r.blocks) == 2)
        pooled = next(r for r in records if len(r.blocks) == 1)
        assert separating.feasible and separating.objective == pytest.approx(0.0)
        assert pooled.feasible and pooled.objective == pytest.approx(0.25)
        assert best_feasible_contiguous(records).blocks == ((0,), (1,))

    def test_two_atoms_large_bias_pools(self):
        prior = FiniteAtoms((0.0, 1.0), (0.5, 0.5))
        records = enumerate_all_partitions(prior, 0.6, contiguous_only=True)
        separating = next(r for r in records if len(r.blocks) == 2)
        assert not separating.feasible
        assert best_feasible_contiguous(records).blocks == ((0, 1),)

    def test_single_atom(self):
        records = enumerate_all_partitions(FiniteAtoms((0.5,), (1.0,)), 0.1)
        assert len(records) == 1
        assert records[0].feasible and records[0].objective == 0.0

    def test_noncontiguous_pattern_enumerated_and_infeasible(self, rng):
        for _ in range(5):
            support = np.sort(rng.uniform(0.0, 1.0, 3))
            while np.any(np.diff(support) < 0.05):
                support = np.sort(rng.uniform(0.0, 1.0, 3))
            prior = FiniteAtoms(tuple(support), tuple(rng.dirichlet(np.ones(3))))
            records = enumerate_all_partitions(prior, 0.1, contiguous_only=False)
            assert len(records) == 5  # Bell(3)
            skipping = next(
                r for r in records if tuple(sorted(map(tuple, r.blocks))) == ((0, 2), (1,))
            )
            assert not skipping.feasible

    def test_set_partition_count(self):
        prior = FiniteAtoms(tuple(np.linspace(0, 1, 5)), tuple([0.2] * 5))
        records = enumerate_all_partitions(prior, 0.1, contiguous_only=False)
        assert len(records) == 52  # Bell(5)

    def test_size_guards(self):
        big = FiniteAtoms(tuple(np.linspace(0, 1, 11)), tuple([1 / 11] * 11))
        with pytest.raises(SizeGuardError):
            enumerate_all_partitions(big, 0.1, contiguous_only=True)
        seven = FiniteAtoms(tuple(np.linspace(0, 1, 7)), tuple([1 / 7] * 7))
        with pytest.raises(SizeGuardError):
            enumerate_all_partitions(seven, 0.1, contiguous_only=False)

    def test_deviation_check_equals_adjacent_block_condition(self, rng):
        # the no-deviation definition and the adjacent-block inequality encode
        # the same constraint on contiguous partitions
        for _ in range(20):
            m = int(rng.integers(2, 7))
            support = np.sort(rng.uniform(0.0, 1.0, m))
            while np.any(np.diff(support) < 1e-4):
                support = np.sort(rng.uniform(0.0, 1.0, m))
            masses = rng.dirichlet(np.ones(m))
            prior = FiniteAtoms(tuple(support), tuple(masses))
            b = float(rng.choice([0.05, 0.1, 0.3]))
            for record in enumerate_all_partitions(prior, b, contiguous_only=True):
                means = [
                    float(masses[list(blk)] @ support[list(blk)] / masses[list(blk)].sum())
                    for blk in record.blocks
                ]
                block_ok = True
                for k in range(len(record.blocks) - 1):
                    threshold = 0.5 * (means[k] + means[k + 1]) - b
                    last_left = support[record.blocks[k][-1]]
                    first_right = support[record.blocks[k + 1][0]]
                    if not last_left <= threshold <= first_right:
                        block_ok = False
                assert block_ok == record.feasible


class TestGridSearch:
    def test_single_atom_constant(self):
        tup, utility = grid_search_noisy(FiniteAtoms((0.4,), (1.0,)), 0.1, 0.3, grid_size=21)
        assert utility == pytest.approx(-0.01, abs=1e-9)

    def test_large_noise_approaches_babbling(self):
        prior = FiniteAtoms((0.2, 0.8), (0.5, 0.5))
        b = 0.1
        _, utility = grid_search_noisy(prior, b, sigma=10.0, grid_size=41)
        babbling = -float(
            np.asarray(prior.masses) @ (np.asarray(prior.support) + b - prior.mean()) ** 2
        )
        assert abs(utility - babbling) < 1e-3

    def test_size_guards(self):
        prior = FiniteAtoms((0.1, 0.5, 0.7, 0.9), (0.25, 0.25, 0.25, 0.25))
        with pytest.raises(SizeGuardError):
            grid_search_noisy(prior, 0.1, 0.2, grid_size=21)
        with pytest.raises(SizeGuardError):
            grid_search_noisy(FiniteAtoms((0.1, 0.9), (0.5, 0.5)), 0.1, 0.2, grid_size=301)

    def test_golden_instance_grid(self):
        prior = FiniteAtoms((0.8, 0.9), (0.5, 0.5))
        tup, _ = grid_search_noisy(prior, 0.03, 0.2, grid_size=201)
        assert abs(tup[0] - 0.2823) <= 0.005
        assert abs(tup[1] - 1.0) <= 0.005
