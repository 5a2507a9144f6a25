"""Unoptimized reference implementations used for testing only.

Everything here recomputes posterior statistics and utilities from scratch
(plain sums, dense trapezoid integration) and shares no code with the
production solvers: independence is the point of an oracle.  Hard size
guards fail loudly; Bell(10) partitions are fine, Bell(15) is not.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import SizeGuardError
from .model import FiniteAtoms

MAX_CONTIGUOUS_ATOMS = 10
MAX_SET_PARTITION_ATOMS = 6
MAX_GRID_ATOMS = 3
MAX_GRID_SIZE = 201


@dataclass(frozen=True)
class PartitionRecord:
    blocks: tuple[tuple[int, ...], ...]
    feasible: bool
    objective: float


def _contiguous_partitions(m: int):
    for mask in range(1 << (m - 1)):
        blocks = []
        start = 0
        for i in range(m - 1):
            if mask & (1 << i):
                blocks.append(tuple(range(start, i + 1)))
                start = i + 1
        blocks.append(tuple(range(start, m)))
        yield tuple(blocks)


def _set_partitions(m: int):
    # restricted growth strings
    def rec(i, labels, k):
        if i == m:
            blocks = [[] for _ in range(k)]
            for idx, lab in enumerate(labels):
                blocks[lab].append(idx)
            yield tuple(tuple(blk) for blk in blocks)
            return
        for lab in range(k + 1):
            labels.append(lab)
            yield from rec(i + 1, labels, max(k, lab + 1))
            labels.pop()

    yield from rec(0, [], 0)


def _region_mean(support, masses, atoms):
    total = sum(masses[i] for i in atoms)
    return sum(masses[i] * support[i] for i in atoms) / total


def _deviation_feasible(support, masses, blocks, b):
    """Every atom weakly prefers its own region's posterior mean."""
    means = [_region_mean(support, masses, blk) for blk in blocks]
    for k, blk in enumerate(blocks):
        for i in blk:
            ideal = support[i] + b
            own = (means[k] - ideal) ** 2
            for l in range(len(blocks)):
                if l != k and (means[l] - ideal) ** 2 < own:
                    return False
    return True


def _partition_objective(support, masses, blocks):
    total = 0.0
    for blk in blocks:
        p = sum(masses[i] for i in blk)
        mu = sum(masses[i] * support[i] for i in blk) / p
        m2 = sum(masses[i] * support[i] ** 2 for i in blk) / p
        total += p * (m2 - mu * mu)
    return total


def enumerate_all_partitions(
    prior: FiniteAtoms, b: float, contiguous_only: bool = True
) -> list[PartitionRecord]:
    """Every contiguous (or every set) partition of the atoms, with the exact
    no-deviation feasibility check and the expected within-region variance."""
    m = prior.size
    if contiguous_only:
        if m > MAX_CONTIGUOUS_ATOMS:
            raise SizeGuardError(f"contiguous enumeration capped at {MAX_CONTIGUOUS_ATOMS} atoms")
        generator = _contiguous_partitions(m)
    else:
        if m > MAX_SET_PARTITION_ATOMS:
            raise SizeGuardError(f"set-partition enumeration capped at {MAX_SET_PARTITION_ATOMS} atoms")
        generator = _set_partitions(m)
    support = list(prior.support)
    masses = list(prior.masses)
    out = []
    for blocks in generator:
        out.append(
            PartitionRecord(
                blocks=blocks,
                feasible=_deviation_feasible(support, masses, blocks, b),
                objective=_partition_objective(support, masses, blocks),
            )
        )
    return out


def best_feasible_contiguous(records: list[PartitionRecord]) -> PartitionRecord:
    """Minimal-objective feasible record under the production tie-break
    (more blocks first, then lexicographically smallest boundary vector)."""
    feasible = [r for r in records if r.feasible]

    def boundaries(rec: PartitionRecord) -> tuple[int, ...]:
        return tuple(blk[0] for blk in rec.blocks[1:])

    best = feasible[0]
    for rec in feasible[1:]:
        if rec.objective < best.objective - 1e-12:
            best = rec
        elif abs(rec.objective - best.objective) <= 1e-12:
            key = (-len(rec.blocks), boundaries(rec))
            best_key = (-len(best.blocks), boundaries(best))
            if key < best_key:
                best = rec
    return best


# ---------------------------------------------------------------------------
# Noisy grid search
# ---------------------------------------------------------------------------


def grid_search_noisy(
    prior: FiniteAtoms, b: float, sigma: float, grid_size: int, deviation_refine: int = 5
) -> tuple[tuple[float, ...], float]:
    """Exhaustive search over monotone grid tuples passing grid-restricted
    incentive compatibility; returns the utility-maximizing tuple.

    Deviations are checked on a refine-times finer grid, locally sharpened
    around each atom's best coarse response; with same-grid deviations the
    flat utility landscape admits tuples several steps away from the true
    equilibrium.
    """
    n = prior.size
    if n > MAX_GRID_ATOMS:
        raise SizeGuardError(f"grid search capped at {MAX_GRID_ATOMS} atoms")
    if grid_size > MAX_GRID_SIZE:
        raise SizeGuardError(f"grid size capped at {MAX_GRID_SIZE}")
    support = np.asarray(prior.support)
    masses = np.asarray(prior.masses)
    r_grid = np.linspace(0.0, 1.0, grid_size)
    step = r_grid[1] - r_grid[0] if grid_size > 1 else 1.0

    # dense trapezoid grid for the interpretation integral
    x = np.linspace(-8.0 * sigma, 1.0 + 8.0 * sigma, 4001)
    dx = x[1] - x[0]

    def kernel_for(centers: np.ndarray) -> np.ndarray:
        k = np.exp(-((x[None, :] - centers[:, None]) ** 2) / (2.0 * sigma**2))
        k /= np.sqrt(2.0 * np.pi) * sigma
        k *= dx
        k[:, 0] *= 0.5
        k[:, -1] *= 0.5
        return k

    kernel = kernel_for(r_grid)
    refine = max(1, deviation_refine)
    fine_grid = np.linspace(0.0, 1.0, (grid_size - 1) * refine + 1) if grid_size > 1 else r_grid
    fine_kernel = kernel_for(fine_grid)
    window = np.arange(-refine, refine + 1)

    combos = np.array(list(combinations_with_replacement(range(grid_size), n)), dtype=int)
    best_tuple: tuple[float, ...] | None = None
    best_utility = -np.inf
    batch = 512
    for start in range(0, combos.shape[0], batch):
        idx = combos[start : start + batch]  # (B, n)
        reports = r_grid[idx]
        like = np.exp(-((x[None, :, None] - reports[:, None, :]) ** 2) / (2.0 * sigma**2))
        weights = like * masses[None, None, :]
        phi = (weights @ support) / weights.sum(axis=2)  # (B, len(x))
        losses = -((support[None, :, None] + b - phi[:, None, :]) ** 2)  # (B, n, len(x))
        flat_losses = losses.reshape(-1, x.size)
        coarse = (flat_losses @ kernel.T).reshape(idx.shape[0], n, grid_size)
        assigned = np.take_along_axis(coarse, idx[:, :, None], axis=2)[:, :, 0]
        # sharpen each atom's best response on a refined window around the
        # coarse argmax (one coarse step each way)
        arg = coarse.argmax(axis=2).reshape(-1)
        fine_idx = np.clip(arg[:, None] * refine + window[None, :], 0, fine_grid.size - 1)
        local_best = np.empty(arg.size)
        for r0 in range(0, arg.size, 96):
            r1 = min(r0 + 96, arg.size)
            gathered = fine_kernel[fine_idx[r0:r1]]  # (rows, window, x)
            local_best[r0:r1] = np.einsum(
                "rx,rdx->rd", flat_losses[r0:r1], gathered
            ).max(axis=1)
        best_response = np.maximum(coarse.max(axis=2), local_best.reshape(-1, n))
        ic_ok = np.all(best_response <= assigned + 1e-12, axis=1)
        utilities = assigned @ masses
        for row in np.flatnonzero(ic_ok):
            if utilities[row] > best_utility:
                best_utility = float(utilities[row])
                best_tuple = tuple(float(r) for r in reports[row])
    assert best_tuple is not None  # constant tuples always pass grid IC
    return best_tuple, best_utility
