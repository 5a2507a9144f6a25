"""User-optimal one-dimensional equilibrium partitions.

Every 1-D equilibrium is an ordered partition of the support; with at most
N_max = floor(1 + (hi - lo) / (2b)) regions.  Interior cutpoints satisfy the
indifference system

    t_i = (Phi(t_{i-1}, t_i) + Phi(t_i, t_{i+1})) / 2 - b,

and among feasible partitions the user prefers the one minimizing the
expected within-region variance

    sum_i p(t_{i-1}, t_i) (Psi(t_{i-1}, t_i) - Phi(t_{i-1}, t_i)^2).

Finite priors: feasibility of adjacent blocks R, R' with boundary atoms
w_last <= (Phi(R) + Phi(R'))/2 - b <= w_first' replaces the equality, and the
optimum is an O(m^3) shortest-path dynamic program over contiguous blocks.

Continuous priors: for each candidate region count the cutpoint system is
solved by damped fixed-point iteration from the equispaced start, with a
multistart box-constrained least-squares fallback; candidates are accepted
only when the residual is below 1e-8 AND the cutpoints are strictly
increasing with gaps >= 2b - 1e-9 (the system alone admits non-monotone
numerical artifacts).  The returned partition minimizes the objective over
all accepted candidates rather than assuming the largest feasible count.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import ContractViolation, OutOfSupport, ZeroMassRegion
from .model import BlockPartition, FiniteAtoms, Partition1D, ScalarPrior, UniformInterval
from .stats import interval_stats_vector, region_stats

RESIDUAL_TOL = 1e-8
GAP_SLACK = 1e-9
FIXED_POINT_DAMPING = 0.5
FIXED_POINT_MAX_ITER = 10_000
MULTISTART_RESTARTS = 8
# Objectives closer than this are treated as tied; ties break toward more
# regions (finer partitions weakly dominate), then lexicographic boundaries.
TIE_TOL = 1e-12


def max_reports(lo: float, hi: float, b: float) -> int:
    """Upper bound on distinct equilibrium reports: floor(1 + (hi-lo)/(2b))."""
    if not b > 0.0:
        raise ContractViolation("bias must be > 0")
    if not hi > lo:
        raise ContractViolation("support must have positive length")
    return int(math.floor(1.0 + (hi - lo) / (2.0 * b)))


def solve_uniform_closed_form(b: float, prior: UniformInterval | None = None) -> Partition1D:
    """Closed-form user-optimal partition for a uniform prior.

    On [0, 1]: n* = max{n : 2 b n (n-1) < 1} and t_i = i/n* - 2b i (n* - i).
    A general interval maps to the unit case affinely (bias rescaled by the
    interval length).  n* = 1 is the babbling partition.
    """
    if not b > 0.0:
        raise ContractViolation("bias must be > 0")
    prior = prior or UniformInterval(0.0, 1.0)
    span = prior.hi - prior.lo
    b_unit = b / span
    n = 1
    while 2.0 * b_unit * (n + 1) * n < 1.0:
        n += 1
    i = np.arange(n + 1, dtype=float)
    t_unit = i / n - 2.0 * b_unit * i * (n - i)
    cutpoints = prior.lo + span * t_unit
    cutpoints[0], cutpoints[-1] = prior.lo, prior.hi
    responses = 0.5 * (cutpoints[:-1] + cutpoints[1:])
    p, mu, m2 = interval_stats_vector(prior, cutpoints)
    objective = float(p @ (m2 - mu * mu))
    return Partition1D(tuple(cutpoints), tuple(responses), objective)


# ---------------------------------------------------------------------------
# Finite priors: shortest-path dynamic program over contiguous blocks
# ---------------------------------------------------------------------------


def _pair_feasible(support: tuple[float, ...], left_mean: float, right_mean: float, j: int, b: float) -> bool:
    """Adjacent-block condition: w^(j) <= (Phi_L + Phi_R)/2 - b <= w^(j+1),
    with j the last atom index of the left block (0-based)."""
    threshold = 0.5 * (left_mean + right_mean) - b
    return support[j] <= threshold <= support[j + 1]


def solve_finite_dp(prior: FiniteAtoms, b: float) -> BlockPartition:
    """Exact user-optimal contiguous-block partition for a finite prior.

    Enumerates all contiguous blocks with prefix-sum statistics, links
    feasible adjacent pairs, and minimizes the summed within-block variance
    by a shortest-path pass; O(m^3).  The single-block (babbling) partition
    is always feasible so a result always exists.  Ties break toward more
    blocks, then the lexicographically smallest boundary vector.
    """
    if not b > 0.0:
        raise ContractViolation("bias must be > 0")
    m = prior.size
    stats = [[prior.range_stats(i, j) for j in range(i, m)] for i in range(m)]

    def cost(i: int, j: int) -> float:
        p, mu, m2 = stats[i][j - i]
        return p * (m2 - mu * mu)

    def mean(i: int, j: int) -> float:
        return stats[i][j - i][1]

    # best[(i, j)]: (cost, -n_blocks, boundaries) of the best partition of
    # atoms 0..j whose last block is [i..j]; boundaries are interior starts.
    best: dict[tuple[int, int], tuple[float, int, tuple[int, ...]]] = {}

    def better(a, bnd) -> bool:
        if a[0] < bnd[0] - TIE_TOL:
            return True
        if a[0] > bnd[0] + TIE_TOL:
            return False
        return a[1:] < bnd[1:]

    for j in range(m):
        for i in range(j, -1, -1):
            candidates = []
            if i == 0:
                candidates.append((cost(0, j), -1, ()))
            else:
                right_mean = mean(i, j)
                for i2 in range(i):
                    prev = best.get((i2, i - 1))
                    if prev is None:
                        continue
                    if _pair_feasible(prior.support, mean(i2, i - 1), right_mean, i - 1, b):
                        candidates.append(
                            (prev[0] + cost(i, j), prev[1] - 1, prev[2] + (i,))
                        )
            if not candidates:
                continue
            chosen = candidates[0]
            for c in candidates[1:]:
                if better(c, chosen):
                    chosen = c
            best[(i, j)] = chosen

    finals = [best[(i, m - 1)] for i in range(m) if (i, m - 1) in best]
    chosen = finals[0]
    for c in finals[1:]:
        if better(c, chosen):
            chosen = c

    boundaries = (0,) + chosen[2] + (m,)
    masses, means, second = [], [], []
    for lo_i, hi_i in zip(boundaries, boundaries[1:]):
        p, mu, m2 = prior.range_stats(lo_i, hi_i - 1)
        masses.append(p)
        means.append(mu)
        second.append(m2)
    objective = float(sum(p * (s - mu * mu) for p, mu, s in zip(masses, means, second)))
    return BlockPartition(
        support=prior.support,
        boundaries=boundaries,
        block_masses=tuple(masses),
        block_means=tuple(means),
        block_second_moments=tuple(second),
        objective=objective,
    )


# ---------------------------------------------------------------------------
# Continuous priors: cutpoint-system solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CutpointCandidate:
    partition: Partition1D
    n_regions: int
    max_residual: float


def _system_residual(prior: ScalarPrior, cutpoints: np.ndarray, b: float) -> np.ndarray:
    """Residuals of the indifference system on a full cutpoint vector."""
    _, mu, _ = interval_stats_vector(prior, cutpoints)
    return cutpoints[1:-1] - (0.5 * (mu[:-1] + mu[1:]) - b)


def _partition_from_cutpoints(prior: ScalarPrior, cutpoints: np.ndarray) -> Partition1D:
    p, mu, m2 = interval_stats_vector(prior, cutpoints)
    objective = float(p @ (m2 - mu * mu))
    return Partition1D(tuple(cutpoints), tuple(mu), objective)


def _try_accept(prior: ScalarPrior, cutpoints: np.ndarray, b: float) -> CutpointCandidate | None:
    gaps = np.diff(cutpoints)
    if np.any(gaps <= 0.0):
        return None
    # the gap above every interior cutpoint is >= 2b at any equilibrium
    if np.any(gaps[1:] < 2.0 * b - GAP_SLACK):
        return None
    try:
        res = _system_residual(prior, cutpoints, b)
    except ZeroMassRegion:
        return None
    max_res = float(np.abs(res).max()) if res.size else 0.0
    if max_res >= RESIDUAL_TOL:
        return None
    part = _partition_from_cutpoints(prior, cutpoints)
    return CutpointCandidate(part, cutpoints.size - 1, max_res)


def _fixed_point(prior: ScalarPrior, lo: float, hi: float, n: int, b: float) -> tuple[np.ndarray, bool]:
    """Damped iteration t_i <- (1-d) t_i + d [(Phi_i + Phi_{i+1})/2 - b].

    Iterates are kept sorted and clamped strictly inside (lo, hi).  Returns
    the final vector and whether the iteration converged.  Breaks out early
    when the update size stops shrinking (cycling on a system with no
    monotone solution), leaving the rest to the multistart fallback."""
    t = np.linspace(lo, hi, n + 1)
    eps = 1e-12 * (hi - lo)
    best_delta = np.inf
    stalled = 0
    for _ in range(FIXED_POINT_MAX_ITER):
        try:
            _, mu, _ = interval_stats_vector(prior, t)
        except ZeroMassRegion:
            return t, False
        target = 0.5 * (mu[:-1] + mu[1:]) - b
        new_interior = (1.0 - FIXED_POINT_DAMPING) * t[1:-1] + FIXED_POINT_DAMPING * target
        new_interior = np.clip(np.sort(new_interior), lo + eps, hi - eps)
        delta = float(np.abs(new_interior - t[1:-1]).max(initial=0.0))
        t[1:-1] = new_interior
        if delta < 1e-14 * max(1.0, hi - lo):
            return t, True
        if delta < 0.9 * best_delta:
            best_delta = delta
            stalled = 0
        else:
            stalled += 1
            if stalled > 300:
                return t, False
    return t, False


def _multistart(
    prior: ScalarPrior, lo: float, hi: float, n: int, b: float, rng: np.random.Generator
) -> list[np.ndarray]:
    """Box-constrained least-squares on the interior residuals, several starts."""
    span = hi - lo
    margin = 1e-9 * span
    q = n - 1

    def residual(interior: np.ndarray) -> np.ndarray:
        t = np.concatenate([[lo], np.sort(interior), [hi]])
        if np.any(np.diff(t) <= 0.0):
            return np.full(q, 1e3)
        try:
            return _system_residual(prior, t, b)
        except ZeroMassRegion:
            return np.full(q, 1e3)

    def jacobian(interior: np.ndarray) -> np.ndarray:
        # tridiagonal system: forward differences on 3 index-color groups
        base = residual(interior)
        J = np.zeros((q, q))
        step = 1e-8 * max(1.0, span)
        for color in range(min(3, q)):
            cols = np.arange(color, q, 3)
            bumped = interior.copy()
            bumped[cols] += step
            diff = (residual(bumped) - base) / step
            for c in cols:
                lo_row, hi_row = max(0, c - 1), min(q, c + 2)
                J[lo_row:hi_row, c] = diff[lo_row:hi_row]
        return J

    starts = [np.linspace(lo, hi, n + 1)[1:-1]]
    for _ in range(MULTISTART_RESTARTS - 1):
        starts.append(lo + span * np.sort(rng.uniform(0.0, 1.0, q)))

    out = []
    hopeless_strikes = 0
    for start in starts:
        try:
            fit = least_squares(
                residual,
                np.clip(start, lo + margin, hi - margin),
                bounds=(lo + margin, hi - margin),
                jac=jacobian,
                tr_solver="exact",
                xtol=1e-13,
                ftol=1e-13,
                gtol=1e-12,
                max_nfev=40,
            )
        except Exception:
            continue
        out.append(np.concatenate([[lo], np.sort(fit.x), [hi]]))
        # two starts stuck far from zero residual: the system has no
        # solution at this region count, stop burning the other restarts
        if float(np.abs(fit.fun).max(initial=0.0)) > 1e-3:
            hopeless_strikes += 1
            if hopeless_strikes >= 2:
                break
    return out


def continuous_equilibrium_candidates(
    prior: ScalarPrior, b: float, seed: int = 0
) -> list[CutpointCandidate]:
    """All accepted cutpoint-system solutions, one candidate per region count."""
    if isinstance(prior, FiniteAtoms):
        raise ContractViolation("finite priors use solve_finite_dp")
    if not b > 0.0:
        raise ContractViolation("bias must be > 0")
    lo, hi = prior.lower, prior.upper
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ContractViolation("continuous solver requires a bounded support")
    rng = np.random.default_rng(seed)
    accepted: list[CutpointCandidate] = []
    for n in range(max_reports(lo, hi, b), 0, -1):
        if n == 1:
            cand = _try_accept(prior, np.array([lo, hi]), b)
            if cand is not None:
                accepted.append(cand)
            continue
        t, _converged = _fixed_point(prior, lo, hi, n, b)
        cand = _try_accept(prior, t, b)
        if cand is None:
            for t2 in _multistart(prior, lo, hi, n, b, rng):
                cand = _try_accept(prior, t2, b)
                if cand is not None:
                    break
        if cand is not None:
            accepted.append(cand)
    return accepted


def solve_continuous_cutpoints(prior: ScalarPrior, b: float, seed: int = 0) -> Partition1D:
    """User-optimal partition for a continuous prior: the accepted candidate
    minimizing the expected within-region variance (ties toward more regions).
    The babbling partition is always accepted, so a result always exists."""
    candidates = continuous_equilibrium_candidates(prior, b, seed)
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.partition.objective < best.partition.objective - TIE_TOL or (
            abs(cand.partition.objective - best.partition.objective) <= TIE_TOL
            and cand.n_regions > best.n_regions
        ):
            best = cand
    return best.partition


# ---------------------------------------------------------------------------
# Report lookup
# ---------------------------------------------------------------------------


def lookup_report(partition: Partition1D | BlockPartition, w_star: float):
    """The region of the partition containing the parameter value.

    Boundary values go to the lower region per the half-open convention.
    Returns the interval (a, b) for a Partition1D, and the block index for a
    BlockPartition.
    """
    if isinstance(partition, Partition1D):
        t = partition.cutpoints
        if w_star < t[0] or w_star > t[-1]:
            raise OutOfSupport(f"{w_star} outside [{t[0]}, {t[-1]}]")
        i = bisect_left(t, w_star)
        i = max(1, min(i, len(t) - 1))
        return t[i - 1], t[i]
    support = partition.support
    if w_star < support[0] or w_star > support[-1]:
        raise OutOfSupport(f"{w_star} outside [{support[0]}, {support[-1]}]")
    block_tops = [support[hi_i] for _, hi_i in partition.blocks()]
    return min(bisect_left(block_tops, w_star), partition.n_blocks - 1)
