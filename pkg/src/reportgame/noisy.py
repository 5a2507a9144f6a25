"""User-optimal monotone equilibria under additive Gaussian report noise.

With a finite scalar prior and reports in [0, 1], any monotone influential
noisy equilibrium pools only at the endpoints:

    M_1 = ... = M_t = 0 < M_{t+1} < ... < M_{n-t'} < M_{n-t'+1} = ... = M_n = 1.

The solver enumerates the (t, t') patterns, generates candidates from the
first-order conditions z_i = dV_i/dr |_{r=M_i} = 0 on the interior chain
(with z <= 0 at the top of the lower pool and z >= 0 at the bottom of the
upper pool), and then verifies every candidate globally: each atom's best
continuous response over [0, 1] is located by a dense grid plus
golden-section refinement, and the candidate survives only if the maximum
unilateral gain stays within the acceptance threshold.  Among verified
influential tuples the one maximizing the prior-weighted expected utility
wins; if none survives, the constant all-zeros tuple (the uninfluential
equilibrium) is returned with verified=False.

Fixed-pattern systems need not have unique solutions, so scalar patterns are
additionally swept with a sign-change bracket scan that recovers every root,
and all candidates are kept and verified, not just the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import ContractViolation
from .lift import scalar_conflict_marginal
from .model import Bias, Certificate, CertificateWitness, FiniteAtoms, ReportTuple, VectorPrior
from .stats import (
    DEFAULT_QUAD_NODES,
    WINDOW_SIGMAS,
    gauss_density,
    gaussian_window_nodes,
    noisy_utility_slope,
    posterior_mean_given_interpretation,
    utility_slope_arrays,
)

DEFAULT_TOL_BR = 1e-4
DEFAULT_BR_GRID = 2001
GOLDEN_WIDTH = 1e-8
RANDOM_RESTARTS = 3
# generation-stage filters; global verification is the decisive gate
FOC_RESIDUAL_TOL = 1e-6
BOUNDARY_SLACK = 1e-8
CANDIDATE_DEDUP_TOL = 1e-7
SCAN_POINTS = 65


def foc_residual(
    prior: FiniteAtoms,
    tup: ReportTuple,
    atom_index: int,
    bias: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> float:
    """z_i(M): the slope of atom i's expected utility at its own report."""
    return noisy_utility_slope(prior, tup, atom_index, tup.reports[atom_index], bias, quad_nodes)


# ---------------------------------------------------------------------------
# Best-response search and certificates
# ---------------------------------------------------------------------------


class TupleEvaluator:
    """Shared quadrature context for one fixed tuple: per-atom utilities and
    best responses reuse a single feature-refined node set."""

    def __init__(
        self,
        prior: FiniteAtoms,
        tup: ReportTuple,
        bias: float,
        quad_nodes: int = DEFAULT_QUAD_NODES,
    ) -> None:
        self.prior = prior
        self.tup = tup
        self.bias = bias
        sigma = tup.sigma
        masses = prior.mass_array()
        reports = tup.reports_array()
        lo = -WINDOW_SIGMAS * sigma
        hi = 1.0 + WINDOW_SIGMAS * sigma
        self._x, w = gaussian_window_nodes(masses, reports, sigma, lo, hi, quad_nodes)
        phi = posterior_mean_given_interpretation(
            self._x, prior.support_array(), masses, reports, sigma
        )
        support = prior.support_array()
        # weights folded into the per-atom loss profiles
        self._weighted_loss = w * -((support[:, None] + bias - phi[None, :]) ** 2)
        self._sigma = sigma

    def value(self, atom_index: int, r: float) -> float:
        return float(self._weighted_loss[atom_index] @ gauss_density(self._x, r, self._sigma))

    def values_on_grid(self, atom_index: int, grid: np.ndarray, chunk: int = 256) -> np.ndarray:
        out = np.empty(grid.size)
        wl = self._weighted_loss[atom_index]
        for start in range(0, grid.size, chunk):
            r = grid[start : start + chunk]
            out[start : start + chunk] = gauss_density(self._x[None, :], r[:, None], self._sigma) @ wl
        return out

    def best_response(self, atom_index: int, grid_points: int) -> tuple[float, float, float]:
        """(best report, best value, gain over the assigned report)."""
        grid = np.linspace(0.0, 1.0, grid_points)
        vals = self.values_on_grid(atom_index, grid)
        k = int(np.argmax(vals))
        a = grid[max(0, k - 1)]
        b = grid[min(grid_points - 1, k + 1)]
        r_star, v_star = _golden_max(lambda r: self.value(atom_index, r), a, b)
        if vals[k] > v_star:
            r_star, v_star = float(grid[k]), float(vals[k])
        own = self.value(atom_index, self.tup.reports[atom_index])
        return r_star, v_star, v_star - own

    def expected_utility(self) -> float:
        masses = self.prior.mass_array()
        return float(
            sum(m * self.value(i, r) for i, (m, r) in enumerate(zip(masses, self.tup.reports)))
        )


def _golden_max(f, a: float, b: float) -> tuple[float, float]:
    """Golden-section maximization to bracket width GOLDEN_WIDTH."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > GOLDEN_WIDTH:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def epsilon_br(
    prior: FiniteAtoms,
    tup: ReportTuple,
    bias: float,
    grid_points: int = DEFAULT_BR_GRID,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> Certificate:
    """Max best-response gain over atoms and continuous deviations in [0, 1]."""
    ev = TupleEvaluator(prior, tup, bias, quad_nodes)
    best = 0.0
    witness: CertificateWitness | None = None
    for i in range(prior.size):
        r_star, _, gain = ev.best_response(i, grid_points)
        if gain > best:
            best = float(gain)
            witness = CertificateWitness(atom_index=i, target=float(r_star), gain=float(gain))
    return Certificate(kind="epsilon_br", value=max(best, 0.0), witness=witness)


# ---------------------------------------------------------------------------
# Pattern solving
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VerifiedCandidate:
    tup: ReportTuple
    pattern: tuple[int, int]
    utility: float
    br_gain: float


@dataclass(frozen=True, eq=False)
class NoisySolveResult:
    tup: ReportTuple
    verified: bool
    influential: bool
    br_violation: Certificate
    candidates_examined: int
    pattern: tuple[int, int]
    verified_candidates: tuple[VerifiedCandidate, ...]


def _full_reports(t: int, tp: int, n: int, interior: np.ndarray) -> np.ndarray:
    return np.concatenate([np.zeros(t), interior, np.ones(tp)])


def _interior_valid(interior: np.ndarray) -> bool:
    if interior.size == 0:
        return True
    if np.any(interior <= 0.0) or np.any(interior >= 1.0):
        return False
    return bool(np.all(np.diff(interior) > 1e-10))


def _pattern_candidates(
    prior: FiniteAtoms,
    b: float,
    sigma: float,
    t: int,
    tp: int,
    rng: np.random.Generator,
    restarts: int,
    quad_nodes: int,
) -> list[np.ndarray]:
    """Interior report vectors satisfying the first-order system for (t, t')."""
    n = prior.size
    q = n - t - tp
    if q == 0:
        return [np.empty(0)]
    interior_atoms = list(range(t, n - tp))
    support = prior.support_array()
    masses = prior.mass_array()

    def residuals(interior: np.ndarray) -> np.ndarray:
        reports = _full_reports(t, tp, n, np.clip(interior, 1e-12, 1.0 - 1e-12))
        return np.array(
            [
                utility_slope_arrays(
                    support, masses, reports, sigma, i, float(reports[i]), b, quad_nodes
                )
                for i in interior_atoms
            ]
        )

    found: list[np.ndarray] = []

    def push(interior: np.ndarray) -> None:
        if not _interior_valid(interior):
            return
        if np.abs(residuals(interior)).max() >= FOC_RESIDUAL_TOL:
            return
        for other in found:
            if np.abs(other - interior).max() < CANDIDATE_DEDUP_TOL:
                return
        found.append(interior.copy())

    if q == 1:
        # every sign change of the scalar system, bracketed then bisected;
        # numerically-zero stretches (nearly noiseless regimes, where the
        # slope underflows over wide report ranges) are plateaus of
        # equivalent equilibria, represented by a single candidate each
        grid = np.linspace(1e-6, 1.0 - 1e-6, SCAN_POINTS)
        vals = np.array([residuals(np.array([g]))[0] for g in grid])
        floor = 1e-9 * float(np.abs(vals).max(initial=0.0))
        in_plateau = False
        for a, c, fa, fc in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if abs(fa) <= floor and abs(fc) <= floor:
                if not in_plateau:
                    push(np.array([a]))
                    in_plateau = True
                continue
            in_plateau = False
            if fa == 0.0:
                push(np.array([a]))
            elif np.sign(fa) != np.sign(fc) and fc != 0.0:
                root = brentq(lambda m: residuals(np.array([m]))[0], a, c, xtol=1e-12)
                push(np.array([root]))

    margin = 1e-9
    starts = [np.linspace(0.0, 1.0, q + 2)[1:-1]]
    for _ in range(restarts):
        starts.append(np.sort(rng.uniform(0.0, 1.0, q)))
    for start in starts:
        try:
            fit = least_squares(
                residuals,
                np.clip(start, margin, 1.0 - margin),
                bounds=(margin, 1.0 - margin),
                xtol=1e-14,
                ftol=1e-14,
                gtol=1e-14,
            )
        except Exception:
            continue
        push(np.asarray(fit.x))
    return found


def solve_noisy_1d(
    prior: FiniteAtoms,
    b: float,
    sigma: float,
    tol_br: float = DEFAULT_TOL_BR,
    seed: int = 0,
    restarts: int = RANDOM_RESTARTS,
    grid_points: int = DEFAULT_BR_GRID,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> NoisySolveResult:
    """User-optimal monotone noisy equilibrium over a finite prior on [0, 1].

    Returns the verified influential tuple maximizing the expected user
    utility, or the constant all-zeros tuple when no influential candidate
    survives verification (verified=False in that case; a single-atom prior
    has no influential strategy at all and its constant tuple is trivially
    verified).

    Acceptance is by the best-response threshold, so on knife-edge instances
    without an exact influential equilibrium the solver can return a
    near-pooled tuple: such tuples are genuine epsilon-equilibria whose gains
    vanish as the reports merge, and they weakly dominate babbling in
    expected utility.  The pattern metadata and the report spread expose
    them to callers.
    """
    if not (b > 0.0 and sigma > 0.0):
        raise ContractViolation("solve_noisy_1d requires b > 0 and sigma > 0")
    if prior.lower < 0.0 or prior.upper > 1.0:
        raise ContractViolation(
            "support must lie within [0, 1]; rescale affinely (see solve_noisy_lifted)"
        )
    n = prior.size
    rng = np.random.default_rng(seed)

    if n == 1:
        tup = ReportTuple((0.0,), sigma)
        cert = epsilon_br(prior, tup, b, grid_points, quad_nodes)
        ev = TupleEvaluator(prior, tup, b, quad_nodes)
        tup = ReportTuple((0.0,), sigma, expected_user_utility=ev.expected_utility())
        return NoisySolveResult(
            tup=tup,
            verified=True,
            influential=False,
            br_violation=cert,
            candidates_examined=0,
            pattern=(1, 0),
            verified_candidates=(),
        )

    examined = 0
    verified: list[VerifiedCandidate] = []
    for t in range(n + 1):
        for tp in range(n - t + 1):
            if t + tp == n and (t == 0 or tp == 0):
                continue  # constant tuples are the fallback, not candidates
            for interior in _pattern_candidates(prior, b, sigma, t, tp, rng, restarts, quad_nodes):
                reports = _full_reports(t, tp, n, interior)
                tup = ReportTuple(tuple(reports), sigma)
                if not tup.is_influential:
                    continue
                # necessary pool conditions from the one-sided first order logic
                if t >= 1:
                    if foc_residual(prior, tup, t - 1, b, quad_nodes) > BOUNDARY_SLACK:
                        continue
                if tp >= 1:
                    if foc_residual(prior, tup, n - tp, b, quad_nodes) < -BOUNDARY_SLACK:
                        continue
                examined += 1
                ev = TupleEvaluator(prior, tup, b, quad_nodes)
                worst = 0.0
                for i in range(n):
                    _, _, gain = ev.best_response(i, grid_points)
                    worst = max(worst, gain)
                    if worst > tol_br:
                        break
                if worst <= tol_br:
                    utility = ev.expected_utility()
                    verified.append(
                        VerifiedCandidate(
                            tup=ReportTuple(tuple(reports), sigma, expected_user_utility=utility),
                            pattern=(t, tp),
                            utility=utility,
                            br_gain=worst,
                        )
                    )

    if verified:
        best = verified[0]
        for cand in verified[1:]:
            if cand.utility > best.utility + 1e-15 or (
                abs(cand.utility - best.utility) <= 1e-15 and cand.tup.reports < best.tup.reports
            ):
                best = cand
        cert = epsilon_br(prior, best.tup, b, grid_points, quad_nodes)
        return NoisySolveResult(
            tup=best.tup,
            verified=True,
            influential=True,
            br_violation=cert,
            candidates_examined=examined,
            pattern=best.pattern,
            verified_candidates=tuple(verified),
        )

    fallback = ReportTuple(tuple([0.0] * n), sigma)
    ev = TupleEvaluator(prior, fallback, b, quad_nodes)
    fallback = ReportTuple(tuple([0.0] * n), sigma, expected_user_utility=ev.expected_utility())
    cert = epsilon_br(prior, fallback, b, grid_points, quad_nodes)
    return NoisySolveResult(
        tup=fallback,
        verified=False,
        influential=False,
        br_violation=cert,
        candidates_examined=examined,
        pattern=(n, 0),
        verified_candidates=(),
    )


def solve_binary_closed_form(
    w1: float, w2: float, pi2: float, sigma: float
) -> ReportTuple | None:
    """Closed-form influential candidate for a two-point prior with the
    midpoint bias b = (w2 - w1) / 2.

    None when pi2 <= 1/2 (no influential equilibrium exists).  Otherwise the
    lower atom reports max{0, 1 - sigma sqrt(2 log(pi2 / (1 - pi2)))} and the
    upper atom reports 1.  Reports already live in the canonical [0, 1]
    report space: the affine support normalization used to derive the formula
    rescales parameters and bias only, leaving reports unchanged.
    """
    if not w1 < w2:
        raise ContractViolation("requires w1 < w2")
    if not 0.0 < pi2 < 1.0:
        raise ContractViolation("pi2 must be in (0, 1)")
    if not sigma > 0.0:
        raise ContractViolation("sigma must be > 0")
    if pi2 <= 0.5:
        return None
    m1 = max(0.0, 1.0 - sigma * math.sqrt(2.0 * math.log(pi2 / (1.0 - pi2))))
    prior = FiniteAtoms((w1, w2), (1.0 - pi2, pi2))
    b = 0.5 * (w2 - w1)
    tup = ReportTuple((m1, 1.0), sigma)
    ev = TupleEvaluator(prior, tup, b)
    return ReportTuple((m1, 1.0), sigma, expected_user_utility=ev.expected_utility())


@dataclass(frozen=True, eq=False)
class NoisyLiftedResult:
    """Noisy scalar solution along the conflict direction plus the lift rule:
    the atom with conflict projection s^(i) reports M_i * b_hat + z."""

    scalar: NoisySolveResult
    direction: np.ndarray
    marginal: FiniteAtoms  # original-scale conflict projections
    atom_to_scalar: tuple[int, ...]
    offset: float
    scale: float  # theta = (s - offset) / scale mapped the support into [0, 1]

    @property
    def br_violation_original_units(self) -> float:
        return self.scalar.br_violation.value * self.scale * self.scale

    def report_for_atom(self, scalar_index: int) -> float:
        return self.scalar.tup.reports[scalar_index]


def solve_noisy_lifted(
    prior: VectorPrior,
    bias: Bias | float | np.ndarray,
    sigma: float,
    tol_br: float = DEFAULT_TOL_BR,
    seed: int = 0,
    restarts: int = RANDOM_RESTARTS,
    grid_points: int = DEFAULT_BR_GRID,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> NoisyLiftedResult:
    """Noisy equilibrium for a finite vector prior: noise acts only along the
    conflict coordinate, the agreement component is revealed exactly.

    The conflict-projection support is mapped affinely into [0, 1] when it
    extends outside (bias rescaled by the same factor; reports and sigma are
    already in report space and do not transform); utilities in original
    units carry the factor scale^2.
    """
    b = Bias.of(bias)
    if b.dim != prior.dim:
        raise ContractViolation("bias dimension must match the prior")
    marginal, atom_to_scalar = scalar_conflict_marginal(prior, b)

    offset, scale = 0.0, 1.0
    support = marginal.support_array()
    if marginal.size > 1 and (marginal.lower < 0.0 or marginal.upper > 1.0):
        offset = marginal.lower
        scale = marginal.upper - marginal.lower
    elif marginal.size == 1 and not 0.0 <= marginal.lower <= 1.0:
        # single projection value: any constant tuple is equivalent
        offset, scale = marginal.lower, 1.0
    theta = FiniteAtoms(tuple((support - offset) / scale), marginal.masses)
    beta = b.magnitude / scale

    result = solve_noisy_1d(
        theta, beta, sigma, tol_br=tol_br, seed=seed, restarts=restarts,
        grid_points=grid_points, quad_nodes=quad_nodes,
    )
    return NoisyLiftedResult(
        scalar=result,
        direction=b.direction,
        marginal=marginal,
        atom_to_scalar=tuple(int(x) for x in atom_to_scalar),
        offset=offset,
        scale=scale,
    )
