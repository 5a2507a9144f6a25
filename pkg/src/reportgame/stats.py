"""Statistics oracle: prior mass, posterior mean, and posterior second moment
of scalar regions, plus the noisy-report posterior and expected utilities.

Region convention: intervals are half-open (a, b], except that a region whose
left edge sits at (or below) the support's lower bound is closed there.  This
pins down boundary-atom assignment deterministically.

Noisy expectations.  Under additive Gaussian report noise with level sigma,
the learner's posterior mean given an interpretation x is

    Phi(x; M) = sum_i pi_i w_i G(x | M_i) / sum_i pi_i G(x | M_i),

computed with log-domain weights and max-subtraction (raw densities under- or
overflow once sigma drops to ~5e-3).  Its derivative has the covariance form

    Phi'(x; M) = Cov_q(w, M) / sigma^2,   q_i proportional to pi_i G(x | M_i),

which is what makes the posterior monotone in x for monotone tuples.

Expectations against G(. | r) are evaluated with a composite Gauss-Legendre
rule over [r - 8 sigma, r + 8 sigma]: base panels one noise-sigma wide, plus
graded refinement panels around each posterior transition narrower than the
noise scale.  Transitions sit at the pairwise likelihood crossovers

    c_ab = (M_a + M_b)/2 + sigma^2 log(pi_a / pi_b) / (M_b - M_a)

with width sigma^2 / (M_b - M_a).  A fixed Gauss-Hermite rule cannot resolve
these once they are narrower than its node spacing, so the composite rule is
used everywhere an expectation under report noise is needed.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ContractViolation, ZeroMassRegion
from .model import FiniteAtoms, ReportTuple, ScalarPrior, UniformInterval

# Default node budget: Gauss-Legendre points per quadrature panel.
DEFAULT_QUAD_NODES = 41
# Integration window half-width in noise standard deviations.
WINDOW_SIGMAS = 8.0
# Graded offsets (in feature widths) for refinement panels around a posterior
# transition; +/- 25 widths saturate the logistic tails below 1e-10.
_GRADE = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 13.0, 16.0, 20.0, 25.0])


@dataclass(frozen=True)
class RegionStats:
    """Prior mass, posterior mean, and posterior second moment of a region."""

    mass: float
    mean: float
    second_moment: float

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean * self.mean


def prior_bounds(prior: ScalarPrior) -> tuple[float, float]:
    return prior.lower, prior.upper


def prior_mean(prior: ScalarPrior) -> float:
    if isinstance(prior, (FiniteAtoms, UniformInterval)):
        return prior.mean()
    return prior.interval_stats(prior.lower, prior.upper)[1]


def region_stats(prior: ScalarPrior, a: float, b: float) -> RegionStats:
    """Statistics of the region (a, b] (closed at the support's lower bound)."""
    if not b > a:
        raise ZeroMassRegion(f"empty region ({a}, {b}]")
    if isinstance(prior, FiniteAtoms):
        support = prior.support
        i = 0 if a <= support[0] else bisect_right(support, a)
        j = bisect_right(support, b) - 1
        if j < i:
            raise ZeroMassRegion(f"region ({a}, {b}] contains no atoms")
        p, mu, m2 = prior.range_stats(i, j)
        return RegionStats(p, mu, m2)
    if isinstance(prior, UniformInterval):
        lo = max(a, prior.lo)
        hi = min(b, prior.hi)
        if not hi > lo:
            raise ZeroMassRegion(f"region ({a}, {b}] has zero mass under the uniform prior")
        mass = (hi - lo) / (prior.hi - prior.lo)
        mean = 0.5 * (lo + hi)
        m2 = (lo * lo + lo * hi + hi * hi) / 3.0
        return RegionStats(mass, mean, m2)
    p, mu, m2 = prior.interval_stats(max(a, prior.lower), min(b, prior.upper))
    if not p > 0.0:
        raise ZeroMassRegion(f"oracle reports zero mass on ({a}, {b}]")
    return RegionStats(float(p), float(mu), float(m2))


def interval_stats_vector(prior: ScalarPrior, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stats of consecutive regions (edges[i], edges[i+1]] in one shot.

    The first region is closed at its left edge.  Zero-mass cells raise.
    """
    edges = np.asarray(edges, dtype=float)
    if np.any(np.diff(edges) <= 0.0):
        raise ZeroMassRegion("interval edges must be strictly increasing")
    if isinstance(prior, FiniteAtoms):
        support = prior.support_array()
        idx = np.searchsorted(support, edges, side="right")
        idx[0] = np.searchsorted(support, edges[0], side="left")
        if np.any(np.diff(idx) <= 0):
            raise ZeroMassRegion("a partition cell contains no atoms")
        pre = prior._prefix
        p = pre[0, idx[1:]] - pre[0, idx[:-1]]
        s1 = pre[1, idx[1:]] - pre[1, idx[:-1]]
        s2 = pre[2, idx[1:]] - pre[2, idx[:-1]]
        return p, s1 / p, s2 / p
    if isinstance(prior, UniformInterval):
        lo = np.maximum(edges[:-1], prior.lo)
        hi = np.minimum(edges[1:], prior.hi)
        if np.any(hi <= lo):
            raise ZeroMassRegion("a partition cell has zero mass under the uniform prior")
        p = (hi - lo) / (prior.hi - prior.lo)
        mean = 0.5 * (lo + hi)
        m2 = (lo * lo + lo * hi + hi * hi) / 3.0
        return p, mean, m2
    stats = [region_stats(prior, a, b) for a, b in zip(edges[:-1], edges[1:])]
    return (
        np.array([s.mass for s in stats]),
        np.array([s.mean for s in stats]),
        np.array([s.second_moment for s in stats]),
    )


# ---------------------------------------------------------------------------
# Noisy-report machinery
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _posterior_weights(x: np.ndarray, masses: np.ndarray, reports: np.ndarray, sigma: float) -> np.ndarray:
    """Normalized posterior weights q_i(x) over atoms, shape x.shape + (n,)."""
    logw = np.log(masses) - (x[..., None] - reports) ** 2 / (2.0 * sigma * sigma)
    logw -= logw.max(axis=-1, keepdims=True)
    q = np.exp(logw)
    q /= q.sum(axis=-1, keepdims=True)
    return q


def posterior_mean_given_interpretation(
    x: np.ndarray, support: np.ndarray, masses: np.ndarray, reports: np.ndarray, sigma: float
) -> np.ndarray:
    q = _posterior_weights(np.asarray(x, dtype=float), masses, reports, sigma)
    return q @ support


def posterior_mean_and_slope(
    x: np.ndarray, support: np.ndarray, masses: np.ndarray, reports: np.ndarray, sigma: float
) -> tuple[np.ndarray, np.ndarray]:
    """Phi(x; M) and dPhi/dx = Cov_q(w, M) / sigma^2."""
    q = _posterior_weights(np.asarray(x, dtype=float), masses, reports, sigma)
    phi = q @ support
    e_m = q @ reports
    cov = (q * support) @ reports - phi * e_m
    return phi, cov / (sigma * sigma)


def noisy_posterior_mean(prior: FiniteAtoms, tup: ReportTuple, interpretation) -> float | np.ndarray:
    """Likelihood-weighted posterior mean of w given a noisy interpretation."""
    _check_tuple(prior, tup)
    out = posterior_mean_given_interpretation(
        np.asarray(interpretation, dtype=float),
        prior.support_array(),
        prior.mass_array(),
        tup.reports_array(),
        tup.sigma,
    )
    return float(out) if np.ndim(interpretation) == 0 else out


def _transition_features(masses: np.ndarray, reports: np.ndarray, sigma: float) -> list[tuple[float, float]]:
    """(center, width) of posterior transitions between distinct report groups.

    Crossovers dominated by an intermediate report group never surface in the
    posterior and are skipped.
    """
    uniq, inverse = np.unique(reports, return_inverse=True)
    if uniq.size < 2:
        return []
    gmass = np.zeros(uniq.size)
    np.add.at(gmass, inverse, masses)
    feats: list[tuple[float, float]] = []
    for a in range(uniq.size):
        for b in range(a + 1, uniq.size):
            gap = uniq[b] - uniq[a]
            if gap < 1e-12:
                continue
            width = sigma * sigma / gap
            center = 0.5 * (uniq[a] + uniq[b]) + sigma * sigma * np.log(gmass[a] / gmass[b]) / gap
            loglik = np.log(gmass) - (center - uniq) ** 2 / (2.0 * sigma * sigma)
            pair_ll = max(loglik[a], loglik[b])
            others = np.delete(loglik, [a, b])
            if others.size and others.max() > pair_ll + 2.0:
                continue
            feats.append((float(center), float(width)))
    return feats


def gaussian_window_nodes(
    masses: np.ndarray,
    reports: np.ndarray,
    sigma: float,
    lo: float,
    hi: float,
    order: int = DEFAULT_QUAD_NODES,
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for integrating f over [lo, hi] so that posterior
    transitions and the noise scale are both resolved.

    Returns (x, w) with  integral f = sum w_j f(x_j)  to near machine
    precision for integrands built from Phi and a Gaussian kernel.
    """
    breakpoints = [np.arange(lo, hi, sigma), np.array([hi])]
    for center, width in _transition_features(masses, reports, sigma):
        if width >= 0.5 * sigma:
            continue  # base panels already resolve it
        pts = np.concatenate([center - width * _GRADE[::-1], center + width * _GRADE[1:]])
        pts = pts[(pts > lo) & (pts < hi)]
        if pts.size:
            breakpoints.append(pts)
    edges = np.unique(np.concatenate(breakpoints))
    a, b = edges[:-1], edges[1:]
    keep = (b - a) > 1e-15
    a, b = a[keep], b[keep]
    gx, gw = _leggauss(max(2, order))
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * gx).ravel()
    weights = (half[:, None] * gw).ravel()
    return nodes, weights


def gauss_density(x: np.ndarray, center, sigma: float) -> np.ndarray:
    z = (x - center) / sigma
    return np.exp(-0.5 * z * z) / (np.sqrt(2.0 * np.pi) * sigma)


def _check_tuple(prior: FiniteAtoms, tup: ReportTuple) -> None:
    if tup.size != prior.size:
        raise ContractViolation(
            f"tuple length {tup.size} != prior support size {prior.size}"
        )


def expected_noisy_user_utility(
    prior: FiniteAtoms,
    tup: ReportTuple,
    atom_index: int,
    report: float,
    bias: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> float:
    """V_i(r; M): expected user utility when atom i deviates to report r while
    the learner interprets noise against the fixed tuple M."""
    _check_tuple(prior, tup)
    if not 0 <= atom_index < prior.size:
        raise ContractViolation("atom index out of range")
    support = prior.support_array()
    masses = prior.mass_array()
    reports = tup.reports_array()
    sigma = tup.sigma
    lo, hi = report - WINDOW_SIGMAS * sigma, report + WINDOW_SIGMAS * sigma
    x, w = gaussian_window_nodes(masses, reports, sigma, lo, hi, quad_nodes)
    phi = posterior_mean_given_interpretation(x, support, masses, reports, sigma)
    integrand = -((support[atom_index] + bias - phi) ** 2) * gauss_density(x, report, sigma)
    return float(w @ integrand)


def noisy_utility_curve(
    prior: FiniteAtoms,
    tup: ReportTuple,
    atom_index: int,
    report_grid: np.ndarray,
    bias: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    chunk: int = 256,
) -> np.ndarray:
    """V_i over a whole grid of deviation reports, sharing one global node set.

    The loss profile -(w_i + b - Phi(x))^2 is fixed by the tuple, so the grid
    sweep reduces to kernel products against precomputed nodes.
    """
    _check_tuple(prior, tup)
    grid = np.asarray(report_grid, dtype=float)
    support = prior.support_array()
    masses = prior.mass_array()
    reports = tup.reports_array()
    sigma = tup.sigma
    lo = float(grid.min()) - WINDOW_SIGMAS * sigma
    hi = float(grid.max()) + WINDOW_SIGMAS * sigma
    x, w = gaussian_window_nodes(masses, reports, sigma, lo, hi, quad_nodes)
    phi = posterior_mean_given_interpretation(x, support, masses, reports, sigma)
    weighted_loss = w * -((support[atom_index] + bias - phi) ** 2)
    out = np.empty(grid.size)
    for start in range(0, grid.size, chunk):
        r = grid[start : start + chunk]
        out[start : start + chunk] = gauss_density(x[None, :], r[:, None], sigma) @ weighted_loss
    return out


def utility_slope_arrays(
    support: np.ndarray,
    masses: np.ndarray,
    reports: np.ndarray,
    sigma: float,
    atom_index: int,
    report: float,
    bias: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> float:
    """dV_i/dr for raw arrays; reports need not be monotone (solver iterates)."""
    lo, hi = report - WINDOW_SIGMAS * sigma, report + WINDOW_SIGMAS * sigma
    x, w = gaussian_window_nodes(masses, reports, sigma, lo, hi, quad_nodes)
    phi, dphi = posterior_mean_and_slope(x, support, masses, reports, sigma)
    integrand = 2.0 * (support[atom_index] + bias - phi) * dphi * gauss_density(x, report, sigma)
    return float(w @ integrand)


def noisy_utility_slope(
    prior: FiniteAtoms,
    tup: ReportTuple,
    atom_index: int,
    report: float,
    bias: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> float:
    """dV_i/dr at a report, in the integration-by-parts form
    2 E[(w_i + b - Phi) Phi' | interpretation ~ N(report, sigma^2)]."""
    _check_tuple(prior, tup)
    return utility_slope_arrays(
        prior.support_array(),
        prior.mass_array(),
        tup.reports_array(),
        tup.sigma,
        atom_index,
        report,
        bias,
        quad_nodes,
    )
