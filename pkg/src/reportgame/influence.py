"""Influence detection: can any equilibrium move the learner at all?

A babbling equilibrium (uninformative reports, prior-mean response) always
exists.  Influence holds iff some equilibrium has two on-path reports with
different learner responses.  In one dimension with a continuous full-support
prior this reduces to a root of the cutoff residual

    g(b, t) = (Phi(lo, t] + Phi(t, hi]) / 2 - t - b,

found here by a sign-change grid scan plus bisection (g is continuous but not
necessarily smooth, so no Newton).  For the uniform prior on [0, 1] the root
is t = 1/2 - 2b, which exists iff b < 1/4: a constant-time test.

In higher dimensions there is no scalar cutoff equation; for priors that are
spherically symmetric about their mean, splitting along any direction
orthogonal to the bias yields an influential two-region equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DegeneratePrior
from .model import Bias, FiniteAtoms, ScalarPrior, VectorPrior
from .stats import region_stats

DETECT_GRID_POINTS = 1024
DETECT_RESIDUAL_TOL = 1e-10


def influence_cutoff_residual(prior: ScalarPrior, b: float, t: float) -> float:
    """g(b, t) built from two region-stat queries; roots are influential cutoffs."""
    lo, hi = prior.lower, prior.upper
    if not lo < t < hi:
        raise ContractViolation(f"cutoff {t} must lie strictly inside ({lo}, {hi})")
    phi_low = region_stats(prior, lo, t).mean
    phi_high = region_stats(prior, t, hi).mean
    return 0.5 * (phi_low + phi_high) - t - b


@dataclass(frozen=True)
class InfluenceResult:
    influential: bool
    cutoff: float | None
    roots: tuple[float, ...]
    # A non-influential (babbling) equilibrium exists in every setting.
    babbling_exists: bool = True


def detect_influence_1d(
    prior: ScalarPrior, b: float, grid_points: int = DETECT_GRID_POINTS
) -> InfluenceResult:
    """Decide influence for a continuous scalar prior and return the cutoffs.

    Scans g on an interior grid, bisects every bracketing pair down to
    |g| < 1e-10, and reports the smallest root as the canonical cutoff; all
    bracketed roots are returned for callers that want them.
    """
    if isinstance(prior, FiniteAtoms):
        raise ContractViolation(
            "detect_influence_1d expects a continuous prior; finite priors are decided "
            "by the block partition solver's feasibility search"
        )
    if not b > 0.0:
        raise ContractViolation("bias must be > 0")
    lo, hi = prior.lower, prior.upper
    span = hi - lo
    ts = lo + span * (np.arange(1, grid_points + 1) / (grid_points + 1))
    vals = np.array([influence_cutoff_residual(prior, b, t) for t in ts])

    roots: list[float] = []
    for t, v in zip(ts, vals):
        if abs(v) < DETECT_RESIDUAL_TOL:
            roots.append(float(t))
    for (t0, v0), (t1, v1) in zip(zip(ts, vals), zip(ts[1:], vals[1:])):
        if v0 == 0.0 or v1 == 0.0 or np.sign(v0) == np.sign(v1):
            continue
        a, c, fa = t0, t1, v0
        while c - a > 1e-15 * span:
            m = 0.5 * (a + c)
            fm = influence_cutoff_residual(prior, b, m)
            if abs(fm) < DETECT_RESIDUAL_TOL:
                a = c = m
                break
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                c = m
        roots.append(0.5 * (a + c))

    roots = sorted(set(roots))
    if not roots:
        return InfluenceResult(False, None, ())
    return InfluenceResult(True, roots[0], tuple(roots))


def detect_influence_uniform(b: float) -> bool:
    """Constant-time influence test for the uniform prior on [0, 1]: b < 1/4."""
    return b < 0.25


@dataclass(frozen=True, eq=False)
class SphericalSplit:
    """Two-halfspace influential equilibrium for a spherically symmetric prior."""

    normal: np.ndarray          # unit v orthogonal to the bias
    alpha: float                # response offset along v
    center: np.ndarray          # prior mean
    responses: tuple[np.ndarray, np.ndarray]  # (center + alpha v, center - alpha v)
    plus_atoms: tuple[int, ...]  # atom indices in the closed halfspace v.(w - mean) >= 0
    minus_atoms: tuple[int, ...]


def _orthogonal_direction(direction: np.ndarray) -> np.ndarray:
    """Gram-Schmidt of the first standard basis vector not parallel to the bias."""
    d = direction.size
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        v = e - (e @ direction) * direction
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm
    raise ContractViolation("could not build a direction orthogonal to the bias")


def spherical_split(prior: VectorPrior, bias: Bias) -> SphericalSplit:
    """Split the prior through its mean orthogonally to the bias.

    The caller asserts spherical symmetry about the mean; it is NOT verified
    here (that would be a distributional test).  Atoms on the separating
    hyperplane belong to the closed halfspace R+, but contribute half their
    mass to each side when estimating the response offset alpha, so the two
    responses keep the symmetric form mean +/- alpha v.  Requires alpha > 0.
    """
    if prior.dim < 2:
        raise ContractViolation("spherical split needs dimension >= 2")
    if bias.dim != prior.dim:
        raise ContractViolation("bias dimension must match the prior")
    center = prior.mean()
    v = _orthogonal_direction(bias.direction)
    proj = (prior.atoms - center) @ v
    tol = 1e-12 * max(1.0, float(np.abs(proj).max(initial=0.0)))
    plus = proj > tol
    minus = proj < -tol
    boundary = ~plus & ~minus

    weights_plus = prior.masses * (plus + 0.5 * boundary)
    weights_minus = prior.masses * (minus + 0.5 * boundary)
    if weights_plus.sum() <= 0.0 or weights_minus.sum() <= 0.0:
        raise DegeneratePrior("prior has no mass on one side of the splitting hyperplane")
    mean_plus = (weights_plus @ prior.atoms) / weights_plus.sum()
    mean_minus = (weights_minus @ prior.atoms) / weights_minus.sum()
    alpha = float(v @ (mean_plus - mean_minus)) / 2.0
    if alpha <= 0.0:
        raise DegeneratePrior("prior is degenerate along the split direction (alpha = 0)")

    plus_closed = proj >= -tol
    return SphericalSplit(
        normal=v,
        alpha=alpha,
        center=center,
        responses=(center + alpha * v, center - alpha * v),
        plus_atoms=tuple(int(i) for i in np.flatnonzero(plus_closed)),
        minus_atoms=tuple(int(i) for i in np.flatnonzero(~plus_closed)),
    )
