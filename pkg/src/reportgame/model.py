"""Game primitives: priors over the learner-optimal parameter, the conflict
bias, partitions, report tuples, certificates, and the quadratic utilities.

The private information is the learner-optimal parameter w (scalar or
vector).  The learner deploys some parameter x; utilities are

    learner:  -||x - w||^2
    user:     -||x - (w + b)||^2

so the user's ideal point is shifted by the bias b.  Everything downstream
(influence detection, partition equilibria, noisy tuples) is built on these
three primitives plus the prior over w.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence, Union, runtime_checkable

import numpy as np

from .errors import ContractViolation, PriorValidationError

# Mass bookkeeping: a mass vector must sum to 1 within MASS_SUM_TOL to be
# accepted verbatim; drift up to MASS_RENORM_TOL (file round-trip noise) is
# silently renormalized; anything larger is an input error.
MASS_SUM_TOL = 1e-12
MASS_RENORM_TOL = 1e-9


def _validated_masses(masses: np.ndarray, context: str) -> np.ndarray:
    if np.any(masses <= 0.0):
        raise PriorValidationError(f"{context}: masses must be strictly positive")
    total = float(masses.sum())
    if abs(total - 1.0) <= MASS_SUM_TOL:
        return masses
    if abs(total - 1.0) <= MASS_RENORM_TOL:
        return masses / total
    raise PriorValidationError(
        f"{context}: masses sum to {total!r}, outside the {MASS_RENORM_TOL} tolerance"
    )


@dataclass(frozen=True)
class FiniteAtoms:
    """Finite-support scalar prior: atoms w^(1) < ... < w^(m) with masses.

    Duplicate support points are merged on construction (their masses are
    aggregated) so posterior formulas stay well defined.
    """

    support: tuple[float, ...]
    masses: tuple[float, ...]
    _prefix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        w = np.asarray(self.support, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        if w.ndim != 1 or m.shape != w.shape or w.size == 0:
            raise PriorValidationError("FiniteAtoms: support and masses must be equal-length 1-D")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(m)):
            raise PriorValidationError("FiniteAtoms: non-finite entries")
        order = np.argsort(w, kind="stable")
        w, m = w[order], m[order]
        uniq, inverse = np.unique(w, return_inverse=True)
        if uniq.size != w.size:
            merged = np.zeros(uniq.size)
            np.add.at(merged, inverse, m)
            w, m = uniq, merged
        m = _validated_masses(m, "FiniteAtoms")
        object.__setattr__(self, "support", tuple(float(x) for x in w))
        object.__setattr__(self, "masses", tuple(float(x) for x in m))
        # prefix sums of (mass, mass*w, mass*w^2) for O(1) contiguous queries
        arr = np.vstack([m, m * w, m * w * w])
        prefix = np.zeros((3, w.size + 1))
        np.cumsum(arr, axis=1, out=prefix[:, 1:])
        prefix.setflags(write=False)
        object.__setattr__(self, "_prefix", prefix)

    @property
    def size(self) -> int:
        return len(self.support)

    @property
    def lower(self) -> float:
        return self.support[0]

    @property
    def upper(self) -> float:
        return self.support[-1]

    def support_array(self) -> np.ndarray:
        return np.asarray(self.support, dtype=float)

    def mass_array(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=float)

    def range_stats(self, i: int, j: int) -> tuple[float, float, float]:
        """(mass, mean, second moment) of atoms i..j inclusive, O(1)."""
        if not 0 <= i <= j < self.size:
            raise ContractViolation(f"atom range [{i}, {j}] out of bounds")
        p = self._prefix[0, j + 1] - self._prefix[0, i]
        s1 = self._prefix[1, j + 1] - self._prefix[1, i]
        s2 = self._prefix[2, j + 1] - self._prefix[2, i]
        return float(p), float(s1 / p), float(s2 / p)

    def mean(self) -> float:
        return self.range_stats(0, self.size - 1)[1]

    def second_moment(self) -> float:
        return self.range_stats(0, self.size - 1)[2]

    def variance(self) -> float:
        _, mu, m2 = self.range_stats(0, self.size - 1)
        return m2 - mu * mu


@dataclass(frozen=True)
class UniformInterval:
    """Continuous uniform prior on [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise PriorValidationError("UniformInterval: bounds must be finite")
        if not self.hi - self.lo > 0.0:
            raise PriorValidationError("UniformInterval: requires hi - lo > 0")

    @property
    def lower(self) -> float:
        return self.lo

    @property
    def upper(self) -> float:
        return self.hi

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def variance(self) -> float:
        return (self.hi - self.lo) ** 2 / 12.0


@runtime_checkable
class DensityOracle(Protocol):
    """External statistics provider for a continuous scalar prior.

    The provider owns accuracy: it must answer (mass, mean, second moment)
    for intervals of its bounded support.  The library never differentiates
    the oracle, only evaluates it.
    """

    lower: float
    upper: float

    def interval_stats(self, a: float, b: float) -> tuple[float, float, float]:
        """Prior mass, conditional mean, conditional second moment of (a, b]."""
        ...


ScalarPrior = Union[FiniteAtoms, UniformInterval, DensityOracle]


def is_continuous_prior(prior: ScalarPrior) -> bool:
    return not isinstance(prior, FiniteAtoms)


@dataclass(frozen=True, eq=False)
class VectorPrior:
    """Finite-support prior over vectors in R^d; duplicate atoms merged."""

    atoms: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        m = np.asarray(self.masses, dtype=float).ravel()
        if a.ndim != 2 or a.shape[0] != m.size or a.size == 0:
            raise PriorValidationError("VectorPrior: atoms must be (n, d) with n masses")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(m)):
            raise PriorValidationError("VectorPrior: non-finite entries")
        uniq, inverse = np.unique(a, axis=0, return_inverse=True)
        if uniq.shape[0] != a.shape[0]:
            merged = np.zeros(uniq.shape[0])
            np.add.at(merged, inverse.ravel(), m)
            a, m = uniq, merged
        m = _validated_masses(m, "VectorPrior")
        a = a.copy()
        a.setflags(write=False)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "masses", m)

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mean(self) -> np.ndarray:
        return self.masses @ self.atoms


@dataclass(frozen=True, eq=False)
class Bias:
    """Conflict bias b: the shift between the user's and learner's ideal points."""

    vector: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vector, dtype=float).ravel()
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ContractViolation("Bias: vector must be finite and nonempty")
        if not np.linalg.norm(v) > 0.0:
            raise ContractViolation("Bias: magnitude must be strictly positive")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @classmethod
    def of(cls, b: "Bias | float | Sequence[float] | np.ndarray") -> "Bias":
        if isinstance(b, Bias):
            return b
        if np.isscalar(b):
            return cls(np.array([float(b)]))
        return cls(np.asarray(b, dtype=float))

    @classmethod
    def random_direction(cls, dim: int, magnitude: float, seed: int) -> "Bias":
        """Bias of given magnitude along a seeded random unit direction."""
        if magnitude <= 0.0:
            raise ContractViolation("Bias: magnitude must be strictly positive")
        rng = np.random.default_rng(seed)
        g = rng.standard_normal(dim)
        while np.linalg.norm(g) == 0.0:
            g = rng.standard_normal(dim)
        return cls(magnitude * g / np.linalg.norm(g))

    @property
    def dim(self) -> int:
        return self.vector.size

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.vector))

    @property
    def direction(self) -> np.ndarray:
        return self.vector / self.magnitude


def _as_point(x) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ContractViolation("points must be scalars or 1-D vectors")
    return arr


def user_utility(w_star, bias, deployed) -> float:
    """-||deployed - (w_star + b)||^2, the user's quadratic utility."""
    w = _as_point(w_star)
    x = _as_point(deployed)
    b = Bias.of(bias).vector
    if w.shape != x.shape or w.shape != b.shape:
        raise ContractViolation(
            f"dimension mismatch: w {w.shape}, bias {b.shape}, deployed {x.shape}"
        )
    d = x - (w + b)
    return float(-(d @ d))


def learner_utility(w_star, deployed) -> float:
    """-||deployed - w_star||^2, the learner's quadratic utility."""
    w = _as_point(w_star)
    x = _as_point(deployed)
    if w.shape != x.shape:
        raise ContractViolation(f"dimension mismatch: w {w.shape}, deployed {x.shape}")
    d = x - w
    return float(-(d @ d))


def non_strategic_response(prior) -> float | np.ndarray:
    """The prior mean: the quadratic best response to an ignored report."""
    if isinstance(prior, VectorPrior):
        return prior.mean()
    if isinstance(prior, (FiniteAtoms, UniformInterval)):
        return prior.mean()
    stats = prior.interval_stats(prior.lower, prior.upper)
    return float(stats[1])


@dataclass(frozen=True, eq=False)
class Partition1D:
    """Ordered equilibrium partition lo = t_0 < ... < t_n = hi of a continuous
    scalar prior, with the learner's posterior-mean response on each interval
    and the expected within-interval variance as objective."""

    cutpoints: tuple[float, ...]
    responses: tuple[float, ...]
    objective: float

    def __post_init__(self) -> None:
        t = np.asarray(self.cutpoints, dtype=float)
        r = np.asarray(self.responses, dtype=float)
        if t.size < 2 or r.size != t.size - 1:
            raise ContractViolation("Partition1D: need n+1 cutpoints and n responses")
        if not np.all(np.diff(t) > 0.0):
            raise ContractViolation("Partition1D: cutpoints must be strictly increasing")
        if r.size > 1 and not np.all(np.diff(r) > 0.0):
            raise ContractViolation("Partition1D: responses must be strictly increasing")
        object.__setattr__(self, "cutpoints", tuple(float(x) for x in t))
        object.__setattr__(self, "responses", tuple(float(x) for x in r))

    @property
    def n_regions(self) -> int:
        return len(self.responses)

    @property
    def lower(self) -> float:
        return self.cutpoints[0]

    @property
    def upper(self) -> float:
        return self.cutpoints[-1]

    def interval(self, i: int) -> tuple[float, float]:
        return self.cutpoints[i], self.cutpoints[i + 1]

    @property
    def is_babbling(self) -> bool:
        return self.n_regions == 1


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Partition of an ordered finite support into contiguous blocks.

    boundaries = (0, t_1, ..., t_k = m): block i covers atoms
    [boundaries[i], boundaries[i+1]) in 0-based index terms.
    """

    support: tuple[float, ...]
    boundaries: tuple[int, ...]
    block_masses: tuple[float, ...]
    block_means: tuple[float, ...]
    block_second_moments: tuple[float, ...]
    objective: float

    def __post_init__(self) -> None:
        b = self.boundaries
        m = len(self.support)
        if b[0] != 0 or b[-1] != m or any(y <= x for x, y in zip(b, b[1:])):
            raise ContractViolation("BlockPartition: boundaries must cover all atoms exactly once")
        k = len(b) - 1
        if not (len(self.block_masses) == len(self.block_means) == len(self.block_second_moments) == k):
            raise ContractViolation("BlockPartition: per-block stats must match block count")
        means = self.block_means
        if any(y <= x for x, y in zip(means, means[1:])):
            raise ContractViolation("BlockPartition: block means must be strictly increasing")

    @property
    def n_blocks(self) -> int:
        return len(self.boundaries) - 1

    @property
    def responses(self) -> tuple[float, ...]:
        return self.block_means

    def blocks(self) -> list[tuple[int, int]]:
        """Inclusive atom index ranges (i, j) per block."""
        b = self.boundaries
        return [(b[i], b[i + 1] - 1) for i in range(self.n_blocks)]

    def block_of_atom(self, atom_index: int) -> int:
        for i, (lo, hi) in enumerate(self.blocks()):
            if lo <= atom_index <= hi:
                return i
        raise ContractViolation(f"atom index {atom_index} outside support")

    @property
    def is_babbling(self) -> bool:
        return self.n_blocks == 1


@dataclass(frozen=True, eq=False)
class ReportTuple:
    """Per-atom numeric reports M_1 <= ... <= M_n in [0, 1] for the noisy game.

    Construction validates monotonicity and the report box only; the
    endpoint-pooling structure of influential equilibria (pools only at 0 or
    1, strictly increasing interior chain) is asserted on solver outputs via
    :meth:`has_endpoint_pooling_structure`, since non-equilibrium tuples are
    legitimate inputs to evaluation routines.
    """

    reports: tuple[float, ...]
    sigma: float
    expected_user_utility: float | None = None

    def __post_init__(self) -> None:
        r = np.asarray(self.reports, dtype=float)
        if r.size == 0:
            raise ContractViolation("ReportTuple: needs at least one report")
        if np.any(r < 0.0) or np.any(r > 1.0):
            raise ContractViolation("ReportTuple: reports must lie in [0, 1]")
        if np.any(np.diff(r) < 0.0):
            raise ContractViolation("ReportTuple: reports must be monotone non-decreasing")
        if not self.sigma > 0.0:
            raise ContractViolation("ReportTuple: sigma must be > 0")
        object.__setattr__(self, "reports", tuple(float(x) for x in r))

    @property
    def size(self) -> int:
        return len(self.reports)

    @property
    def pattern(self) -> tuple[int, int]:
        """(count pinned at 0, count pinned at 1)."""
        t = sum(1 for r in self.reports if r == 0.0)
        tp = sum(1 for r in self.reports if r == 1.0)
        return t, tp

    @property
    def is_influential(self) -> bool:
        return self.reports[0] < self.reports[-1]

    def has_endpoint_pooling_structure(self) -> bool:
        """True iff any pooling happens only at 0 or 1 and the interior chain
        is strictly increasing inside (0, 1)."""
        t, tp = self.pattern
        interior = self.reports[t : self.size - tp]
        if any(not 0.0 < r < 1.0 for r in interior):
            return False
        return all(y > x for x, y in zip(interior, interior[1:]))

    def reports_array(self) -> np.ndarray:
        return np.asarray(self.reports, dtype=float)


@dataclass(frozen=True)
class CertificateWitness:
    """The deviation achieving the certified maximum gain."""

    atom_index: int
    target: float | int  # alternative region index (IC) or report value (BR)
    gain: float


@dataclass(frozen=True)
class Certificate:
    """epsilon_IC / epsilon_BR certificate: the largest positive deviation
    gain over the checked set, with its witness.  value == 0 certifies an
    exact equilibrium on that set."""

    kind: str  # "epsilon_ic" | "epsilon_br"
    value: float
    witness: CertificateWitness | None

    def __post_init__(self) -> None:
        if self.kind not in ("epsilon_ic", "epsilon_br"):
            raise ContractViolation(f"unknown certificate kind {self.kind!r}")
        if self.value < 0.0:
            raise ContractViolation("certificate value must be >= 0")
