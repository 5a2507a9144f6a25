"""Equilibria of the strategic dataset-reporting game.

A user with private knowledge of the learner-optimal parameter sends a
costless, unverifiable report; the learner best-responds with a posterior
mean under quadratic loss; the user's ideal point is shifted by a conflict
bias.  This package detects whether influential communication is possible,
computes user-optimal report partitions in one and many dimensions, solves
the Gaussian-noise variant, and certifies exact or approximate equilibria.
"""

__version__ = "0.1.0"

from .compare import CompareReport, CompareRow, run_compare
from .errors import (
    ContractViolation,
    DegeneratePrior,
    OutOfSupport,
    PriorValidationError,
    ReportGameError,
    SizeGuardError,
    SolverNoConvergence,
    ZeroMassRegion,
)
from .influence import (
    InfluenceResult,
    SphericalSplit,
    detect_influence_1d,
    detect_influence_uniform,
    influence_cutoff_residual,
    spherical_split,
)
from .io import emit_prior, emit_result, ingest_prior
from .lift import (
    ConflictDecomposition,
    LiftedEquilibrium,
    decompose,
    epsilon_ic,
    scalar_conflict_marginal,
    solve_lifted,
)
from .model import (
    Bias,
    BlockPartition,
    Certificate,
    CertificateWitness,
    DensityOracle,
    FiniteAtoms,
    Partition1D,
    ReportTuple,
    UniformInterval,
    VectorPrior,
    learner_utility,
    non_strategic_response,
    user_utility,
)
from .noisy import (
    NoisyLiftedResult,
    NoisySolveResult,
    VerifiedCandidate,
    epsilon_br,
    foc_residual,
    solve_binary_closed_form,
    solve_noisy_1d,
    solve_noisy_lifted,
)
from .partition1d import (
    lookup_report,
    max_reports,
    solve_continuous_cutpoints,
    solve_finite_dp,
    solve_uniform_closed_form,
)
from .stats import (
    RegionStats,
    expected_noisy_user_utility,
    noisy_posterior_mean,
    noisy_utility_curve,
    region_stats,
)

__all__ = [
    "Bias",
    "BlockPartition",
    "Certificate",
    "CertificateWitness",
    "CompareReport",
    "CompareRow",
    "ConflictDecomposition",
    "ContractViolation",
    "DegeneratePrior",
    "DensityOracle",
    "FiniteAtoms",
    "InfluenceResult",
    "LiftedEquilibrium",
    "NoisyLiftedResult",
    "NoisySolveResult",
    "OutOfSupport",
    "Partition1D",
    "PriorValidationError",
    "RegionStats",
    "ReportGameError",
    "ReportTuple",
    "SizeGuardError",
    "SolverNoConvergence",
    "SphericalSplit",
    "UniformInterval",
    "VectorPrior",
    "VerifiedCandidate",
    "ZeroMassRegion",
    "decompose",
    "detect_influence_1d",
    "detect_influence_uniform",
    "emit_prior",
    "emit_result",
    "epsilon_br",
    "epsilon_ic",
    "expected_noisy_user_utility",
    "foc_residual",
    "influence_cutoff_residual",
    "ingest_prior",
    "learner_utility",
    "lookup_report",
    "max_reports",
    "noisy_posterior_mean",
    "noisy_utility_curve",
    "non_strategic_response",
    "region_stats",
    "run_compare",
    "scalar_conflict_marginal",
    "solve_binary_closed_form",
    "solve_continuous_cutpoints",
    "solve_finite_dp",
    "solve_lifted",
    "solve_noisy_1d",
    "solve_noisy_lifted",
    "solve_uniform_closed_form",
    "spherical_split",
    "user_utility",
]
