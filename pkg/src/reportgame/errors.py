"""Semantic exception hierarchy for the reporting-game library."""


class ReportGameError(Exception):
    """Base class for all library errors."""


class ContractViolation(ReportGameError, ValueError):
    """An operation was called with arguments outside its contract."""


class PriorValidationError(ReportGameError, ValueError):
    """A prior failed construction-time validation (masses, ordering, shape)."""


class ZeroMassRegion(ReportGameError, ValueError):
    """A region query hit a set of zero prior mass (empty partition cell)."""


class DegeneratePrior(ReportGameError, ValueError):
    """The prior carries no usable spread (e.g. a single repeated atom)."""


class OutOfSupport(ReportGameError, ValueError):
    """A lookup value lies outside the partition's support."""


class SolverNoConvergence(ReportGameError, RuntimeError):
    """No candidate satisfied the solver's acceptance checks."""


class SizeGuardError(ReportGameError, ValueError):
    """A brute-force oracle was asked for an instance above its size guard."""
