"""Strategic vs non-strategic comparison harness.

For each evaluation parameter the strategic response is the learner's
posterior-mean reply to the parameter's report under the computed lifted
equilibrium (noiseless partition or noisy tuple along the conflict
coordinate); the non-strategic benchmark ignores the report and deploys the
prior mean.  Reported per-vector utility gains are scaled by 1e3, and the
win rate counts strictly positive gains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .lift import LiftedEquilibrium, decompose, solve_lifted
from .model import Bias, Certificate, FiniteAtoms, VectorPrior, user_utility
from .noisy import NoisyLiftedResult, TupleEvaluator, solve_noisy_lifted


@dataclass(frozen=True, eq=False)
class CompareRow:
    index: int
    strategic_utility: float
    non_strategic_utility: float
    gain_x1000: float

    @property
    def win(self) -> bool:
        return self.gain_x1000 > 0.0


@dataclass(frozen=True, eq=False)
class CompareReport:
    rows: tuple[CompareRow, ...]
    win_rate: float
    mean_gain_x1000: float
    certificate: Certificate
    babbling: bool
    noisy: bool
    equilibrium: LiftedEquilibrium | NoisyLiftedResult


def _noiseless_rows(
    prior: VectorPrior, bias: Bias, lifted: LiftedEquilibrium, eval_vectors: np.ndarray
) -> list[CompareRow]:
    prior_mean = prior.mean()
    rows = []
    for k, w in enumerate(eval_vectors):
        response = lifted.response_for(w, bias)
        strategic = user_utility(w, bias, response)
        baseline = user_utility(w, bias, prior_mean)
        rows.append(CompareRow(k, strategic, baseline, 1e3 * (strategic - baseline)))
    return rows


def _noisy_rows(
    prior: VectorPrior, bias: Bias, lifted: NoisyLiftedResult, eval_vectors: np.ndarray
) -> list[CompareRow]:
    prior_mean = prior.mean()
    scalar = lifted.scalar
    marginal_support = lifted.marginal.support_array()
    # theta-space expected utilities per scalar atom at the assigned reports
    theta_prior = FiniteAtoms(
        tuple((marginal_support - lifted.offset) / lifted.scale), lifted.marginal.masses
    )
    evaluator = TupleEvaluator(theta_prior, scalar.tup, bias.magnitude / lifted.scale)
    per_atom_theta_utility = [
        evaluator.value(i, scalar.tup.reports[i]) for i in range(theta_prior.size)
    ]

    rows = []
    for k, w in enumerate(eval_vectors):
        dec = decompose(w, bias)
        diffs = np.abs(marginal_support - dec.s)
        idx = int(np.argmin(diffs))
        if diffs[idx] > 1e-8:
            raise ContractViolation(
                "noisy comparison requires evaluation vectors whose conflict projection "
                "lies in the prior's support"
            )
        # exact z revelation: only the conflict coordinate carries a loss
        strategic = lifted.scale**2 * per_atom_theta_utility[idx]
        baseline = user_utility(w, bias, prior_mean)
        rows.append(CompareRow(k, float(strategic), baseline, 1e3 * (float(strategic) - baseline)))
    return rows


def run_compare(
    prior: VectorPrior,
    bias: Bias | float | np.ndarray,
    sigma: float | None = None,
    eval_vectors: np.ndarray | None = None,
    seed: int = 0,
    tol_br: float = 1e-4,
) -> CompareReport:
    """Compare the strategic reporting strategy against the prior-mean
    benchmark on the given evaluation vectors (default: the prior's atoms)."""
    b = Bias.of(bias)
    if eval_vectors is None:
        eval_vectors = prior.atoms
    eval_vectors = np.atleast_2d(np.asarray(eval_vectors, dtype=float))
    if eval_vectors.shape[1] != prior.dim:
        raise ContractViolation("evaluation vectors must match the prior dimension")

    if sigma is None:
        lifted = solve_lifted(prior, b)
        rows = _noiseless_rows(prior, b, lifted, eval_vectors)
        certificate = lifted.certificate
        babbling = lifted.is_babbling
        noisy = False
        equilibrium: LiftedEquilibrium | NoisyLiftedResult = lifted
    else:
        lifted_noisy = solve_noisy_lifted(prior, b, sigma, tol_br=tol_br, seed=seed)
        rows = _noisy_rows(prior, b, lifted_noisy, eval_vectors)
        certificate = lifted_noisy.scalar.br_violation
        babbling = not lifted_noisy.scalar.influential
        noisy = True
        equilibrium = lifted_noisy

    wins = sum(1 for r in rows if r.win)
    return CompareReport(
        rows=tuple(rows),
        win_rate=wins / len(rows),
        mean_gain_x1000=float(np.mean([r.gain_x1000 for r in rows])),
        certificate=certificate,
        babbling=babbling,
        noisy=noisy,
        equilibrium=equilibrium,
    )
