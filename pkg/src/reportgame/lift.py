"""Multidimensional reporting via the conflict-direction lift.

The bias fixes a unit conflict direction.  Every parameter splits as
w = s b_hat + z with conflict projection s = b_hat . w and agreement
component z orthogonal to b_hat.  When s and z are independent under the
prior, a user-optimal scalar partition of s (bias = ||b||) lifts to a
multidimensional equilibrium whose reports reveal z exactly; the certificate
quantifies how far a lift is from an equilibrium when factorization fails.

The certificate is exact on a finite support: for regions R_i with learner
responses Phi(R_i),

    eps_IC = max_i max_{l != i} max_{w in R_i}
             [ ||Phi(R_i) - (w + b)||^2 - ||Phi(R_l) - (w + b)||^2 ]_+

with a deterministic witness (lowest atom, then lowest target region).
Non-factorized priors are deliberately not rejected: the lift is computed
anyway and eps_IC reports the violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractViolation
from .model import Bias, BlockPartition, Certificate, CertificateWitness, FiniteAtoms, VectorPrior
from .partition1d import lookup_report, solve_finite_dp

# Projections within this tolerance collapse to one scalar atom, so floating
# s-values of equal-projection atoms cannot split the marginal.
S_MERGE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ConflictDecomposition:
    """w = s * direction + z with z orthogonal to the conflict direction."""

    s: float
    z: np.ndarray
    direction: np.ndarray
    beta: float

    def recombine(self) -> np.ndarray:
        return self.s * self.direction + self.z


def decompose(w, bias: Bias | float | np.ndarray) -> ConflictDecomposition:
    """Split a parameter into conflict projection and agreement component."""
    b = Bias.of(bias)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.shape != b.vector.shape:
        raise ContractViolation(f"dimension mismatch: w {w.shape} vs bias {b.vector.shape}")
    direction = b.direction
    s = float(direction @ w)
    return ConflictDecomposition(s=s, z=w - s * direction, direction=direction, beta=b.magnitude)


def scalar_conflict_marginal(prior: VectorPrior, bias: Bias) -> tuple[FiniteAtoms, np.ndarray]:
    """Marginal of the conflict projection, plus each atom's scalar index.

    Projections equal within S_MERGE_TOL merge into one scalar atom with
    aggregated mass.
    """
    direction = bias.direction
    s_values = prior.atoms @ direction
    order = np.argsort(s_values, kind="stable")
    merged_support: list[float] = []
    merged_mass: list[float] = []
    atom_to_scalar = np.empty(prior.size, dtype=int)
    for idx in order:
        s = float(s_values[idx])
        if merged_support and s - merged_support[-1] <= S_MERGE_TOL:
            merged_mass[-1] += float(prior.masses[idx])
        else:
            merged_support.append(s)
            merged_mass.append(float(prior.masses[idx]))
        atom_to_scalar[idx] = len(merged_support) - 1
    marginal = FiniteAtoms(tuple(merged_support), tuple(merged_mass))
    return marginal, atom_to_scalar


def epsilon_ic(
    prior: VectorPrior,
    regions: list[list[int]] | tuple[tuple[int, ...], ...],
    responses,
    bias: Bias | float | np.ndarray,
) -> Certificate:
    """Exact max positive deviation gain over all atoms and alternative regions."""
    b = Bias.of(bias)
    responses = [np.atleast_1d(np.asarray(r, dtype=float)) for r in responses]
    if len(regions) != len(responses):
        raise ContractViolation("one response per region is required")
    if any(len(r) == 0 for r in regions):
        raise ContractViolation("regions must be nonempty")

    best_value = 0.0
    witness: CertificateWitness | None = None
    ideal = prior.atoms + b.vector
    # squared distance from each atom's ideal point to each region's response
    dist2 = np.stack([np.sum((ideal - resp) ** 2, axis=1) for resp in responses], axis=1)
    for i, atoms in enumerate(regions):
        for j in sorted(atoms):
            own = dist2[j, i]
            for l in range(len(regions)):
                if l == i:
                    continue
                gain = own - dist2[j, l]
                if gain > best_value:
                    best_value = float(gain)
                    witness = CertificateWitness(atom_index=int(j), target=int(l), gain=float(gain))
    return Certificate(kind="epsilon_ic", value=best_value, witness=witness)


@dataclass(frozen=True, eq=False)
class LiftedEquilibrium:
    """Scalar partition along the conflict direction plus exact revelation of
    the agreement component, certified over the original vector atoms.

    On-path report cells group atoms by (scalar block, agreement value); the
    learner's response to a cell is its exact posterior mean, which equals
    Phi_i * b_hat + z exactly when the prior factorizes.
    """

    scalar_partition: BlockPartition
    direction: np.ndarray
    certificate: Certificate
    cells: tuple[tuple[int, ...], ...]
    cell_responses: tuple[np.ndarray, ...]
    cell_blocks: tuple[int, ...]
    cell_agreements: tuple[np.ndarray, ...]
    atom_to_cell: tuple[int, ...]

    @property
    def is_babbling(self) -> bool:
        return self.scalar_partition.is_babbling

    def _block_for_projection(self, s: float) -> int:
        support = self.scalar_partition.support
        nearest = min(range(len(support)), key=lambda i: abs(support[i] - s))
        if abs(support[nearest] - s) <= S_MERGE_TOL:
            return self.scalar_partition.block_of_atom(nearest)
        clamped = min(max(s, support[0]), support[-1])
        return lookup_report(self.scalar_partition, clamped)

    def response_for(self, w, bias) -> np.ndarray:
        """Learner response to the report of a parameter value: the on-path
        cell's posterior mean when the value is in the support, otherwise the
        constructed response Phi_i * b_hat + z."""
        dec = decompose(w, Bias.of(bias))
        block = self._block_for_projection(dec.s)
        for idx, (blk, zval) in enumerate(zip(self.cell_blocks, self.cell_agreements)):
            if blk == block and np.allclose(zval, dec.z, atol=1e-9, rtol=0.0):
                return np.asarray(self.cell_responses[idx])
        phi = self.scalar_partition.block_means[block]
        return phi * self.direction + dec.z


def solve_lifted(
    prior: VectorPrior,
    bias: Bias | float | np.ndarray,
    scalar_solver: Callable[[FiniteAtoms, float], BlockPartition] = solve_finite_dp,
) -> LiftedEquilibrium:
    """Project atoms onto the conflict direction, solve the scalar problem with
    bias ||b||, lift, and certify over the original atoms with eps_IC."""
    b = Bias.of(bias)
    if b.dim != prior.dim:
        raise ContractViolation("bias dimension must match the prior")
    marginal, atom_to_scalar = scalar_conflict_marginal(prior, b)
    partition = scalar_solver(marginal, b.magnitude)

    direction = b.direction
    z_all = prior.atoms - np.outer(prior.atoms @ direction, direction)

    cells: list[list[int]] = []
    cell_blocks: list[int] = []
    cell_agreements: list[np.ndarray] = []
    atom_to_cell = np.empty(prior.size, dtype=int)
    for j in range(prior.size):
        block = partition.block_of_atom(int(atom_to_scalar[j]))
        found = None
        for idx in range(len(cells)):
            if cell_blocks[idx] == block and np.allclose(
                cell_agreements[idx], z_all[j], atol=S_MERGE_TOL, rtol=0.0
            ):
                found = idx
                break
        if found is None:
            cells.append([j])
            cell_blocks.append(block)
            cell_agreements.append(z_all[j])
            found = len(cells) - 1
        else:
            cells[found].append(j)
        atom_to_cell[j] = found

    responses = []
    for atoms in cells:
        mass = prior.masses[atoms]
        responses.append((mass @ prior.atoms[atoms]) / mass.sum())

    certificate = epsilon_ic(prior, [tuple(c) for c in cells], responses, b)
    return LiftedEquilibrium(
        scalar_partition=partition,
        direction=direction,
        certificate=certificate,
        cells=tuple(tuple(c) for c in cells),
        cell_responses=tuple(responses),
        cell_blocks=tuple(cell_blocks),
        cell_agreements=tuple(cell_agreements),
        atom_to_cell=tuple(int(x) for x in atom_to_cell),
    )
