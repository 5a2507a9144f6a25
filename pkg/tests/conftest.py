"""Shared test helpers: random instance factories and independent oracles."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad

from reportgame import Bias, FiniteAtoms, VectorPrior


def random_finite_prior(rng: np.random.Generator, max_atoms: int = 8) -> FiniteAtoms:
    m = int(rng.integers(1, max_atoms + 1))
    support = np.sort(rng.uniform(0.0, 1.0, m))
    while np.any(np.diff(support) < 1e-6):
        support = np.sort(rng.uniform(0.0, 1.0, m))
    masses = rng.dirichlet(np.ones(m))
    return FiniteAtoms(tuple(support), tuple(masses))


def random_factorized_prior(
    rng: np.random.Generator, max_atoms: int = 20, max_dim: int = 5
) -> tuple[VectorPrior, Bias]:
    """Product prior: conflict marginal x agreement marginal, exactly factorized."""
    d = int(rng.integers(2, max_dim + 1))
    bias = Bias.random_direction(d, float(rng.uniform(0.02, 0.4)), seed=int(rng.integers(1 << 30)))
    bhat = bias.direction
    n_s = int(rng.integers(2, 5))
    n_z = int(rng.integers(1, max(2, max_atoms // n_s) + 1))
    s_vals = np.sort(rng.uniform(0.0, 1.0, n_s))
    while np.any(np.diff(s_vals) < 1e-3):
        s_vals = np.sort(rng.uniform(0.0, 1.0, n_s))
    s_mass = rng.dirichlet(np.ones(n_s))
    z_vecs = []
    for _ in range(n_z):
        g = rng.standard_normal(d)
        g -= (g @ bhat) * bhat
        z_vecs.append(g)
    z_mass = rng.dirichlet(np.ones(n_z))
    atoms, masses = [], []
    for s, ms in zip(s_vals, s_mass):
        for z, mz in zip(z_vecs, z_mass):
            atoms.append(s * bhat + z)
            masses.append(ms * mz)
    return VectorPrior(np.array(atoms), np.array(masses)), bias


def quad_noisy_utility(prior: FiniteAtoms, reports, sigma, atom_index, r, bias) -> float:
    """Independent dense-adaptive evaluation of the noisy expected utility over
    [r - 8 sigma, r + 8 sigma], integrating piecewise so adaptive subdivision
    cannot miss narrow posterior transitions."""
    support = np.asarray(prior.support)
    masses = np.asarray(prior.masses)
    reports = np.asarray(reports, dtype=float)

    def integrand(x: float) -> float:
        expo = -((x - reports) ** 2) / (2.0 * sigma**2)
        like = np.exp(expo - expo.max())
        weights = like * masses
        phi = float(weights @ support / weights.sum())
        dens = np.exp(-((x - r) ** 2) / (2.0 * sigma**2)) / (np.sqrt(2.0 * np.pi) * sigma)
        return -((support[atom_index] + bias - phi) ** 2) * dens

    edges = np.linspace(r - 8.0 * sigma, r + 8.0 * sigma, 17)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(integrand, a, b, limit=200, epsabs=1e-13, epsrel=1e-12)
        total += val
    return total


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
