"""Matplotlib renderings of solver outputs, written to files next to the
result documents.  Everything uses the Agg backend; no interactive state."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .compare import CompareReport
from .influence import InfluenceResult, influence_cutoff_residual
from .model import BlockPartition, FiniteAtoms, Partition1D, ReportTuple
from .stats import noisy_posterior_mean


def render_partition(partition: Partition1D | BlockPartition, path: str | Path) -> Path:
    """Number-line diagram of a partition: cutpoints or blocks plus responses."""
    fig, ax = plt.subplots(figsize=(7.0, 2.4))
    if isinstance(partition, Partition1D):
        t = partition.cutpoints
        for a, b in zip(t, t[1:]):
            ax.axvspan(a, b, alpha=0.12, color="C0")
        for x in t:
            ax.axvline(x, color="C0", lw=1.2)
        ax.plot(partition.responses, [0.5] * partition.n_regions, "o", color="C3",
                label="learner response")
        ax.set_xlim(t[0], t[-1])
    else:
        support = partition.support
        ax.vlines(support, 0.0, 0.35, color="0.4", lw=1.0)
        for k, (i, j) in enumerate(partition.blocks()):
            ax.axvspan(support[i], support[j], alpha=0.15, color=f"C{k % 10}")
        ax.plot(partition.responses, [0.5] * partition.n_blocks, "o", color="C3",
                label="learner response")
        lo, hi = support[0], support[-1]
        pad = 0.05 * max(hi - lo, 1e-9)
        ax.set_xlim(lo - pad, hi + pad)
    ax.set_ylim(0.0, 1.0)
    ax.set_yticks([])
    ax.set_xlabel("learner-optimal parameter")
    ax.legend(loc="upper left", fontsize=8)
    ax.set_title(f"partition ({len(partition.responses)} region(s))", fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_noisy_tuple(prior: FiniteAtoms, tup: ReportTuple, path: str | Path) -> Path:
    """Posterior-mean curve over interpretations with the report tuple marked."""
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    grid = np.linspace(-4.0 * tup.sigma, 1.0 + 4.0 * tup.sigma, 600)
    phi = noisy_posterior_mean(prior, tup, grid)
    ax.plot(grid, phi, color="C0", label="posterior mean")
    for w, m in zip(prior.support, tup.reports):
        ax.plot([m], [w], "o", color="C3")
        ax.annotate(f"{m:.3g}", (m, w), textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.set_xlabel("interpretation / report")
    ax.set_ylabel("parameter")
    ax.legend(fontsize=8)
    ax.set_title(f"noisy tuple, sigma={tup.sigma:g}", fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_gains(report: CompareReport, path: str | Path) -> Path:
    """Per-vector utility gains (x1000) of strategic over non-strategic."""
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    gains = [row.gain_x1000 for row in report.rows]
    ax.bar(range(len(gains)), gains, color=["C0" if g > 0 else "C3" for g in gains])
    ax.axhline(0.0, color="0.2", lw=0.8)
    ax.set_xlabel("evaluation vector")
    ax.set_ylabel("utility gain x 1e3")
    ax.set_title(f"win rate {report.win_rate:.2f}, mean gain {report.mean_gain_x1000:.3g}",
                 fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_influence(prior, b: float, result: InfluenceResult, path: str | Path) -> Path:
    """Cutoff residual g(b, t) across the support with detected roots."""
    lo, hi = prior.lower, prior.upper
    span = hi - lo
    ts = np.linspace(lo + 1e-4 * span, hi - 1e-4 * span, 400)
    vals = [influence_cutoff_residual(prior, b, t) for t in ts]
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    ax.plot(ts, vals, color="C0", label="cutoff residual")
    ax.axhline(0.0, color="0.2", lw=0.8)
    for r in result.roots:
        ax.plot([r], [0.0], "o", color="C3")
    ax.set_xlabel("cutoff t")
    ax.set_ylabel("g(b, t)")
    ax.legend(fontsize=8)
    ax.set_title("influential" if result.influential else "non-influential (babbling only)",
                 fontsize=10)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
