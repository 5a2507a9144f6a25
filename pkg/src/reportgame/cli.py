"""Command-line front end.

Commands
--------
detect       influence decision for a scalar prior (cutoff roots, or the
             block-partition feasibility search for finite priors)
solve1d      user-optimal one-dimensional partition
solve-md     lifted multidimensional partition with its eps_IC certificate
solve-noisy  user-optimal noisy report tuple (requires --sigma)
certify      recompute and emit only the equilibrium certificate
compare      strategic vs non-strategic utility gains over the prior's atoms

Exit codes: 0 success; 2 input validation; 3 only the uninfluential fallback
was found (no verified influential equilibrium); 4 I/O failure.

When --out is given, a JSON result document is written there; the compare
command additionally writes a delimited per-vector gain table, and each
command renders a small matplotlib figure next to the document unless
--no-figures is passed.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .compare import CompareReport, run_compare
from .errors import PriorValidationError, ReportGameError
from .influence import detect_influence_1d, detect_influence_uniform
from .io import config_hash, emit_result, ingest_prior, prior_summary
from .lift import solve_lifted
from .model import (
    Bias,
    BlockPartition,
    Certificate,
    FiniteAtoms,
    Partition1D,
    UniformInterval,
    VectorPrior,
)
from .noisy import solve_noisy_1d, solve_noisy_lifted
from .partition1d import solve_continuous_cutpoints, solve_finite_dp, solve_uniform_closed_form

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_FALLBACK_ONLY = 3
EXIT_IO = 4


class _CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _parse_bias(spec: str, dim: int, seed: int) -> Bias:
    if spec.startswith("rand:"):
        try:
            magnitude = float(spec.split(":", 1)[1])
        except ValueError:
            raise _CliError(EXIT_VALIDATION, f"bad bias magnitude in {spec!r}")
        if magnitude <= 0.0:
            raise _CliError(EXIT_VALIDATION, "bias magnitude must be > 0")
        return Bias.random_direction(dim, magnitude, seed)
    try:
        parts = [float(p) for p in spec.replace(",", " ").split()]
    except ValueError:
        raise _CliError(EXIT_VALIDATION, f"bias {spec!r} is not numeric")
    if not parts:
        raise _CliError(EXIT_VALIDATION, "empty bias")
    if len(parts) == 1 and dim > 1:
        raise _CliError(
            EXIT_VALIDATION,
            f"prior has dimension {dim}; give a {dim}-vector bias or rand:<magnitude>",
        )
    if len(parts) not in (1, dim):
        raise _CliError(EXIT_VALIDATION, f"bias has {len(parts)} entries, prior dimension is {dim}")
    return Bias.of(parts if len(parts) > 1 else parts[0])


def _scalar_bias(bias: Bias) -> float:
    if bias.dim != 1:
        raise _CliError(EXIT_VALIDATION, "this command needs a scalar bias")
    return float(bias.vector[0])


def _certificate_doc(cert: Certificate) -> dict:
    doc = {"kind": cert.kind, "value": cert.value}
    if cert.witness is not None:
        doc["witness"] = {
            "atom_index": cert.witness.atom_index,
            "target": cert.witness.target,
            "gain": cert.witness.gain,
        }
    return doc


def _partition_doc(partition: Partition1D | BlockPartition) -> dict:
    if isinstance(partition, Partition1D):
        return {
            "kind": "interval_partition",
            "cutpoints": list(partition.cutpoints),
            "responses": list(partition.responses),
            "objective": partition.objective,
            "babbling": partition.is_babbling,
        }
    return {
        "kind": "block_partition",
        "boundaries": list(partition.boundaries),
        "support": list(partition.support),
        "responses": list(partition.responses),
        "objective": partition.objective,
        "babbling": partition.is_babbling,
    }


def _compare_table(report: CompareReport) -> str:
    lines = ["index,strategic_utility,non_strategic_utility,gain_x1000,win"]
    for row in report.rows:
        lines.append(
            f"{row.index},{row.strategic_utility!r},{row.non_strategic_utility!r},"
            f"{row.gain_x1000!r},{int(row.win)}"
        )
    return "\n".join(lines) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reportgame",
        description="Equilibria of the strategic dataset-reporting game.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_bias in [
        ("detect", True),
        ("solve1d", True),
        ("solve-md", True),
        ("solve-noisy", True),
        ("certify", True),
        ("compare", True),
    ]:
        p = sub.add_parser(name)
        p.add_argument("--prior", required=True, help="prior file (JSON or vector table)")
        p.add_argument("--bias", required=needs_bias,
                       help="float, comma-separated vector, or rand:<magnitude>")
        p.add_argument("--sigma", type=float, default=None, help="report noise level")
        p.add_argument("--out", default=None, help="result document path (JSON)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol-br", type=float, default=1e-4,
                       help="noisy acceptance threshold on best-response gains")
        p.add_argument("--gh-nodes", type=int, default=41,
                       help="quadrature nodes per noise-scale panel")
        p.add_argument("--grid", type=int, default=2001,
                       help="best-response verification grid size")
        p.add_argument("--no-figures", action="store_true",
                       help="skip rendering figures next to --out")
    return parser


def _run(args) -> tuple[dict, int, list]:
    """Returns (document body, exit code, figure render jobs)."""
    try:
        prior = ingest_prior(args.prior)
    except FileNotFoundError as exc:
        raise _CliError(EXIT_IO, str(exc))
    except PriorValidationError as exc:
        raise _CliError(EXIT_VALIDATION, str(exc))

    dim = prior.dim if isinstance(prior, VectorPrior) else 1
    bias = _parse_bias(args.bias, dim, args.seed)
    figures: list = []
    doc: dict = {}
    code = EXIT_OK
    command = args.command

    if command == "detect":
        if isinstance(prior, VectorPrior):
            raise _CliError(EXIT_VALIDATION,
                            "detect handles scalar priors; use solve-md for vector priors")
        b = _scalar_bias(bias)
        if isinstance(prior, FiniteAtoms):
            partition = solve_finite_dp(prior, b)
            doc = {
                "influential": partition.n_blocks >= 2,
                "method": "block_feasibility",
                "partition": _partition_doc(partition),
                "babbling_exists": True,
            }
        else:
            result = detect_influence_1d(prior, b)
            doc = {
                "influential": result.influential,
                "method": "cutoff_root",
                "cutoff": result.cutoff,
                "roots": list(result.roots),
                "babbling_exists": True,
            }
            if isinstance(prior, UniformInterval) and prior.lo == 0.0 and prior.hi == 1.0:
                doc["uniform_threshold_check"] = detect_influence_uniform(b)
            figures.append(("influence", (prior, b, result)))

    elif command == "solve1d":
        if isinstance(prior, VectorPrior):
            raise _CliError(EXIT_VALIDATION, "solve1d handles scalar priors; use solve-md")
        b = _scalar_bias(bias)
        if isinstance(prior, FiniteAtoms):
            partition = solve_finite_dp(prior, b)
        elif isinstance(prior, UniformInterval):
            partition = solve_uniform_closed_form(b, prior)
        else:
            partition = solve_continuous_cutpoints(prior, b, seed=args.seed)
        doc = {"partition": _partition_doc(partition)}
        figures.append(("partition", partition))

    elif command == "solve-md":
        if not isinstance(prior, VectorPrior):
            raise _CliError(EXIT_VALIDATION, "solve-md needs a vector prior")
        lifted = solve_lifted(prior, bias)
        doc = {
            "direction": [float(x) for x in lifted.direction],
            "scalar_partition": _partition_doc(lifted.scalar_partition),
            "certificate": _certificate_doc(lifted.certificate),
            "n_cells": len(lifted.cells),
        }
        figures.append(("partition", lifted.scalar_partition))

    elif command == "solve-noisy":
        if args.sigma is None:
            raise _CliError(EXIT_VALIDATION, "solve-noisy requires --sigma")
        if isinstance(prior, UniformInterval):
            raise _CliError(EXIT_VALIDATION, "the noisy model needs a finite-support prior")
        if isinstance(prior, VectorPrior):
            lifted = solve_noisy_lifted(
                prior, bias, args.sigma, tol_br=args.tol_br, seed=args.seed,
                grid_points=args.grid, quad_nodes=args.gh_nodes,
            )
            result = lifted.scalar
            doc = {
                "direction": [float(x) for x in lifted.direction],
                "scale": lifted.scale,
                "offset": lifted.offset,
            }
            theta_support = tuple(
                (s - lifted.offset) / lifted.scale for s in lifted.marginal.support
            )
            fig_prior = FiniteAtoms(theta_support, lifted.marginal.masses)
        else:
            b = _scalar_bias(bias)
            result = solve_noisy_1d(
                prior, b, args.sigma, tol_br=args.tol_br, seed=args.seed,
                grid_points=args.grid, quad_nodes=args.gh_nodes,
            )
            doc = {}
            fig_prior = prior
        doc.update(
            {
                "reports": list(result.tup.reports),
                "pattern": list(result.pattern),
                "sigma": args.sigma,
                "verified": result.verified,
                "influential": result.influential,
                "expected_user_utility": result.tup.expected_user_utility,
                "candidates_examined": result.candidates_examined,
                "certificate": _certificate_doc(result.br_violation),
            }
        )
        if not (result.verified and result.influential):
            code = EXIT_FALLBACK_ONLY
        figures.append(("noisy", (fig_prior, result.tup)))

    elif command == "certify":
        if isinstance(prior, UniformInterval):
            raise _CliError(EXIT_VALIDATION, "certificates are defined over finite supports")
        if args.sigma is not None:
            if isinstance(prior, VectorPrior):
                lifted = solve_noisy_lifted(
                    prior, bias, args.sigma, tol_br=args.tol_br, seed=args.seed,
                    grid_points=args.grid, quad_nodes=args.gh_nodes,
                )
                cert = lifted.scalar.br_violation
                extra = {"verified": lifted.scalar.verified, "reports": list(lifted.scalar.tup.reports)}
            else:
                b = _scalar_bias(bias)
                result = solve_noisy_1d(
                    prior, b, args.sigma, tol_br=args.tol_br, seed=args.seed,
                    grid_points=args.grid, quad_nodes=args.gh_nodes,
                )
                cert = result.br_violation
                extra = {"verified": result.verified, "reports": list(result.tup.reports)}
            doc = {"certificate": _certificate_doc(cert), **extra}
        else:
            if isinstance(prior, FiniteAtoms):
                vec = VectorPrior(np.array(prior.support)[:, None], np.array(prior.masses))
            else:
                vec = prior
            lifted = solve_lifted(vec, bias)
            doc = {
                "certificate": _certificate_doc(lifted.certificate),
                "scalar_partition": _partition_doc(lifted.scalar_partition),
            }

    elif command == "compare":
        if not isinstance(prior, VectorPrior):
            raise _CliError(EXIT_VALIDATION, "compare needs a vector prior (table of atoms)")
        report = run_compare(prior, bias, sigma=args.sigma, seed=args.seed, tol_br=args.tol_br)
        doc = {
            "win_rate": report.win_rate,
            "mean_gain_x1000": report.mean_gain_x1000,
            "babbling": report.babbling,
            "noisy": report.noisy,
            "certificate": _certificate_doc(report.certificate),
            "gains_x1000": [row.gain_x1000 for row in report.rows],
        }
        figures.append(("gains", report))
        figures.append(("gains_table", report))

    return doc, code, figures


def _render_figures(jobs: list, out_path: Path) -> dict[str, str]:
    from . import figures as figmod

    written: dict[str, str] = {}
    stem = out_path.with_suffix("")
    for kind, payload in jobs:
        if kind == "partition":
            p = figmod.render_partition(payload, f"{stem}_partition.png")
            written["partition"] = str(p)
        elif kind == "noisy":
            prior, tup = payload
            p = figmod.render_noisy_tuple(prior, tup, f"{stem}_tuple.png")
            written["tuple"] = str(p)
        elif kind == "gains":
            p = figmod.render_gains(payload, f"{stem}_gains.png")
            written["gains"] = str(p)
        elif kind == "influence":
            prior, b, result = payload
            p = figmod.render_influence(prior, b, result, f"{stem}_residual.png")
            written["residual"] = str(p)
        elif kind == "gains_table":
            table_path = Path(f"{stem}_gains.csv")
            table_path.write_text(_compare_table(payload), encoding="utf-8")
            written["gains_table"] = str(table_path)
    return written


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        body, code, figure_jobs = _run(args)
    except _CliError as exc:
        print(f"reportgame: {exc}", file=sys.stderr)
        return exc.code
    except PriorValidationError as exc:
        print(f"reportgame: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ReportGameError as exc:
        print(f"reportgame: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"reportgame: {exc}", file=sys.stderr)
        return EXIT_IO

    config = {
        "command": args.command,
        "prior": str(args.prior),
        "bias": args.bias,
        "sigma": args.sigma,
        "seed": args.seed,
        "tol_br": args.tol_br,
        "gh_nodes": args.gh_nodes,
        "grid": args.grid,
    }
    try:
        prior_doc = prior_summary(ingest_prior(args.prior))
    except Exception:
        prior_doc = {}
    document = {
        "command": args.command,
        "config": config,
        "config_hash": config_hash(config),
        "prior_summary": prior_doc,
        "result": body,
        "seed": args.seed,
        "timing_seconds": time.perf_counter() - started,
        "version": __version__,
    }

    if args.out is not None:
        out_path = Path(args.out)
        try:
            if not args.no_figures:
                document["figures"] = _render_figures(figure_jobs, out_path)
            document["timing_seconds"] = time.perf_counter() - started
            emit_result(document, out_path)
        except OSError as exc:
            print(f"reportgame: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        import json

        print(json.dumps(document, sort_keys=True, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
