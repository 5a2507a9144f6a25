"""Prior ingestion and result emission.

Two prior file formats are accepted:

* a JSON object declaring the prior explicitly, one of
    {"type": "uniform", "lo": 0.0, "hi": 1.0}
    {"type": "finite", "support": [...], "masses": [...]}
    {"type": "vector", "atoms": [[...], ...], "masses": [...]}   (masses optional)
* a delimited numeric table (comma or whitespace separated, '#' comments)
  whose rows are parameter vectors; rows become a uniform-mass vector prior
  with duplicates merged.

Result documents are JSON with sorted keys; rerunning the same config and
seed reproduces them byte for byte apart from the timing field.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import PriorValidationError
from .model import FiniteAtoms, UniformInterval, VectorPrior


def _parse_table(text: str, path: str) -> VectorPrior:
    rows: list[list[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.replace(",", " ").split()
        try:
            row = [float(p) for p in parts]
        except ValueError as exc:
            raise PriorValidationError(f"{path}: row {lineno}: not numeric: {exc}") from None
        rows.append(row)
    if not rows:
        raise PriorValidationError(f"{path}: no numeric rows found")
    width = len(rows[0])
    for lineno_offset, row in enumerate(rows):
        if len(row) != width:
            raise PriorValidationError(
                f"{path}: inconsistent row width ({len(row)} vs {width})"
            )
    atoms = np.asarray(rows, dtype=float)
    masses = np.full(len(rows), 1.0 / len(rows))
    return VectorPrior(atoms, masses)


def _from_json_object(obj: dict, path: str):
    kind = obj.get("type")
    if kind == "uniform":
        for key in ("lo", "hi"):
            if key not in obj:
                raise PriorValidationError(f"{path}: uniform prior needs field {key!r}")
        return UniformInterval(float(obj["lo"]), float(obj["hi"]))
    if kind == "finite":
        for key in ("support", "masses"):
            if key not in obj:
                raise PriorValidationError(f"{path}: finite prior needs field {key!r}")
        support = obj["support"]
        masses = obj["masses"]
        if len(support) != len(masses):
            raise PriorValidationError(f"{path}: support and masses lengths differ")
        if any(y <= x for x, y in zip(support, support[1:])):
            raise PriorValidationError(f"{path}: field 'support' must be strictly ascending")
        return FiniteAtoms(tuple(float(x) for x in support), tuple(float(x) for x in masses))
    if kind == "vector":
        if "atoms" not in obj:
            raise PriorValidationError(f"{path}: vector prior needs field 'atoms'")
        atoms = np.asarray(obj["atoms"], dtype=float)
        masses = obj.get("masses")
        if masses is None:
            masses = np.full(atoms.shape[0], 1.0 / atoms.shape[0])
        return VectorPrior(atoms, np.asarray(masses, dtype=float))
    raise PriorValidationError(f"{path}: unknown prior type {kind!r}")


def ingest_prior(path: str | Path):
    """Load a prior from a JSON declaration or a delimited vector table."""
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    if not text.strip():
        raise PriorValidationError(f"{path}: empty file")
    head = text.lstrip()[:1]
    if head == "{":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PriorValidationError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise PriorValidationError(f"{path}: expected a JSON object")
        return _from_json_object(obj, str(path))
    return _parse_table(text, str(path))


def emit_prior(prior, path: str | Path) -> None:
    """Write a prior back to its JSON declaration (exact round trip)."""
    if isinstance(prior, UniformInterval):
        obj = {"type": "uniform", "lo": prior.lo, "hi": prior.hi}
    elif isinstance(prior, FiniteAtoms):
        obj = {"type": "finite", "support": list(prior.support), "masses": list(prior.masses)}
    elif isinstance(prior, VectorPrior):
        obj = {
            "type": "vector",
            "atoms": [list(map(float, row)) for row in prior.atoms],
            "masses": [float(x) for x in prior.masses],
        }
    else:
        raise PriorValidationError(f"cannot serialize prior of type {type(prior).__name__}")
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def prior_summary(prior) -> dict:
    if isinstance(prior, UniformInterval):
        return {"type": "uniform", "lo": prior.lo, "hi": prior.hi}
    if isinstance(prior, FiniteAtoms):
        return {
            "type": "finite",
            "size": prior.size,
            "lower": prior.lower,
            "upper": prior.upper,
            "mean": prior.mean(),
        }
    if isinstance(prior, VectorPrior):
        return {
            "type": "vector",
            "size": prior.size,
            "dim": prior.dim,
            "mean_norm": float(np.linalg.norm(prior.mean())),
        }
    return {"type": "density_oracle", "lower": prior.lower, "upper": prior.upper}


def config_hash(config: dict) -> str:
    """Stable hash of the semantic run configuration."""
    canonical = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def emit_result(document: dict, path: str | Path) -> None:
    """Write a result document as deterministic JSON."""
    try:
        Path(path).write_text(
            json.dumps(document, sort_keys=True, indent=2, allow_nan=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise OSError(f"cannot write result to {path}: {exc}") from exc
