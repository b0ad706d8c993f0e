"""CSV ingestion, series transforms, and JSON document serialisation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .forecasting import EvalReport
from .tree import TreeModel

TRANSFORMS = ("none", "diff", "logdiff", "logret10")
SCHEMA_VERSION = 1


def _to_float(cell: str) -> Optional[float]:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v


def ingest_csv(path: str, column: Union[int, str, None] = None) -> np.ndarray:
    """Read one numeric column from a CSV file, in file order.

    The first row is treated as a header iff it is non-numeric.  `column`
    may be an index or a header name; default is the last column.  Rows with
    non-numeric or non-finite cells are rejected with their line number.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    header: Optional[list[str]] = None
    if all(_to_float(c) is None for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if isinstance(column, str):
        if header is None or column not in header:
            raise ValueError(f"{path}: no column named {column!r}")
        idx = header.index(column)
    elif column is None:
        idx = -1
    else:
        idx = int(column)
    values = []
    offset = 2 if header is not None else 1
    for k, row in enumerate(rows):
        line = k + offset
        try:
            cell = row[idx]
        except IndexError:
            raise ValueError(f"{path}: line {line}: no column {idx}") from None
        v = _to_float(cell)
        if v is None or not math.isfinite(v):
            raise ValueError(f"{path}: line {line}: non-numeric value {cell!r}")
        values.append(v)
    if not values:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(values, dtype=float)


@dataclass(frozen=True)
class TransformSpec:
    """A series transform plus the anchor needed to report in original units."""

    kind: str
    first_value: Optional[float] = None

    def __post_init__(self):
        if self.kind not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.kind!r}; choose from {TRANSFORMS}")


def apply_transform(series: Sequence[float], kind: str) -> tuple[np.ndarray, TransformSpec]:
    """Apply a named transform; differencing variants shrink the series by one."""
    x = np.asarray(series, dtype=float)
    if kind == "none":
        return x, TransformSpec("none")
    if len(x) < 2:
        raise ValueError("differencing transforms need at least two samples")
    if kind == "diff":
        return x[1:] - x[:-1], TransformSpec("diff", float(x[0]))
    if kind in ("logdiff", "logret10"):
        bad = np.nonzero(x <= 0)[0]
        if bad.size:
            raise ValueError(f"log transform requires positive values; offending index {bad[0]}")
        d = np.diff(np.log(x))
        scale = 10.0 if kind == "logret10" else 1.0
        return scale * d, TransformSpec(kind, float(x[0]))
    raise ValueError(f"unknown transform {kind!r}")


# -- JSON documents ----------------------------------------------------------


def tree_to_doc(tree: TreeModel, leaf_params: dict[tuple[int, ...], dict]) -> dict:
    """Nested tree document: internal nodes carry children, leaves their parameters."""
    leafset = set(tree.leaves)

    def rec(prefix: tuple[int, ...]) -> dict:
        if prefix in leafset:
            return {"context": list(prefix), "leaf": leaf_params.get(prefix, {})}
        return {
            "context": list(prefix),
            "children": [rec(prefix + (j,)) for j in range(tree.m)],
        }

    return rec(())


def tree_from_doc(doc: dict, m: int) -> TreeModel:
    leaves: list[tuple[int, ...]] = []

    def rec(node: dict):
        if "children" in node:
            for child in node["children"]:
                rec(child)
        else:
            leaves.append(tuple(node["context"]))

    rec(doc)
    return TreeModel(m, tuple(leaves))


def model_document(
    fitted,
    kind: str,
    *,
    transform: Optional[TransformSpec] = None,
    seed: Optional[int] = None,
    selection_table: Optional[list] = None,
) -> dict:
    """Serialisable description of a fitted model (MAP tree plus leaf parameters)."""
    tree = fitted.map_tree()
    hp = getattr(fitted.model, "hp", None)
    cfg = getattr(fitted.model, "cfg", None)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "model": kind,
        "quantizer": {
            "thresholds": [float(c) for c in fitted.quantizer.thresholds],
            "alphabet_size": fitted.quantizer.alphabet_size,
        },
        "depth": fitted.depth,
        "beta": float(fitted.beta),
        "order": fitted.model.order,
        "intercept": bool(getattr(hp, "intercept", False)),
        "prior": {"tau": float(hp.tau), "lam": float(hp.lam)} if hp is not None else None,
        "fisher_iters": cfg.fisher_iters if cfg is not None else None,
        "n_scored": fitted.num_scored,
        "log_evidence": float(fitted.log_evidence()),
        "map_posterior": float(fitted.map_posterior()),
        "tree": tree_to_doc(tree, fitted.leaf_parameters(tree)),
        "transform": None if transform is None else {"kind": transform.kind, "first_value": transform.first_value},
        "seed": seed,
    }
    if selection_table is not None:
        doc["selection"] = [
            {"thresholds": list(c.thresholds), "order": c.order, "log_evidence": c.log_evidence}
            for c in selection_table
        ]
    return doc


def dumps_canonical(doc: dict) -> str:
    """Canonical JSON text: sorted keys, stable float repr, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_document(text: str) -> dict:
    return json.loads(text)


def report_to_doc(report: EvalReport, *, seed: Optional[int] = None,
                  transform: Optional[TransformSpec] = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mse": float(report.mse),
        "cumulative_log_loss": float(report.cumulative_log_loss),
        "thresholds": [float(v) for v in report.thresholds],
        "order": report.order,
        "train_len": report.train_len,
        "test_len": len(report.records),
        "map_tree_leaves": ["".join(map(str, leaf)) for leaf in report.map_tree.leaves],
        "map_posterior": float(report.map_posterior),
        "log_evidence": float(report.log_evidence),
        "leaf_params": report.leaf_params,
        "transform": None if transform is None else {"kind": transform.kind, "first_value": transform.first_value},
        "seed": seed,
    }


REPORT_CSV_COLUMNS = ("time", "mean", "variance", "realised", "sq_error", "log_density")


def write_records_csv(records, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_CSV_COLUMNS)
        for r in records:
            writer.writerow([r.index, repr(r.mean), repr(r.variance), repr(r.realised),
                             repr(r.squared_error), repr(r.log_density)])


def write_series_csv(series: Sequence[float], path: str, header: str = "value") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([header])
        for v in series:
            writer.writerow([repr(float(v))])
