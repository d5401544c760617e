"""CSV ingestion and output writers.

Draw files hold one MCMC iteration per row and one item per column, with
integer cluster labels and an optional header row. Parameter files have the
columns ``iteration, label, theta_1, ..., theta_d``; ``iteration`` is the
1-based row of the draw file and ``label`` the label as written in that row.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .draws import DrawSet
from .infer import ParamTable


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def _int_cell(text: str) -> int | None:
    try:
        return int(text.strip())
    except ValueError:
        return None


def read_draws(path) -> np.ndarray:
    """Raw integer label matrix from a draw CSV, before canonicalization."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: empty draw file")
    if any(_int_cell(c) is None for c in rows[0]):
        header, body, first_line = rows[0], rows[1:], 2
    else:
        header, body, first_line = None, rows, 1
    if not body:
        raise InputError(f"{path}: no draw rows after the header")
    width = len(header) if header is not None else len(body[0])
    out = np.empty((len(body), width), dtype=np.int64)
    for r, row in enumerate(body):
        line = first_line + r
        if len(row) != width:
            raise InputError(f"{path}: row {line} has {len(row)} columns, expected {width}")
        for c, cell in enumerate(row):
            value = _int_cell(cell)
            if value is None:
                raise InputError(
                    f"{path}: row {line}, column {c + 1}: {cell!r} is not an integer label"
                )
            out[r, c] = value
    return out


def ingest_draws(path) -> DrawSet:
    return DrawSet(read_draws(path))


def ingest_params(path, raw_draws: np.ndarray) -> ParamTable:
    """Parameter table keyed by (0-based draw, canonical label).

    ``raw_draws`` is the label matrix as read from the draw file; labels in
    the parameter file are mapped through each row's canonicalization.
    """
    path = Path(path)
    raw_draws = np.asarray(raw_draws)
    M = raw_draws.shape[0]
    maps: dict[int, dict[int, int]] = {}
    entries: dict[tuple[int, int], np.ndarray] = {}
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: empty parameter file")
    start = 1 if _int_cell(rows[0][0]) is None else 0
    width = None
    for r, row in enumerate(rows[start:], start=start + 1):
        if len(row) < 3:
            raise InputError(f"{path}: row {r} needs iteration, label and at least one value")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError(f"{path}: row {r} has {len(row)} columns, expected {width}")
        it, lab = _int_cell(row[0]), _int_cell(row[1])
        if it is None or lab is None:
            raise InputError(f"{path}: row {r}: iteration and label must be integers")
        if not 1 <= it <= M:
            raise InputError(f"{path}: row {r}: iteration {it} outside 1..{M}")
        m = it - 1
        if m not in maps:
            mapping: dict[int, int] = {}
            for value in raw_draws[m].tolist():
                mapping.setdefault(value, len(mapping) + 1)
            maps[m] = mapping
        if lab not in maps[m]:
            raise InputError(f"{path}: row {r}: label {lab} does not occur in iteration {it}")
        key = (m, maps[m][lab])
        if key in entries:
            raise InputError(f"{path}: row {r}: duplicate entry for iteration {it}, label {lab}")
        try:
            entries[key] = np.array([float(c) for c in row[2:]])
        except ValueError:
            raise InputError(f"{path}: row {r}: parameter values must be numeric") from None
    return ParamTable(entries)


def fmt(x) -> str:
    """Shortest round-trip text for a number (at least as precise as 17 digits)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header: Sequence[str], rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_draws(path, labels: np.ndarray | DrawSet) -> None:
    """Write a label matrix (or DrawSet) with an ``item_1..item_n`` header."""
    mat = labels.labels if isinstance(labels, DrawSet) else np.asarray(labels)
    write_csv(path, [f"item_{i + 1}" for i in range(mat.shape[1])], mat.tolist())


def write_params(path, params: ParamTable) -> None:
    header = ["iteration", "label"] + [f"theta_{c + 1}" for c in range(params.d)]
    rows = [[m + 1, lab, *params[(m, lab)].tolist()] for m, lab in sorted(params.keys())]
    write_csv(path, header, rows)
