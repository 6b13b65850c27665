"""Observed samples ``(x, z, d, y)``: CSV ingestion and empirical joints."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import ContinuousOutcomeError, ParseError, SchemaError
from .model import BINARY_LEVELS, ObservableJoint


@dataclass(frozen=True)
class Dataset:
    """Rows of observed ``(x, z, d, y)`` with their supports.

    ``levels`` is ``(0, 1)`` for binary treatment and ``(1, ..., K)`` otherwise.
    """

    x: tuple[str, ...]
    z: tuple[str, ...]
    d: tuple[int, ...]
    y: tuple[str, ...]
    x_support: tuple[str, ...]
    z_support: tuple[str, ...]
    y_support: tuple[str, ...]
    levels: tuple[int, ...] = BINARY_LEVELS
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        n = len(self.x)
        if not (len(self.z) == len(self.d) == len(self.y) == n):
            raise SchemaError("columns have different lengths")

    def __len__(self) -> int:
        return len(self.x)

    @property
    def is_binary(self) -> bool:
        return self.levels == BINARY_LEVELS

    def empty_cells(self) -> list[tuple[str, str]]:
        seen = set(zip(self.x, self.z))
        return [(x, z) for x in self.x_support for z in self.z_support if (x, z) not in seen]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "z", "d", "y"])
        writer.writerows(zip(self.x, self.z, self.d, self.y))
        return buf.getvalue()


def _bin_labels(edges: Sequence[float]) -> list[str]:
    bounds = ["-inf"] + [repr(float(e)) for e in edges] + ["inf"]
    return [f"[{lo},{hi})" for lo, hi in zip(bounds, bounds[1:])]


def ingest_csv(path: Union[str, Path, io.TextIOBase], x_col: str = "x", z_col: str = "z",
               d_col: str = "d", y_col: str = "y", bins: Optional[Sequence[float]] = None) -> Dataset:
    """Read a CSV of observations.

    Labels are compared as exact strings. Treatment levels must be contiguous
    integers: ``{0, 1}`` is binary, anything else becomes ``1..K`` (a shift is
    recorded in ``notes``). Numeric non-integer outcomes need ``bins`` (cut
    points); they are then replaced by interval labels.
    """
    if isinstance(path, (str, Path)):
        with open(path, newline="") as fh:
            text = fh.read()
    else:
        text = path.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", line=1) from None
    header = [h.strip() for h in header]
    missing = [c for c in (x_col, z_col, d_col, y_col) if c not in header]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")
    pos = {c: header.index(c) for c in (x_col, z_col, d_col, y_col)}
    xs, zs, ds, ys = [], [], [], []
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line)
        vals = {c: row[i].strip() for c, i in pos.items()}
        empty = [c for c, v in vals.items() if v == ""]
        if empty:
            raise ParseError(f"missing value for {', '.join(empty)}", line=line)
        try:
            d = int(vals[d_col])
        except ValueError:
            raise ParseError(f"treatment {vals[d_col]!r} is not an integer", line=line) from None
        xs.append(vals[x_col])
        zs.append(vals[z_col])
        ds.append(d)
        ys.append(vals[y_col])
    if not xs:
        raise ParseError("no data rows", line=2)

    notes = []
    present = sorted(set(ds))
    if set(present) <= {0, 1}:
        levels = BINARY_LEVELS
    else:
        if present != list(range(present[0], present[-1] + 1)):
            raise SchemaError(f"treatment levels {present} are not contiguous")
        shift = 1 - present[0]
        if shift:
            ds = [d + shift for d in ds]
            notes.append(f"treatment levels {present} relabeled to 1..{len(present)}")
        levels = tuple(range(1, len(present) + 1))

    ys = _outcome_labels(ys, bins)
    if bins is not None:
        notes.append(f"outcomes binned at cut points {list(bins)}")
        y_support = tuple(_bin_labels(bins))
    else:
        y_support = tuple(sorted(set(ys)))
    return Dataset(tuple(xs), tuple(zs), tuple(ds), tuple(ys), tuple(sorted(set(xs))),
                   tuple(sorted(set(zs))), y_support, levels, tuple(notes))


def _outcome_labels(ys: list[str], bins: Optional[Sequence[float]]) -> list[str]:
    numeric = []
    for y in ys:
        try:
            numeric.append(float(y))
        except ValueError:
            numeric = None
            break
    if bins is not None:
        if numeric is None:
            raise SchemaError("binning requested but outcomes are not numeric")
        labels = _bin_labels(bins)
        idx = np.digitize(np.asarray(numeric), np.asarray(bins, dtype=float), right=False)
        return [labels[i] for i in idx]
    if numeric is not None and any(not v.is_integer() for v in numeric):
        raise ContinuousOutcomeError("outcome looks continuous; pass bin cut points")
    return ys


def empirical_model(ds: Dataset) -> ObservableJoint:
    """Cell frequencies ``count / n`` of the observables, kept exact.

    Response types are not identified from data, so only the observable joint
    is built.
    """
    if len(ds) == 0:
        raise SchemaError("dataset is empty")
    counts: dict[tuple, int] = {}
    for key in zip(ds.x, ds.z, ds.d, ds.y):
        counts[key] = counts.get(key, 0) + 1
    n = len(ds)
    prob = {key: Fraction(c, n) for key, c in counts.items()}
    notes = ds.notes
    if ds.empty_cells():
        notes = notes + (f"empty (x, z) cells: {ds.empty_cells()}",)
    return ObservableJoint(ds.z_support, ds.x_support, ds.y_support, ds.levels, prob, counts, notes)
