"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from .data import Dataset
from .exceptions import SchemaError
from .model import BINARY_LEVELS


def _labels(col) -> tuple[str, ...]:
    # labels are compared as strings, so 1 and "1" name the same cell
    return tuple(str(v) for v in col)


def check_xz(X) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split a two-column ``(x, z)`` array-like into label tuples."""
    arr = check_array(X, dtype=None, ensure_all_finite=False)
    if arr.shape[1] != 2:
        raise SchemaError(f"X must have two columns (x, z), got {arr.shape[1]}")
    return _labels(arr[:, 0]), _labels(arr[:, 1])


def check_treatment(d, binary: bool = True) -> tuple[int, ...]:
    """Integer treatment vector; binary requires values in {0, 1}."""
    arr = np.asarray(d).ravel()
    try:
        ints = arr.astype(np.int64)
    except (TypeError, ValueError):
        raise SchemaError("treatment must be integer valued") from None
    if not np.array_equal(ints, arr.astype(float)):
        raise SchemaError("treatment must be integer valued")
    if binary and not set(ints.tolist()) <= set(BINARY_LEVELS):
        raise SchemaError("binary treatment must take values in {0, 1}")
    return tuple(int(v) for v in ints)


def to_dataset(X, d, binary: bool = True) -> Dataset:
    """Bundle ``(x, z)`` features and treatment into a :class:`Dataset` with a placeholder outcome."""
    xs, zs = check_xz(X)
    ds = check_treatment(d, binary)
    check_consistent_length(xs, ds)
    if binary:
        levels = BINARY_LEVELS
    else:
        present = sorted(set(ds))
        if present != list(range(1, len(present) + 1)):
            raise SchemaError(f"ordered treatment must use levels 1..K, got {present}")
        levels = tuple(present)
    return Dataset(xs, zs, ds, ("*",) * len(ds), tuple(sorted(set(xs))), tuple(sorted(set(zs))),
                   ("*",), levels)
