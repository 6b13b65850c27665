"""scikit-learn style wrappers for estimating the instrument index from samples.

``X`` holds two columns ``(x, z)`` and the target is the observed treatment.
``transform`` maps rows to ``m(z)``; ``predict_proba`` returns the fitted
cell frequencies.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .data import empirical_model
from .exceptions import RankInvarianceError, SchemaError
from .representation import (
    DEFAULT_MIN_CELL,
    DEFAULT_TOL,
    IndexFunction,
    check_rank_invariance,
    construct_index_m,
)
from .validation import check_xz, to_dataset


def _lookup(table, keys, what):
    try:
        return [table[k] for k in keys]
    except KeyError as exc:
        raise SchemaError(f"{what} {exc.args[0]!r} was not seen during fit") from None


class SeparableIndexEstimator(TransformerMixin, BaseEstimator):
    """Estimate ``pi(z, x)`` and a rank-invariant index ``m`` for binary treatment.

    Parameters
    ----------
    anchor : covariate cell whose propensity column is used as ``m``; row
        averages when None.
    tol : tolerance floor for propensity comparisons.
    min_cell : smallest cell that takes part in comparisons.

    ``fit`` raises :class:`RankInvarianceError` when the estimated orderings
    disagree across covariate cells.
    """

    def __init__(self, anchor=None, tol=DEFAULT_TOL, min_cell=DEFAULT_MIN_CELL):
        self.anchor = anchor
        self.tol = tol
        self.min_cell = min_cell

    def fit(self, X, y):
        ds = to_dataset(X, y, binary=True)
        pi = empirical_model(ds).propensity()
        self.rank_report_ = check_rank_invariance(pi, self.tol, self.min_cell)
        self.index_ = construct_index_m(pi, self.anchor, self.tol, self.min_cell)
        self.propensity_ = pi
        self.z_support_ = ds.z_support
        self.x_support_ = ds.x_support
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "index_")
        _, zs = check_xz(X)
        vals = _lookup(self.index_.values, zs, "instrument value")
        return np.array([float(v) for v in vals]).reshape(-1, 1)

    def predict_proba(self, X):
        check_is_fitted(self, "propensity_")
        xs, zs = check_xz(X)
        p = _lookup(self.propensity_.values, list(zip(xs, zs)), "cell")
        p = np.array([np.nan if v is None else float(v) for v in p])
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def index_order(self):
        """Weak order of instrument values, lowest class first."""
        check_is_fitted(self, "index_")
        return self.index_.order()


class OrderedIndexEstimator(TransformerMixin, BaseEstimator):
    """Ordered treatment on levels ``1..K``: ``m(z)`` is the average of ``E[D | z, x]`` over cells.

    Every binarization ``1{D > k}`` must have a rank-invariant propensity
    table, and all of them must order instruments the same way.
    """

    def __init__(self, tol=DEFAULT_TOL, min_cell=DEFAULT_MIN_CELL):
        self.tol = tol
        self.min_cell = min_cell

    def fit(self, X, y):
        ds = to_dataset(X, y, binary=False)
        obs = empirical_model(ds)
        K = len(ds.levels)
        reports = {}
        for k in range(1, K):
            pi = obs.binarize(k).propensity()
            rep = check_rank_invariance(pi, self.tol, self.min_cell)
            if not rep.consistent:
                raise RankInvarianceError(f"binarization at {k} is not rank invariant: {rep.witness}",
                                          rep.witness)
            reports[k] = rep
        means = {}
        for z in ds.z_support:
            cells = []
            for x in ds.x_support:
                law = obs.joint_dy(x, z)
                if law:
                    cells.append(sum((d * p for (d, _), p in law.items()), Fraction(0)))
            means[z] = sum(cells, Fraction(0)) / len(cells) if cells else Fraction(0)
        self.index_ = IndexFunction(ds.z_support, means)
        self.rank_reports_ = reports
        self.levels_ = ds.levels
        self.classes_ = np.array(ds.levels)
        self.observables_ = obs
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "index_")
        _, zs = check_xz(X)
        return np.array([float(v) for v in _lookup(self.index_.values, zs, "instrument value")]).reshape(-1, 1)

    def predict_proba(self, X):
        """``P(D = k | x, z)`` for each level, one column per level."""
        check_is_fitted(self, "observables_")
        xs, zs = check_xz(X)
        out = np.full((len(xs), len(self.levels_)), np.nan)
        cache = {}
        for r, key in enumerate(zip(xs, zs)):
            if key not in cache:
                if key[0] not in self.observables_.x_support or key[1] not in self.observables_.z_support:
                    raise SchemaError(f"cell {key!r} was not seen during fit")
                law = self.observables_.joint_dy(*key)
                cache[key] = [float(sum((p for (d, _), p in law.items() if d == k), Fraction(0)))
                              if law else np.nan for k in self.levels_]
            out[r] = cache[key]
        return out
