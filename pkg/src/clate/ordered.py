"""Ordered treatment levels ``1..K``: binarization, common index, random thresholds.

The index is ``d(z) = E[D_z]``. Each binarization ``1{D_z > k}`` must be
globally monotone and ordered by ``d``; then every response type is a
nondecreasing step function of ``d`` and its jump points are the thresholds
``U_1 <= ... <= U_{K-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations
from typing import Callable, Mapping, NamedTuple, Optional, Sequence

from .exceptions import AmbiguousIndexError, LevelRangeError, MonotonicityError, ShapeError
from .model import (
    CheckResult,
    FiniteModel,
    OrderedModel,
    ResponseType,
    TypeMass,
    classify_monotonicity,
    propensity_matrix,
)
from .representation import IndexFunction

COLLAPSED_OUTCOME = "*"


def binarize_levels(model: FiniteModel, k: int) -> FiniteModel:
    """Binary model of ``D_z^k = 1{D_z > k}``.

    For K = 2 the potential outcomes carry over, ``(Y_1, Y_2)`` becoming
    ``(Y_0, Y_1)``. For K > 2 the indicator has no potential outcomes of its
    own, so the outcome support collapses to a single label.
    """
    K = len(model.levels)
    if not 1 <= k <= K - 1:
        raise LevelRangeError(f"binarization level must lie in 1..{K - 1}, got {k}")
    keep_outcomes = K == 2
    collapsed = (((COLLAPSED_OUTCOME, COLLAPSED_OUTCOME), Fraction(1)),)
    types = {}
    for x in model.x_support:
        types[x] = tuple(
            TypeMass(
                ResponseType(tuple(int(d > k) for d in tm.treatment)),
                tm.prob,
                tm.outcome_law if keep_outcomes else collapsed,
            )
            for tm in model.types[x]
        )
    y_support = model.y_support if keep_outcomes else (COLLAPSED_OUTCOME,)
    return FiniteModel(model.z_support, model.x_support, y_support, dict(model.pzx), types)


def mean_treatment(model: FiniteModel) -> dict[str, Fraction]:
    """``d(z) = E[D_z]`` over the whole population."""
    out = {}
    for i, z in enumerate(model.z_support):
        out[z] = sum(
            (model.p_x(x) * tm.prob * tm.treatment[i]
             for x in model.x_support for _, tm in model.positive_types(x)),
            Fraction(0),
        )
    return out


def _level_law(model: FiniteModel, i: int) -> dict[int, Fraction]:
    law: dict[int, Fraction] = {}
    for x in model.x_support:
        for _, tm in model.positive_types(x):
            level = tm.treatment[i]
            law[level] = law.get(level, Fraction(0)) + model.p_x(x) * tm.prob
    return law


def ordered_index(model: FiniteModel) -> IndexFunction:
    """Common index ``m = d`` for all K - 1 binarizations.

    Raises :class:`MonotonicityError` (with ``level`` set when a particular
    binarization is to blame) and :class:`AmbiguousIndexError` for equal
    means with different level laws.
    """
    zs = model.z_support
    K = len(model.levels)
    binaries = {}
    for k in range(1, K):
        b = binarize_levels(model, k)
        verdict = classify_monotonicity(b)
        if not verdict.is_global:
            raise MonotonicityError(
                f"binarization at level {k} is {verdict.verdict}", verdict, verdict.witnesses, level=k
            )
        binaries[k] = propensity_matrix(b, require_interior=False)

    # a pair ranked one way at some level and the other way at another
    for i, j in combinations(range(len(zs)), 2):
        seen = {}
        for k, pi in binaries.items():
            for x in model.x_support:
                diff = pi.values[x, zs[i]] - pi.values[x, zs[j]]
                if diff:
                    sign = 1 if diff > 0 else -1
                    if -sign in seen:
                        raise MonotonicityError(
                            f"levels {seen[-sign]} and {k} order {zs[i]!r}, {zs[j]!r} oppositely",
                            witnesses=[(zs[i], zs[j], seen[-sign], k)], level=k,
                        )
                    seen.setdefault(sign, k)

    d = mean_treatment(model)
    for i, j in combinations(range(len(zs)), 2):
        if d[zs[i]] == d[zs[j]] and _level_law(model, i) != _level_law(model, j):
            raise AmbiguousIndexError(
                f"{zs[i]!r} and {zs[j]!r} share E[D_z] but not the law of D_z", (zs[i], zs[j])
            )

    for k, pi in binaries.items():
        for x in model.x_support:
            for z in zs:
                for zp in zs:
                    a, b = pi.values[x, z], pi.values[x, zp]
                    if (d[z] > d[zp] and a < b) or (d[z] == d[zp] and a != b):
                        raise MonotonicityError(
                            f"level-{k} propensity at {x!r} is not a nondecreasing function of d",
                            witnesses=[(z, zp, x)], level=k,
                        )

    verdict = classify_monotonicity(model)
    if not verdict.is_global:
        raise MonotonicityError(f"ordered model is {verdict.verdict}", verdict, verdict.witnesses)
    return IndexFunction(zs, d)


@dataclass(frozen=True)
class ThresholdRepresentation:
    """Random thresholds ``U_1 <= ... <= U_{K-1}`` per response type.

    ``thresholds[x]`` lists ``(type_index, (U_1, ..., U_{K-1}), prob)`` for
    every positive-mass type of cell ``x``; ``lower``/``upper`` stand in for
    ``U_0 = -inf`` and ``U_K = +inf``.
    """

    m: IndexFunction
    thresholds: Mapping[str, tuple[tuple[int, tuple[Fraction, ...], Fraction], ...]]
    lower: Fraction
    upper: Fraction
    K: int

    @property
    def z_support(self):
        return self.m.z_support

    @property
    def x_support(self):
        return tuple(self.thresholds)

    def full_vector(self, us: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        return (self.lower,) + tuple(us) + (self.upper,)

    def level_of(self, mu: Fraction, us: tuple[Fraction, ...]) -> Optional[int]:
        """The ``k`` with ``U_{k-1} <= mu < U_k``, or None if there is none."""
        full = self.full_vector(us)
        for k in range(1, self.K + 1):
            if full[k - 1] <= mu < full[k]:
                return k
        return None

    def threshold_law(self, x: str) -> dict[tuple[Fraction, ...], Fraction]:
        law: dict[tuple, Fraction] = {}
        for _, us, p in self.thresholds[x]:
            law[us] = law.get(us, Fraction(0)) + p
        return law

    def restrict(self, k: int) -> dict[str, tuple[tuple[int, Fraction], ...]]:
        """Coupling of each type with ``U_k`` alone."""
        return {x: tuple((idx, us[k - 1]) for idx, us, _ in cells) for x, cells in self.thresholds.items()}

    def transform(self, fn: Callable[[Fraction], Fraction]) -> "ThresholdRepresentation":
        return replace(
            self,
            m=self.m.transform(fn),
            thresholds={
                x: tuple((idx, tuple(fn(u) for u in us), p) for idx, us, p in cells)
                for x, cells in self.thresholds.items()
            },
            lower=fn(self.lower),
            upper=fn(self.upper),
        )


def construct_ordered_representation(model: FiniteModel) -> ThresholdRepresentation:
    """Thresholds ``U_k = min{m(z) : D_z > k}`` (``upper`` when the type never exceeds k)."""
    m = ordered_index(model)
    zs = model.z_support
    K = len(model.levels)
    levels = m.levels()
    lower, upper = levels[0] - 1, levels[-1] + 1
    thresholds = {}
    for x in model.x_support:
        cells = []
        for idx, tm in model.positive_types(x):
            for a, b in combinations(range(len(zs)), 2):
                da, db = tm.treatment[a], tm.treatment[b]
                ma, mb = m(zs[a]), m(zs[b])
                if (ma == mb and da != db) or (ma > mb and da < db) or (ma < mb and da > db):
                    raise MonotonicityError(
                        f"type {tm.treatment} at {x!r} is not a step function of the index",
                        witnesses=[(zs[a], zs[b], x, tm.treatment)],
                    )
            us = []
            for k in range(1, K):
                above = [m(z) for z, d in zip(zs, tm.treatment) if d > k]
                us.append(min(above) if above else upper)
            cells.append((idx, tuple(us), tm.prob))
        thresholds[x] = tuple(cells)
    return ThresholdRepresentation(m, thresholds, lower, upper, K)


class OrderedWitness(NamedTuple):
    kind: str
    x: str
    z: Optional[str]
    type_index: Optional[int]
    detail: str = ""


def verify_ordered(model: FiniteModel, rep: ThresholdRepresentation) -> CheckResult:
    """Exhaustive check of ordering, reproduction and independence from ``Z``."""
    if set(model.z_support) != set(rep.z_support) or set(model.x_support) != set(rep.x_support):
        raise ShapeError("model and representation supports differ")
    if rep.K != len(model.levels):
        raise ShapeError(f"representation has K={rep.K}, model has {len(model.levels)} levels")
    zs = model.z_support
    offset = model.levels[0] - 1
    for x in model.x_support:
        coupled = {idx: (us, p) for idx, us, p in rep.thresholds[x]}
        for idx, tm in model.positive_types(x):
            if idx not in coupled:
                return CheckResult(False, OrderedWitness("uncoupled", x, None, idx))
            us, p = coupled[idx]
            if p != tm.prob:
                return CheckResult(False, OrderedWitness("mass", x, None, idx))
            full = rep.full_vector(us)
            if len(us) != rep.K - 1 or any(a > b for a, b in zip(full, full[1:])):
                return CheckResult(False, OrderedWitness("ordering", x, None, idx, str(us)),
                                   f"thresholds of type {idx} at {x!r} are not ordered")
            for z, d in zip(zs, tm.treatment):
                level = rep.level_of(rep.m(z), us)
                if level is None or level + offset != d:
                    return CheckResult(False, OrderedWitness("reproduction", x, z, idx, f"D_z={d}"),
                                       f"thresholds place m({z}) at level {level}, D_z={d}")
        laws = []
        for z in zs:
            law: dict = {}
            for idx, us, _ in rep.thresholds[x]:
                tm = model.types[x][idx]
                w = model.pzx[x, z] * tm.prob / model.pzx[x, z]
                for outcomes, p in tm.outcome_law:
                    law[us, outcomes] = law.get((us, outcomes), Fraction(0)) + w * p
            laws.append(law)
        for k, z in enumerate(zs[1:], start=1):
            if laws[k] != laws[0]:
                return CheckResult(False, OrderedWitness("z-dependence", x, z, None))
    return CheckResult(True)


def as_ordered(model: FiniteModel) -> OrderedModel:
    """View a binary model as ordered with levels ``{1, 2}``."""
    if isinstance(model, OrderedModel):
        return model
    shift = 1 - model.levels[0]
    types = {
        x: tuple(TypeMass(ResponseType(tuple(d + shift for d in tm.treatment)), tm.prob, tm.outcome_law)
                 for tm in model.types[x])
        for x in model.x_support
    }
    return OrderedModel(model.z_support, model.x_support, model.y_support, dict(model.pzx), types,
                        tuple(v + shift for v in model.levels))


def ordered_pushforward(m: IndexFunction, cells: Mapping[str, Sequence], pzx, y_support, K: int,
                        lower: Optional[Fraction] = None, upper: Optional[Fraction] = None,
                        ) -> tuple[OrderedModel, ThresholdRepresentation]:
    """Ordered model generated by random thresholds.

    ``cells[x]`` lists ``(thresholds, prob, outcome_law)`` entries with
    ``len(thresholds) == K - 1``; the type chooses level ``k`` at ``z`` when
    ``U_{k-1} <= m(z) < U_k``.
    """
    levels = m.levels()
    lower = levels[0] - 1 if lower is None else lower
    upper = levels[-1] + 1 if upper is None else upper
    proto = ThresholdRepresentation(m, {}, lower, upper, K)
    types, thresholds = {}, {}
    for x, entries in cells.items():
        cell, coupled = [], []
        for us, p, law in entries:
            us = tuple(Fraction(u) for u in us)
            t = tuple(proto.level_of(m(z), us) for z in m.z_support)
            if None in t:
                raise ValueError(f"thresholds {us} do not place every index value")
            if p > 0:
                coupled.append((len(cell), us, Fraction(p)))
            cell.append(TypeMass(ResponseType(t), p, tuple(law)))
        types[x] = tuple(cell)
        thresholds[x] = tuple(coupled)
    model = OrderedModel(m.z_support, tuple(cells), tuple(y_support), pzx, types, K=K)
    return model, replace(proto, thresholds=thresholds)
