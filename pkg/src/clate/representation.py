"""Separable latent-index representation ``D_z = 1{m(z) >= q(X, U)}``.

The construction goes propensity table -> instrument index ``m`` -> one
cutoff per response type. Cutoffs double as the latent variable in its
"folded" form (``q(x, u) = u``), and :func:`normalize_uniform` re-expresses
the latent law as a uniform variable on [0, 1] through the distributional
transform, since discrete latent laws are not absolutely continuous.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Callable, Mapping, NamedTuple, Optional, Sequence

from .exceptions import (
    AnchorNotStrictError,
    MonotonicityError,
    NonThresholdTypeError,
    RankInvarianceError,
    ShapeError,
)
from .model import (
    CheckResult,
    FiniteModel,
    FlipWitness,
    PropensityMatrix,
    ResponseType,
    TypeMass,
    classify_monotonicity,
    propensity_matrix,
    _cell_direction,
)

DEFAULT_TOL = 0.02
DEFAULT_MIN_CELL = 30


@dataclass(frozen=True)
class IndexFunction:
    """Instrument index ``m``; only the induced weak order is meaningful."""

    z_support: tuple[str, ...]
    values: Mapping[str, Fraction]

    def __post_init__(self):
        object.__setattr__(self, "z_support", tuple(self.z_support))
        object.__setattr__(self, "values", {z: Fraction(self.values[z]) for z in self.z_support})

    def __call__(self, z: str) -> Fraction:
        return self.values[z]

    def levels(self) -> list[Fraction]:
        """Distinct index levels, ascending."""
        return sorted(set(self.values.values()))

    def order(self) -> tuple[tuple[str, ...], ...]:
        """Equivalence classes of the weak order, lowest first, members in support order."""
        return tuple(
            tuple(z for z in self.z_support if self.values[z] == level) for level in self.levels()
        )

    def transform(self, fn: Callable[[Fraction], Fraction]) -> "IndexFunction":
        return IndexFunction(self.z_support, {z: fn(v) for z, v in self.values.items()})


@dataclass(frozen=True)
class RankInvarianceReport:
    """Whether the instrument ordering by propensity is the same in every cell.

    ``merged_order`` lists equivalence classes lowest first. On samples,
    ``underpowered`` names the ``(z, x)`` cells too small to compare.
    """

    status: str
    merged_order: Optional[tuple[tuple[str, ...], ...]] = None
    witness: Optional[FlipWitness] = None
    underpowered: tuple[tuple[str, str], ...] = ()
    estimate: bool = False

    @property
    def consistent(self) -> bool:
        return self.status == "Consistent"


def cell_tolerance(p: Fraction, n: int, tol: float = DEFAULT_TOL) -> float:
    """``max(tol, 3 * sqrt(p (1 - p) / n))`` for an estimated cell probability."""
    p = min(max(float(p), 0.0), 1.0)
    return max(tol, 3.0 * (p * (1.0 - p) / n) ** 0.5)


def _pair_sign(pi: PropensityMatrix, z: str, zp: str, x: str, tol: float, min_cell: int):
    """Sign of ``pi(z, x) - pi(z', x)``; ``None`` when the comparison cannot be made."""
    a, b = pi.values[x, z], pi.values[x, zp]
    if a is None or b is None:
        return None
    if not pi.is_empirical:
        return (a > b) - (a < b)
    na, nb = pi.counts[x, z], pi.counts[x, zp]
    if na < min_cell or nb < min_cell:
        return None
    eps = max(cell_tolerance(a, na, tol), cell_tolerance(b, nb, tol))
    diff = float(a - b)
    return 1 if diff > eps else -1 if diff < -eps else 0


def _row_average(pi: PropensityMatrix, z: str) -> Fraction:
    vals = [pi.values[x, z] for x in pi.x_support if pi.values[x, z] is not None]
    if not vals:
        return Fraction(0)
    return sum(vals, Fraction(0)) / len(vals)


def check_rank_invariance(pi: PropensityMatrix, tol: float = DEFAULT_TOL,
                          min_cell: int = DEFAULT_MIN_CELL) -> RankInvarianceReport:
    """Is ``pi(z, x) >= pi(z', x)`` at one cell enough to imply it at every cell?

    Exact tables are compared exactly. Empirical tables only count a
    difference that exceeds the per-cell tolerance, and skip cells with fewer
    than ``min_cell`` rows (they are listed as underpowered). The witness is
    the lexicographically first ``(z, z', x, x')`` in support order.
    """
    zs, xs = pi.z_support, pi.x_support
    underpowered = ()
    if pi.is_empirical:
        underpowered = tuple(
            (z, x) for x in xs for z in zs
            if pi.values[x, z] is None or pi.counts[x, z] < min_cell
        )
    for i, j in combinations(range(len(zs)), 2):
        signs = [_pair_sign(pi, zs[i], zs[j], x, tol, min_cell) for x in xs]
        for a in range(len(xs)):
            if not signs[a]:
                continue
            for b in range(a + 1, len(xs)):
                if signs[b] and signs[b] == -signs[a]:
                    return RankInvarianceReport(
                        "Violated", None, FlipWitness(zs[i], zs[j], xs[a], xs[b]),
                        underpowered, pi.is_empirical,
                    )
    avg = {z: _row_average(pi, z) for z in zs}
    order = tuple(
        tuple(z for z in zs if avg[z] == level) for level in sorted(set(avg.values()))
    )
    return RankInvarianceReport("Consistent", order, None, underpowered, pi.is_empirical)


def construct_index_m(pi: PropensityMatrix, anchor: Optional[str] = None,
                      tol: float = DEFAULT_TOL, min_cell: int = DEFAULT_MIN_CELL) -> IndexFunction:
    """Instrument index from a rank-invariant propensity table.

    With an ``anchor`` cell, ``m(z) = pi(z, anchor)``; otherwise the row
    average over covariate cells, which realizes the same weak order.
    """
    report = check_rank_invariance(pi, tol, min_cell)
    if not report.consistent:
        raise RankInvarianceError(f"propensity orderings disagree: {report.witness}", report.witness)
    if anchor is None:
        return IndexFunction(pi.z_support, {z: _row_average(pi, z) for z in pi.z_support})
    if anchor not in pi.x_support:
        raise KeyError(f"unknown anchor cell {anchor!r}")
    column = pi.column(anchor)
    classes = report.merged_order
    for c1, c2 in combinations(classes, 2):
        for z in c1:
            for zp in c2:
                if column[z] == column[zp]:
                    raise AnchorNotStrictError(
                        f"anchor {anchor!r} ties {z!r} and {zp!r}, which other cells separate",
                        (z, zp),
                    )
    if any(v is None for v in column.values()):
        raise AnchorNotStrictError(f"anchor {anchor!r} has empty cells")
    return IndexFunction(pi.z_support, column)


# ---------------------------------------------------------------- representation


@dataclass(frozen=True)
class Interval:
    """Subinterval ``[lo, hi)`` of u*-space (the last one is closed at 1)."""

    lo: Fraction
    hi: Fraction
    threshold: Fraction
    members: tuple[int, ...]

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo


@dataclass(frozen=True)
class NormalizedForm:
    """``(q*, U*)`` with ``U* ~ Unif[0, 1]`` independent of ``(X, Z)``."""

    intervals: Mapping[str, tuple[Interval, ...]]

    def q_star(self, x: str, u_star: Fraction) -> Fraction:
        cells = self.intervals[x]
        if not 0 <= u_star <= 1:
            raise ValueError("u* must lie in [0, 1]")
        k = bisect.bisect_right([iv.lo for iv in cells], u_star) - 1
        return cells[k].threshold

    def treated_measure(self, x: str, mu: Fraction) -> Fraction:
        """Lebesgue measure of ``{u*: mu >= q*(x, u*)}``."""
        return sum((iv.length for iv in self.intervals[x] if mu >= iv.threshold), Fraction(0))


@dataclass(frozen=True)
class IndexRepresentation:
    """``(m, q, U)`` with ``D_z = 1{m(z) >= q(x, u)}`` on every positive-mass point.

    ``coupling[x]`` pairs each positive-mass type index of the model's cell
    ``x`` with its latent value; ``u_law[x]`` is the resulting law of ``U``.
    ``lower``/``upper`` are the finite stand-ins for -inf/+inf.
    """

    m: IndexFunction
    q: Mapping[tuple[str, Fraction], Fraction]
    u_law: Mapping[str, tuple[tuple[Fraction, Fraction], ...]]
    coupling: Mapping[str, tuple[tuple[int, Fraction], ...]]
    lower: Fraction
    upper: Fraction
    normalized: Optional[NormalizedForm] = None
    notes: tuple[str, ...] = field(default=())

    @property
    def z_support(self) -> tuple[str, ...]:
        return self.m.z_support

    @property
    def x_support(self) -> tuple[str, ...]:
        return tuple(self.u_law)

    def threshold(self, x: str, u: Fraction) -> Fraction:
        return self.q[x, u]

    def folded_law(self, x: str) -> list[tuple[Fraction, Fraction]]:
        """Law of ``U~ = q(x, U)`` given ``X = x``, ascending."""
        law: dict[Fraction, Fraction] = {}
        for u, p in self.u_law[x]:
            t = self.q[x, u]
            law[t] = law.get(t, Fraction(0)) + p
        return sorted(law.items())

    def transform(self, fn: Callable[[Fraction], Fraction]) -> "IndexRepresentation":
        """Apply a strictly increasing map to index and thresholds alike."""
        normalized = None
        if self.normalized is not None:
            normalized = NormalizedForm({
                x: tuple(replace(iv, threshold=fn(iv.threshold)) for iv in cells)
                for x, cells in self.normalized.intervals.items()
            })
        return replace(
            self,
            m=self.m.transform(fn),
            q={key: fn(t) for key, t in self.q.items()},
            lower=fn(self.lower),
            upper=fn(self.upper),
            normalized=normalized,
        )


def _sentinels(m: IndexFunction) -> tuple[Fraction, Fraction]:
    levels = m.levels()
    return levels[0] - 1, levels[-1] + 1


def _realizes_order(model: FiniteModel, m: IndexFunction) -> bool:
    """Does ``m`` order every pair the way the model's types do?"""
    zs = model.z_support
    for i, j in combinations(range(len(zs)), 2):
        direction = 0
        for x in model.x_support:
            sign, _, _ = _cell_direction(model, x, i, j)
            direction = direction or sign
        diff = m(zs[i]) - m(zs[j])
        if (diff > 0) - (diff < 0) != direction:
            return False
    return True


def construct_representation(model: FiniteModel, anchor: Optional[str] = None,
                             m: Optional[IndexFunction] = None) -> IndexRepresentation:
    """Build ``(m, q, U)`` for a globally monotone binary model.

    Each response type becomes a threshold rule with cutoff equal to the
    smallest index level it accepts (``lower`` for always-takers, ``upper``
    for never-takers). The latent value of a type is its cutoff and
    ``q(x, u) = u``. A caller-supplied ``m`` must order instruments the way
    the model does.
    """
    verdict = classify_monotonicity(model)
    if not verdict.is_global:
        raise MonotonicityError(
            f"no separable index: model is {verdict.verdict}", verdict, verdict.witnesses
        )
    if m is None:
        m = construct_index_m(propensity_matrix(model, require_interior=False), anchor)
    elif not _realizes_order(model, m):
        raise ValueError("supplied index does not realize the model's instrument order")
    lower, upper = _sentinels(m)
    zs = model.z_support
    q, u_law, coupling = {}, {}, {}
    for x in model.x_support:
        pairs, law = [], {}
        for idx, tm in model.positive_types(x):
            accepted = [m(z) for z, d in zip(zs, tm.treatment) if d == 1]
            if len(accepted) == len(zs):
                cut = lower
            elif accepted:
                cut = min(accepted)
            else:
                cut = upper
            if any((m(z) >= cut) != (d == 1) for z, d in zip(zs, tm.treatment)):
                raise NonThresholdTypeError(
                    f"type {tm.treatment} at {x!r} is not a threshold rule in m"
                )
            pairs.append((idx, cut))
            law[cut] = law.get(cut, Fraction(0)) + tm.prob
            q[x, cut] = cut
        coupling[x] = tuple(pairs)
        u_law[x] = tuple(sorted(law.items()))
    return IndexRepresentation(m, q, u_law, coupling, lower, upper)


def pushforward(m: IndexFunction, q: Mapping[tuple[str, Fraction], Fraction],
                u_law: Mapping[str, Sequence[tuple[Fraction, Fraction]]],
                pzx: Mapping[tuple[str, str], Fraction], y_support: Sequence[str],
                outcome_laws: Mapping[tuple[str, Fraction], Sequence] = None,
                lower: Optional[Fraction] = None, upper: Optional[Fraction] = None,
                ) -> tuple[FiniteModel, IndexRepresentation]:
    """Model generated by a latent-index triple, plus the matching representation.

    Each latent value ``u`` at cell ``x`` becomes one response type with
    ``D_z = 1{m(z) >= q(x, u)}``. ``outcome_laws[x, u]`` gives the law of
    ``(Y_0, Y_1)`` for that latent value (default: point mass on the first
    outcome label for both arms).
    """
    zs = m.z_support
    xs = tuple(u_law)
    default = ((tuple([y_support[0]] * 2), Fraction(1)),)
    types, coupling = {}, {}
    for x in xs:
        cell, pairs = [], []
        for u, p in u_law[x]:
            t = ResponseType(tuple(int(m(z) >= q[x, u]) for z in zs))
            law = default if outcome_laws is None else outcome_laws[x, u]
            pairs.append((len(cell), u))
            cell.append(TypeMass(t, p, tuple(law)))
        types[x] = tuple(cell)
        coupling[x] = tuple((i, u) for i, u in pairs if cell[i].prob > 0)
    model = FiniteModel(zs, xs, tuple(y_support), pzx, types)
    lo, hi = _sentinels(m)
    rep = IndexRepresentation(
        m, dict(q), {x: tuple(u_law[x]) for x in xs}, coupling,
        lo if lower is None else lower, hi if upper is None else upper,
    )
    return model, rep


class RepWitness(NamedTuple):
    kind: str
    x: str
    z: Optional[str]
    type_index: Optional[int]
    detail: str = ""


def verify_representation(model: FiniteModel, rep: IndexRepresentation) -> CheckResult:
    """Exhaustive check of a representation against a model.

    Checks, in order: every positive-mass type is coupled to a latent value;
    ``1{m(z) >= q(x, u)}`` reproduces ``D_z`` at every such point; the stored
    law of ``U`` given ``X`` is the pushforward of the type shares; and the
    laws of ``U`` and of ``(Y, U)`` given ``(X, Z)`` do not move with ``z``.
    """
    if set(model.z_support) != set(rep.z_support) or set(model.x_support) != set(rep.x_support):
        raise ShapeError("model and representation supports differ")
    zs = model.z_support
    for x in model.x_support:
        coupled = dict(rep.coupling[x])
        for idx, tm in model.positive_types(x):
            if idx not in coupled:
                return CheckResult(False, RepWitness("uncoupled", x, None, idx),
                                   f"type {idx} at {x!r} has no latent value")
            thr = rep.q.get((x, coupled[idx]))
            if thr is None:
                return CheckResult(False, RepWitness("q-undefined", x, None, idx))
            for z, d in zip(zs, tm.treatment):
                if int(rep.m(z) >= thr) != d:
                    return CheckResult(
                        False, RepWitness("reproduction", x, z, idx, f"D_z={d}"),
                        f"1{{m({z})>=q}} != D_z for type {idx} at {x!r}",
                    )
        pushed: dict[Fraction, Fraction] = {}
        for idx, u in rep.coupling[x]:
            pushed[u] = pushed.get(u, Fraction(0)) + model.types[x][idx].prob
        stored = {u: p for u, p in rep.u_law[x] if p != 0}
        if {u: p for u, p in pushed.items() if p != 0} != stored:
            return CheckResult(False, RepWitness("u-law", x, None, None),
                               f"stored law of U at {x!r} is not the type pushforward")
        # laws of U and (Y, U) given (x, z), built from P(x, z, type) / P(x, z)
        u_laws, yu_laws = [], []
        for z in zs:
            cell_mass = model.pzx[x, z]
            lu: dict = {}
            lyu: dict = {}
            for idx, u in rep.coupling[x]:
                tm = model.types[x][idx]
                w = cell_mass * tm.prob / cell_mass
                lu[u] = lu.get(u, Fraction(0)) + w
                for outcomes, p in tm.outcome_law:
                    lyu[outcomes, u] = lyu.get((outcomes, u), Fraction(0)) + w * p
            u_laws.append(lu)
            yu_laws.append(lyu)
        for k, z in enumerate(zs[1:], start=1):
            if u_laws[k] != u_laws[0]:
                return CheckResult(False, RepWitness("u-dependence", x, z, None))
            if yu_laws[k] != yu_laws[0]:
                return CheckResult(False, RepWitness("yu-dependence", x, z, None))
    return CheckResult(True)


# ---------------------------------------------------------------- normalization

NORMALIZATION_NOTE = (
    "latent law is discrete, so U* is built with the distributional transform "
    "(randomized probability-integral transform), not F(U) directly"
)


def normalize_uniform(rep: IndexRepresentation, model: FiniteModel) -> IndexRepresentation:
    """Attach ``(q*, U*)`` with ``U*`` uniform on [0, 1].

    Latent values are laid out in increasing order of their threshold and
    each takes an interval of u*-space as long as its mass, so thresholds in
    u*-space sit at the cumulative type shares. Drawing ``U*`` uniformly
    inside its value's interval is the distributional transform.
    """
    check = verify_representation(model, rep)
    if not check:
        raise ValueError(f"representation does not verify: {check.witness}")
    intervals = {}
    for x in model.x_support:
        members: dict[Fraction, list[int]] = {}
        for idx, u in rep.coupling[x]:
            members.setdefault(u, []).append(idx)
        lo = Fraction(0)
        cells = []
        for u, p in sorted(rep.u_law[x], key=lambda up: (rep.q[x, up[0]], up[0])):
            if p == 0:
                continue
            cells.append(Interval(lo, lo + p, rep.q[x, u], tuple(members.get(u, ()))))
            lo += p
        intervals[x] = tuple(cells)
    notes = rep.notes + (NORMALIZATION_NOTE,) if NORMALIZATION_NOTE not in rep.notes else rep.notes
    return replace(rep, normalized=NormalizedForm(intervals), notes=notes)


def verify_normalized(model: FiniteModel, rep: IndexRepresentation) -> CheckResult:
    """Check the uniform form: exact propensities, reproduction, uniform partition."""
    if rep.normalized is None:
        return CheckResult(False, None, "no normalized form attached")
    pi = propensity_matrix(model, require_interior=False)
    zs = model.z_support
    for x in model.x_support:
        cells = rep.normalized.intervals[x]
        if not cells or cells[0].lo != 0 or cells[-1].hi != 1:
            return CheckResult(False, ("partition", x), "intervals must cover [0, 1]")
        for a, b in zip(cells, cells[1:]):
            if a.hi != b.lo or a.threshold > b.threshold:
                return CheckResult(False, ("partition", x), "intervals must be contiguous and q* nondecreasing")
        if sum((iv.length for iv in cells), Fraction(0)) != 1:
            return CheckResult(False, ("partition", x), "interval masses must sum to 1")
        for iv in cells:
            if iv.length != sum((model.types[x][i].prob for i in iv.members), Fraction(0)):
                return CheckResult(False, ("mass", x, iv.lo), "interval length != type mass")
            for i in iv.members:
                for z, d in zip(zs, model.types[x][i].treatment):
                    if int(rep.m(z) >= iv.threshold) != d:
                        return CheckResult(False, ("reproduction", x, z, i), "q* does not reproduce D_z")
        for z in zs:
            if rep.normalized.treated_measure(x, rep.m(z)) != pi.values[x, z]:
                return CheckResult(False, ("propensity", x, z), "treated u*-measure != pi(z, x)")
    return CheckResult(True)
