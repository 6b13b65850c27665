"""Observable implications of a separable index, and the audit pipeline.

Two families of checks run on the law of ``(X, Z, D, Y)``:

* sufficiency: among instrument values sharing an index level, the outcome
  law of the treated (and of the untreated) must not depend on which value;
* moment monotonicity: for nonnegative ``g``, ``E[D g(Y, X) | X, m(Z) = mu]``
  weakly increases in ``mu`` and ``E[(1 - D) g(Y, X) | ...]`` weakly decreases.

Population inputs are checked exactly. Samples use the plug-in tolerance
``max(tol, 3 sqrt(p (1 - p) / n))`` per compared cell; cells with fewer than
``min_cell`` rows are reported as underpowered rather than failed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Mapping, NamedTuple, Optional, Sequence, Union

from .data import Dataset, empirical_model
from .exceptions import (
    AmbiguousIndexError,
    AnchorNotStrictError,
    MonotonicityError,
    NegativityError,
    RankInvarianceError,
)
from .model import (
    FiniteModel,
    JointModel,
    ObservableJoint,
    PropensityMatrix,
    check_conditional_independence,
    classify_monotonicity,
    monotone_conditional,
    monotone_unconditional,
    observable_joint,
    propensity_matrix,
)
from .ordered import binarize_levels, construct_ordered_representation, verify_ordered
from .report import AuditReport, CheckEntry, canonical_json
from .representation import (
    DEFAULT_MIN_CELL,
    DEFAULT_TOL,
    NORMALIZATION_NOTE,
    IndexFunction,
    cell_tolerance,
    check_rank_invariance,
    construct_index_m,
    construct_representation,
    normalize_uniform,
    verify_normalized,
    verify_representation,
)
from .serialization import digest, model_to_json

WEAK_ORDER_NOTE = (
    "instrument orderings use weak inequalities: a tie in one cell with a strict "
    "difference in another is consistent, and the strict direction wins"
)
SAMPLE_NOTE = (
    "sample statistics are plug-in estimates compared with a tolerance; a failure "
    "is evidence, not a refutation"
)


class OutcomeFunction(NamedTuple):
    """Nonnegative test function ``g(y, x)`` stored as a table."""

    name: str
    table: Mapping[tuple[str, str], Fraction]

    def __call__(self, y: str, x: str) -> Fraction:
        return self.table[y, x]


def constant_function(y_support: Sequence[str], x_support: Sequence[str], c=1) -> OutcomeFunction:
    c = Fraction(c)
    return OutcomeFunction(f"const={c}", {(y, x): c for y in y_support for x in x_support})


def indicator_function(target: str, y_support: Sequence[str], x_support: Sequence[str]) -> OutcomeFunction:
    return OutcomeFunction(
        f"1{{y={target}}}", {(y, x): Fraction(int(y == target)) for y in y_support for x in x_support}
    )


def default_family(y_support: Sequence[str], x_support: Sequence[str]) -> list[OutcomeFunction]:
    """The constant 1 and the indicator of each outcome value."""
    return [constant_function(y_support, x_support)] + [
        indicator_function(y, y_support, x_support) for y in y_support
    ]


def _as_observable(obj) -> ObservableJoint:
    if isinstance(obj, ObservableJoint):
        return obj
    if isinstance(obj, Dataset):
        return empirical_model(obj)
    return observable_joint(obj)


# ---------------------------------------------------------------- sufficiency


class SufficiencyFailure(NamedTuple):
    x: str
    z: str
    z_prime: str
    arm: int
    outcome: str
    lhs: Fraction
    rhs: Fraction


@dataclass(frozen=True)
class SufficiencyReport:
    passed: bool
    failures: tuple[SufficiencyFailure, ...] = ()
    comparisons: int = 0
    vacuous: tuple[tuple, ...] = ()
    underpowered: tuple[tuple, ...] = ()
    estimate: bool = False


def sufficiency_check(model, m: IndexFunction, tol: float = DEFAULT_TOL,
                      min_cell: int = DEFAULT_MIN_CELL) -> SufficiencyReport:
    """Compare ``P(Y = y | X, Z = z, D = j)`` across instrument values tied in ``m``.

    Every singleton outcome, arm and covariate cell is checked; conditionals
    with an empty conditioning event are recorded as vacuous.
    """
    obs = _as_observable(model)
    if not obs.is_binary:
        raise ValueError("sufficiency is defined for binary treatment")
    failures, vacuous, underpowered = [], [], []
    comparisons = 0
    for x in obs.x_support:
        laws = {z: obs.joint_dy(x, z) for z in obs.z_support}
        for cls in m.order():
            for z, zp in combinations(cls, 2):
                for j in (0, 1):
                    pa = sum((p for (d, _), p in laws[z].items() if d == j), Fraction(0))
                    pb = sum((p for (d, _), p in laws[zp].items() if d == j), Fraction(0))
                    if pa == 0 or pb == 0:
                        vacuous.append((x, z, zp, j))
                        continue
                    na = nb = None
                    if obs.is_empirical:
                        na, nb = obs.cell_count(x, z, j), obs.cell_count(x, zp, j)
                        if na < min_cell or nb < min_cell:
                            underpowered.append((x, z, zp, j))
                            continue
                    for y in obs.y_support:
                        lhs = laws[z].get((j, y), Fraction(0)) / pa
                        rhs = laws[zp].get((j, y), Fraction(0)) / pb
                        comparisons += 1
                        if obs.is_empirical:
                            eps = max(cell_tolerance(lhs, na, tol), cell_tolerance(rhs, nb, tol))
                            bad = abs(float(lhs - rhs)) > eps
                        else:
                            bad = lhs != rhs
                        if bad:
                            failures.append(SufficiencyFailure(x, z, zp, j, y, lhs, rhs))
    return SufficiencyReport(not failures, tuple(failures), comparisons, tuple(vacuous),
                             tuple(underpowered), obs.is_empirical)


# ---------------------------------------------------------------- moment monotonicity


class MomentSequence(NamedTuple):
    x: str
    function: str
    arm: int
    levels: tuple[Fraction, ...]
    values: tuple[Fraction, ...]
    counts: Optional[tuple[int, ...]] = None


class MomentViolation(NamedTuple):
    x: str
    function: str
    arm: int
    mu_low: Fraction
    mu_high: Fraction
    value_low: Fraction
    value_high: Fraction


@dataclass(frozen=True)
class MomentMonotonicityReport:
    passed: bool
    sequences: tuple[MomentSequence, ...] = ()
    violations: tuple[MomentViolation, ...] = ()
    underpowered: tuple[tuple, ...] = ()
    estimate: bool = False
    comparisons: int = 0

    def sequence(self, x: str, function: str, arm: int) -> MomentSequence:
        for s in self.sequences:
            if (s.x, s.function, s.arm) == (x, function, arm):
                return s
        raise KeyError((x, function, arm))


def _moment_sequence(obs: ObservableJoint, m: IndexFunction, x: str, g: OutcomeFunction, arm: int):
    levels, values, counts = [], [], []
    for mu, cls in zip(m.levels(), m.order()):
        weight = sum((obs.cell_prob(x, z) for z in cls), Fraction(0))
        if weight == 0:
            continue
        total = Fraction(0)
        for z in cls:
            for (xx, zz, d, y), p in obs.prob.items():
                if xx == x and zz == z:
                    treated = d if arm == 1 else 1 - d
                    if treated:
                        total += p * g(y, x)
        levels.append(mu)
        values.append(total / weight)
        if obs.is_empirical:
            counts.append(sum(obs.cell_count(x, z) for z in cls))
    return MomentSequence(x, g.name, arm, tuple(levels), tuple(values),
                          tuple(counts) if obs.is_empirical else None)


def moment_monotonicity_check(model, m: IndexFunction,
                              g1: Optional[Sequence[OutcomeFunction]] = None,
                              g0: Optional[Sequence[OutcomeFunction]] = None,
                              tol: float = DEFAULT_TOL,
                              min_cell: int = DEFAULT_MIN_CELL) -> MomentMonotonicityReport:
    """Check that treated moments rise and untreated moments fall with the index.

    ``g1``/``g0`` are families of :class:`OutcomeFunction`; a single function
    is accepted too. Monotonicity is checked between adjacent distinct index
    levels only.
    """
    obs = _as_observable(model)
    if not obs.is_binary:
        raise ValueError("moment monotonicity is defined for binary treatment")
    families = {}
    for arm, fam in ((1, g1), (0, g0)):
        if fam is None:
            fam = default_family(obs.y_support, obs.x_support)
        elif isinstance(fam, OutcomeFunction):
            fam = [fam]
        for g in fam:
            if any(v < 0 for v in g.table.values()):
                raise NegativityError(f"test function {g.name!r} takes negative values")
        families[arm] = list(fam)

    sequences, violations, underpowered = [], [], []
    comparisons = 0
    for x in obs.x_support:
        for arm in (1, 0):
            for g in families[arm]:
                seq = _moment_sequence(obs, m, x, g, arm)
                sequences.append(seq)
                gmax = float(max(g.table.values(), default=0)) or 1.0
                for k in range(len(seq.levels) - 1):
                    lo, hi = seq.values[k], seq.values[k + 1]
                    drop = lo - hi if arm == 1 else hi - lo
                    if obs.is_empirical:
                        na, nb = seq.counts[k], seq.counts[k + 1]
                        if na < min_cell or nb < min_cell:
                            underpowered.append((x, g.name, arm, seq.levels[k], seq.levels[k + 1]))
                            continue
                        eps = gmax * max(cell_tolerance(lo / Fraction(gmax), na, tol),
                                         cell_tolerance(hi / Fraction(gmax), nb, tol))
                        bad = float(drop) > eps
                    else:
                        bad = drop > 0
                    comparisons += 1
                    if bad:
                        violations.append(MomentViolation(
                            x, g.name, arm, seq.levels[k], seq.levels[k + 1], lo, hi))
    return MomentMonotonicityReport(not violations, tuple(sequences), tuple(violations),
                                    tuple(underpowered), obs.is_empirical, comparisons)


def rank_invariance_from_moments(model, m: IndexFunction) -> bool:
    """Rank invariance read off the ``g = 1`` treated moments: ``pi(., x)`` nondecreasing in ``m``."""
    obs = _as_observable(model)
    one = constant_function(obs.y_support, obs.x_support)
    return moment_monotonicity_check(obs, m, [one], [one]).passed


# ---------------------------------------------------------------- audit


def _status_from(passed: bool, compared: bool, underpowered: bool) -> str:
    if not passed:
        return "fail"
    if compared:
        return "pass"
    return "underpowered" if underpowered else "vacuous"


def _input_digest(obj) -> str:
    if isinstance(obj, Dataset):
        return digest(obj.to_csv())
    if isinstance(obj, ObservableJoint):
        rows = sorted([list(k) + [v] for k, v in obj.prob.items()], key=str)
        return digest(canonical_json(rows))
    return digest(model_to_json(obj))


def _overlap_entry(obs: ObservableJoint, min_cell: int) -> CheckEntry:
    values, bad, small = {}, [], []
    for x in obs.x_support:
        px = sum((obs.cell_prob(x, z) for z in obs.z_support), Fraction(0))
        treated = sum((p for (xx, _, d, _), p in obs.prob.items() if xx == x and d == 1), Fraction(0))
        if px == 0:
            small.append(x)
            continue
        p1 = treated / px
        values[x] = p1
        if obs.is_empirical and sum(obs.cell_count(x, z) for z in obs.z_support) < min_cell:
            small.append(x)
        elif not 0 < p1 < 1:
            bad.append({"x": x, "p_treated": p1})
    status = "fail" if bad else ("underpowered" if small and len(small) == len(obs.x_support) else "pass")
    return CheckEntry("overlap", status, bad, {"p_treated_given_x": values},
                      estimate=obs.is_empirical)


def _relevance_entry(obs: ObservableJoint, tol: float, min_cell: int) -> CheckEntry:
    bad, small = [], []
    for x in obs.x_support:
        laws = {z: obs.joint_dy(x, z) for z in obs.z_support}
        level_p = {
            z: {lv: sum((p for (d, _), p in laws[z].items() if d == lv), Fraction(0)) for lv in obs.levels}
            for z in obs.z_support
        }
        relevant = powered = False
        for z, zp in combinations(obs.z_support, 2):
            if not laws[z] or not laws[zp]:
                continue
            if obs.is_empirical:
                na, nb = obs.cell_count(x, z), obs.cell_count(x, zp)
                if na < min_cell or nb < min_cell:
                    continue
                powered = True
                for lv in obs.levels:
                    a, b = level_p[z][lv], level_p[zp][lv]
                    if abs(float(a - b)) > max(cell_tolerance(a, na, tol), cell_tolerance(b, nb, tol)):
                        relevant = True
            else:
                powered = True
                relevant = relevant or level_p[z] != level_p[zp]
        if not powered:
            small.append(x)
        elif not relevant:
            bad.append({"x": x})
    status = "fail" if bad else ("underpowered" if small else "pass")
    return CheckEntry("relevance", status, bad, {"underpowered_cells": small},
                      tolerance=tol if obs.is_empirical else None, estimate=obs.is_empirical)


def _rank_entry(name: str, pi: PropensityMatrix, tol: float, min_cell: int):
    report = check_rank_invariance(pi, tol, min_cell)
    values = {"propensity": {x: pi.column(x) for x in pi.x_support}}
    tolerance = tol if pi.is_empirical else None
    if not report.consistent:
        w = report.witness
        values["witness_values"] = {
            "x": [pi.values[w.x, w.z], pi.values[w.x, w.z_prime]],
            "x_prime": [pi.values[w.x_prime, w.z], pi.values[w.x_prime, w.z_prime]],
        }
        return report, CheckEntry(name, "fail", [w], values, tolerance, pi.is_empirical)
    values["merged_order"] = report.merged_order
    status = "pass"
    if pi.is_empirical and len(report.underpowered) == len(pi.x_support) * len(pi.z_support):
        status = "underpowered"
    values["underpowered_cells"] = report.underpowered
    return report, CheckEntry(name, status, [], values, tolerance, pi.is_empirical)


def _skip(name: str, reason: str) -> CheckEntry:
    return CheckEntry(name, "skipped", reason=reason)


def _separability_note(pi: PropensityMatrix) -> Optional[str]:
    zs = pi.z_support
    for z, zp in combinations(zs, 2):
        diffs = {pi.values[x, z] - pi.values[x, zp] for x in pi.x_support}
        if len(diffs) > 1:
            return ("informational: propensity is not additively separable in (z, x) "
                    f"(pi({z}, x) - pi({zp}, x) varies with x); not a failure")
    return None


def audit(obj: Union[FiniteModel, JointModel, ObservableJoint, Dataset], anchor: Optional[str] = None,
          tol: float = DEFAULT_TOL, min_cell: int = DEFAULT_MIN_CELL,
          g1: Optional[Sequence[OutcomeFunction]] = None,
          g0: Optional[Sequence[OutcomeFunction]] = None) -> AuditReport:
    """Run every applicable check and collect the results in canonical order.

    Monotonicity, independence and representation checks need response
    types, so they only run on population models; on data they are reported
    as skipped.
    """
    input_digest = _input_digest(obj)
    obs = _as_observable(obj)
    population = not obs.is_empirical
    factored: Optional[FiniteModel] = obj if isinstance(obj, FiniteModel) else None
    checks: list[CheckEntry] = []
    notes: list[str] = [WEAK_ORDER_NOTE] + list(obs.notes)
    if not population:
        notes.append(SAMPLE_NOTE)
        kind = "sample"
    elif isinstance(obj, JointModel):
        kind = "population-joint"
    elif isinstance(obj, ObservableJoint):
        kind = "population-observable"
    else:
        kind = "population"

    if obs.is_binary:
        checks.append(_overlap_entry(obs, min_cell))
    else:
        checks.append(_skip("overlap", "binary treatment only; ordered levels are checked at construction"))
    checks.append(_relevance_entry(obs, tol, min_cell))

    # independence and monotonicity need the response-type law
    if isinstance(obj, JointModel):
        ci = check_conditional_independence(obj)
        checks.append(CheckEntry("conditional_independence", "pass" if ci else "fail",
                                 [] if ci else [ci.witness], {"detail": ci.detail}))
        factored = obj.factor() if ci else None
    elif factored is not None:
        checks.append(CheckEntry("conditional_independence", "pass", [],
                                 {"detail": "holds by construction (factored model)"}))
    else:
        checks.append(_skip("conditional_independence", "unobservable: response types are not identified from data"))

    verdict = None
    if factored is not None:
        verdict = classify_monotonicity(factored)
        values = {
            "verdict": verdict.verdict,
            "unconditional_phrasing": monotone_unconditional(factored),
            "conditional_phrasing": monotone_conditional(factored),
        }
        checks.append(CheckEntry("monotonicity", "pass" if verdict.is_global else "fail",
                                 list(verdict.witnesses), values))
    elif population and isinstance(obj, JointModel):
        checks.append(_skip("monotonicity", "joint does not factor; response-type law depends on z"))
    else:
        checks.append(_skip("monotonicity", "unobservable: response types are not identified from data"))

    if obs.is_binary:
        checks.extend(_binary_checks(obj, obs, factored, verdict, anchor, tol, min_cell, g1, g0, notes))
    else:
        checks.extend(_ordered_checks(obs, factored, tol, min_cell))
    return AuditReport(input_digest, kind, checks, notes)


def _binary_checks(obj, obs, factored, verdict, anchor, tol, min_cell, g1, g0, notes):
    out = []
    pi = propensity_matrix(factored, require_interior=False) if factored is not None else obs.propensity()
    rank, entry = _rank_entry("rank_invariance", pi, tol, min_cell)
    out.append(entry)
    if not pi.is_empirical and rank.consistent:
        note = _separability_note(pi)
        if note:
            notes.append(note)

    m = None
    if not rank.consistent:
        reason = "rank invariance violated; no separable index"
        out.append(_skip("index", reason))
    else:
        try:
            m = construct_index_m(pi, anchor, tol, min_cell)
            out.append(CheckEntry("index", entry.status if entry.status == "underpowered" else "pass", [],
                                  {"m": m.values, "order": m.order(), "anchor": anchor},
                                  estimate=pi.is_empirical))
        except AnchorNotStrictError as exc:
            out.append(CheckEntry("index", "fail", [list(exc.pair or ())], {"anchor": anchor}, reason=str(exc)))
        except RankInvarianceError as exc:  # pragma: no cover - guarded by the rank check
            out.append(CheckEntry("index", "fail", [exc.witness], reason=str(exc)))

    if factored is None:
        out.append(_skip("representation", "population models only"))
    elif verdict is not None and not verdict.is_global:
        out.append(_skip("representation", f"model is {verdict.verdict}; no global representation exists"))
    elif m is None:
        out.append(_skip("representation", "no index available"))
    else:
        try:
            rep = construct_representation(factored, m=m)
            ok = verify_representation(factored, rep)
            rep = normalize_uniform(rep, factored) if ok else rep
            ok_norm = verify_normalized(factored, rep) if ok else ok
            witnesses = [] if ok and ok_norm else [ok.witness if not ok else ok_norm.witness]
            out.append(CheckEntry(
                "representation", "pass" if ok and ok_norm else "fail", witnesses,
                {"latent_law": {x: rep.folded_law(x) for x in factored.x_support},
                 "lower": rep.lower, "upper": rep.upper},
            ))
            if NORMALIZATION_NOTE not in notes:
                notes.append(NORMALIZATION_NOTE)
        except MonotonicityError as exc:
            out.append(CheckEntry("representation", "fail", exc.witnesses or [str(exc)], reason=str(exc)))

    if m is None:
        out.append(_skip("sufficiency", "no index available"))
        out.append(_skip("moment_monotonicity", "no index available"))
        return out
    suff = sufficiency_check(obs, m, tol, min_cell)
    status = _status_from(suff.passed, suff.comparisons > 0, bool(suff.underpowered))
    out.append(CheckEntry("sufficiency", status, list(suff.failures),
                          {"comparisons": suff.comparisons, "vacuous": suff.vacuous,
                           "underpowered": suff.underpowered},
                          tol if suff.estimate else None, suff.estimate,
                          "no instrument values share an index level" if status == "vacuous" else ""))
    mom = moment_monotonicity_check(obs, m, g1, g0, tol, min_cell)
    status = _status_from(mom.passed, mom.comparisons > 0, bool(mom.underpowered))
    out.append(CheckEntry("moment_monotonicity", status, list(mom.violations),
                          {"sequences": [s._asdict() for s in mom.sequences],
                           "underpowered": mom.underpowered},
                          tol if mom.estimate else None, mom.estimate))
    return out


def _ordered_checks(obs, factored, tol, min_cell):
    out = []
    K = len(obs.levels)
    for k in range(1, K):
        if factored is not None:
            pi = propensity_matrix(binarize_levels(factored, k), require_interior=False)
        else:
            pi = obs.binarize(obs.levels[0] - 1 + k).propensity()
        _, entry = _rank_entry(f"rank_invariance@{k}", pi, tol, min_cell)
        out.append(entry)
    if factored is None:
        d_hat = {}
        for z in obs.z_support:
            total = Fraction(0)
            for x in obs.x_support:
                px = sum((obs.cell_prob(x, zz) for zz in obs.z_support), Fraction(0))
                law = obs.joint_dy(x, z)
                total += px * sum((p * d for (d, _), p in law.items()), Fraction(0))
            d_hat[z] = total
        out.append(CheckEntry("ordered_index", "pass", [], {"d": d_hat}, estimate=True,
                              reason="plug-in mean treatment by instrument value"))
        out.append(_skip("ordered_representation", "population models only"))
    else:
        try:
            rep = construct_ordered_representation(factored)
            ok = verify_ordered(factored, rep)
            out.append(CheckEntry("ordered_index", "pass", [], {"d": rep.m.values, "order": rep.m.order()}))
            out.append(CheckEntry("ordered_representation", "pass" if ok else "fail",
                                  [] if ok else [ok.witness],
                                  {"thresholds": {x: list(c) for x, c in rep.thresholds.items()}}))
        except MonotonicityError as exc:
            out.append(CheckEntry("ordered_index", "fail", exc.witnesses or [str(exc)],
                                  {"level": exc.level}, reason=str(exc)))
            out.append(_skip("ordered_representation", "no common index"))
        except AmbiguousIndexError as exc:
            out.append(CheckEntry("ordered_index", "fail", [list(exc.pair)], reason=str(exc)))
            out.append(_skip("ordered_representation", "no common index"))
    out.append(_skip("sufficiency", "defined for binary treatment only"))
    out.append(_skip("moment_monotonicity", "defined for binary treatment only"))
    return out
