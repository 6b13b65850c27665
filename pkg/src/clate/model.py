"""Finite-support conditional-LATE models and their monotonicity structure.

A :class:`FiniteModel` is stored factored as ``P(x, z) * P(type, outcomes | x)``,
so instrument independence given the covariate holds by construction. Raw
joints (for instance built from an external source) live in :class:`JointModel`
and must pass :func:`check_conditional_independence` before they can be
factored.

All population quantities are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Mapping, NamedTuple, Optional, Sequence, Union

from .exceptions import (
    DegenerateCellError,
    IndependenceError,
    ModelValidationError,
    OrderedModelError,
)
from .rational import as_fraction

BINARY_LEVELS = (0, 1)


@dataclass(frozen=True)
class ResponseType:
    """Counterfactual treatment ``D_z`` for every instrument value.

    ``treatment[i]`` is the level chosen when the instrument is set to the
    i-th value of the model's ``z_support``.
    """

    treatment: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "treatment", tuple(int(v) for v in self.treatment))

    def __getitem__(self, i: int) -> int:
        return self.treatment[i]

    def __len__(self) -> int:
        return len(self.treatment)

    def compare(self, i: int, j: int) -> int:
        """Sign of ``D_{z_i} - D_{z_j}``."""
        a, b = self.treatment[i], self.treatment[j]
        return (a > b) - (a < b)

    def compliance(self, low: int, high: int) -> str:
        """Binary compliance label for the instrument ordering (z_low, z_high)."""
        a, b = self.treatment[low], self.treatment[high]
        if a == b:
            return "always-taker" if a == 1 else "never-taker"
        return "complier" if b > a else "defier"

    def as_map(self, z_support: Sequence[str]) -> dict[str, int]:
        return dict(zip(z_support, self.treatment))


OutcomeLaw = tuple[tuple[tuple[str, ...], Fraction], ...]


@dataclass(frozen=True)
class TypeMass:
    """A response type together with its share and outcome law in one cell.

    ``prob`` is ``P(type | X = x)``. ``outcome_law`` lists potential-outcome
    vectors (one entry per treatment level, in level order) with their
    probabilities conditional on the type; it sums to one.
    """

    response: ResponseType
    prob: Fraction
    outcome_law: OutcomeLaw

    def __post_init__(self):
        if not isinstance(self.response, ResponseType):
            object.__setattr__(self, "response", ResponseType(self.response))
        object.__setattr__(self, "prob", as_fraction(self.prob))
        law = tuple(
            (tuple(str(y) for y in outcomes), as_fraction(p)) for outcomes, p in self.outcome_law
        )
        object.__setattr__(self, "outcome_law", law)

    @property
    def treatment(self) -> tuple[int, ...]:
        return self.response.treatment


def _labels(values, what: str) -> tuple[str, ...]:
    labels = tuple(str(v) for v in values)
    if not labels:
        raise ModelValidationError(f"{what} must be non-empty")
    if len(set(labels)) != len(labels):
        raise ModelValidationError(f"{what} labels must be unique")
    return labels


@dataclass(frozen=True)
class FiniteModel:
    """Population model on finite supports.

    Parameters
    ----------
    z_support, x_support, y_support : sequences of labels
    pzx : mapping ``(x, z) -> P(X=x, Z=z)``
    types : mapping ``x -> sequence of TypeMass``
    levels : treatment levels, ``(0, 1)`` for binary models
    """

    z_support: tuple[str, ...]
    x_support: tuple[str, ...]
    y_support: tuple[str, ...]
    pzx: Mapping[tuple[str, str], Fraction]
    types: Mapping[str, tuple[TypeMass, ...]]
    levels: tuple[int, ...] = BINARY_LEVELS

    def __post_init__(self):
        object.__setattr__(self, "z_support", _labels(self.z_support, "z_support"))
        object.__setattr__(self, "x_support", _labels(self.x_support, "x_support"))
        object.__setattr__(self, "y_support", _labels(self.y_support, "y_support"))
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        pzx = {(str(x), str(z)): as_fraction(p) for (x, z), p in self.pzx.items()}
        types = {
            str(x): tuple(tm if isinstance(tm, TypeMass) else TypeMass(*tm) for tm in cell)
            for x, cell in self.types.items()
        }
        object.__setattr__(self, "pzx", pzx)
        object.__setattr__(self, "types", types)
        self._validate()

    def _validate(self):
        zs, xs, ys = self.z_support, self.x_support, set(self.y_support)
        if len(self.levels) < 2 or list(self.levels) != list(
            range(self.levels[0], self.levels[0] + len(self.levels))
        ):
            raise ModelValidationError("levels must be a contiguous run of at least two integers")
        if set(self.pzx) != {(x, z) for x in xs for z in zs}:
            raise ModelValidationError("pzx must cover every (x, z) cell exactly once")
        if any(p <= 0 for p in self.pzx.values()):
            raise ModelValidationError("every (x, z) cell needs positive mass")
        if sum(self.pzx.values()) != 1:
            raise ModelValidationError("pzx must sum to exactly 1")
        if set(self.types) != set(xs):
            raise ModelValidationError("types must be given for every covariate cell")
        level_set = set(self.levels)
        for x in xs:
            cell = self.types[x]
            if not cell:
                raise ModelValidationError(f"cell {x!r} has no response types")
            if sum(tm.prob for tm in cell) != 1:
                raise ModelValidationError(f"type shares at {x!r} must sum to 1")
            for tm in cell:
                if tm.prob < 0:
                    raise ModelValidationError(f"negative type share at {x!r}")
                if len(tm.treatment) != len(zs):
                    raise ModelValidationError("treatment maps must be total on z_support")
                if not set(tm.treatment) <= level_set:
                    raise ModelValidationError(f"treatment level outside {self.levels}")
                if sum(p for _, p in tm.outcome_law) != 1 or any(p < 0 for _, p in tm.outcome_law):
                    raise ModelValidationError(f"outcome law at {x!r} must be a distribution")
                for outcomes, _ in tm.outcome_law:
                    if len(outcomes) != len(self.levels):
                        raise ModelValidationError("one potential outcome per treatment level")
                    if not set(outcomes) <= ys:
                        raise ModelValidationError("outcome label outside y_support")

    @property
    def is_binary(self) -> bool:
        return self.levels == BINARY_LEVELS

    @property
    def K(self) -> int:
        return len(self.levels)

    def z_index(self, z: str) -> int:
        return self.z_support.index(z)

    def p_x(self, x: str) -> Fraction:
        return sum((self.pzx[x, z] for z in self.z_support), Fraction(0))

    def p_z_given_x(self, z: str, x: str) -> Fraction:
        return self.pzx[x, z] / self.p_x(x)

    def positive_types(self, x: str) -> Iterator[tuple[int, TypeMass]]:
        """Type entries of cell ``x`` carrying positive mass (w.p.1 means these)."""
        for i, tm in enumerate(self.types[x]):
            if tm.prob > 0:
                yield i, tm

    def level_prob(self, z: str, x: str, level: int) -> Fraction:
        i = self.z_index(z)
        return sum((tm.prob for _, tm in self.positive_types(x) if tm.treatment[i] == level), Fraction(0))

    def relabel(self, z_map: Mapping[str, str] = None, x_map: Mapping[str, str] = None,
                z_order: Sequence[str] = None, x_order: Sequence[str] = None) -> "FiniteModel":
        """Rename and/or reorder instrument values and covariate cells."""
        z_map = dict(z_map or {z: z for z in self.z_support})
        x_map = dict(x_map or {x: x for x in self.x_support})
        z_order = list(z_order or self.z_support)
        x_order = list(x_order or self.x_support)
        perm = [self.z_index(z) for z in z_order]
        types = {
            x_map[x]: tuple(
                TypeMass(ResponseType(tuple(tm.treatment[i] for i in perm)), tm.prob, tm.outcome_law)
                for tm in self.types[x]
            )
            for x in x_order
        }
        pzx = {(x_map[x], z_map[z]): self.pzx[x, z] for x in x_order for z in z_order}
        return type(self)(
            tuple(z_map[z] for z in z_order),
            tuple(x_map[x] for x in x_order),
            self.y_support,
            pzx,
            types,
            self.levels,
        )

    def to_joint(self) -> "JointModel":
        mass: dict[tuple, Fraction] = {}
        for x in self.x_support:
            for z in self.z_support:
                for _, tm in self.positive_types(x):
                    for outcomes, p in tm.outcome_law:
                        if p == 0:
                            continue
                        key = (x, z, tm.treatment, outcomes)
                        mass[key] = mass.get(key, Fraction(0)) + self.pzx[x, z] * tm.prob * p
        return JointModel(self.z_support, self.x_support, self.y_support, mass, self.levels)


class OrderedModel(FiniteModel):
    """Model with ordered treatment levels ``1..K``."""

    def __init__(self, z_support, x_support, y_support, pzx, types, levels=None, *, K=None):
        if levels is None:
            if K is None:
                raise ModelValidationError("OrderedModel needs K or levels")
            levels = tuple(range(1, K + 1))
        super().__init__(z_support, x_support, y_support, pzx, types, tuple(levels))

    def _validate(self):
        super()._validate()
        if self.levels[0] != 1:
            raise ModelValidationError("ordered levels must be 1..K")
        seen = {
            level
            for x in self.x_support
            for _, tm in self.positive_types(x)
            for level in tm.treatment
        }
        if seen != set(self.levels):
            missing = sorted(set(self.levels) - seen)
            raise ModelValidationError(f"levels {missing} are never chosen; reduce K")


@dataclass(frozen=True)
class JointModel:
    """Raw joint law of ``(X, Z, D_., potential outcomes)``.

    ``mass`` maps ``(x, z, treatment tuple, outcome tuple)`` to probability.
    """

    z_support: tuple[str, ...]
    x_support: tuple[str, ...]
    y_support: tuple[str, ...]
    mass: Mapping[tuple, Fraction]
    levels: tuple[int, ...] = BINARY_LEVELS

    def __post_init__(self):
        object.__setattr__(self, "z_support", _labels(self.z_support, "z_support"))
        object.__setattr__(self, "x_support", _labels(self.x_support, "x_support"))
        object.__setattr__(self, "y_support", _labels(self.y_support, "y_support"))
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        mass = {}
        for (x, z, t, o), p in self.mass.items():
            key = (str(x), str(z), tuple(int(v) for v in t), tuple(str(y) for y in o))
            mass[key] = mass.get(key, Fraction(0)) + as_fraction(p)
        object.__setattr__(self, "mass", mass)
        if any(p < 0 for p in mass.values()) or sum(mass.values()) != 1:
            raise ModelValidationError("joint masses must be nonnegative and sum to 1")
        ys = set(self.y_support)
        for x, z, t, o in mass:
            if x not in self.x_support or z not in self.z_support:
                raise ModelValidationError("joint references an unknown label")
            if len(t) != len(self.z_support) or not set(t) <= set(self.levels):
                raise ModelValidationError("invalid treatment map in joint")
            if len(o) != len(self.levels) or not set(o) <= ys:
                raise ModelValidationError("invalid outcome vector in joint")
        for x in self.x_support:
            for z in self.z_support:
                if self.cell_mass(x, z) <= 0:
                    raise ModelValidationError(f"cell ({x!r}, {z!r}) has no mass")

    @property
    def is_binary(self) -> bool:
        return self.levels == BINARY_LEVELS

    def cell_mass(self, x: str, z: str) -> Fraction:
        return sum((p for (xx, zz, _, _), p in self.mass.items() if xx == x and zz == z), Fraction(0))

    def conditional(self, x: str, z: str) -> dict[tuple, Fraction]:
        """Law of ``(treatment, outcomes)`` given ``X = x, Z = z``."""
        total = self.cell_mass(x, z)
        law: dict[tuple, Fraction] = {}
        for (xx, zz, t, o), p in self.mass.items():
            if xx == x and zz == z and p > 0:
                law[t, o] = law.get((t, o), Fraction(0)) + p / total
        return law

    def factor(self) -> FiniteModel:
        """Factor into a :class:`FiniteModel`; requires conditional independence."""
        result = check_conditional_independence(self)
        if not result:
            raise IndependenceError("joint is not independent of Z given X", result.witness)
        pzx = {(x, z): self.cell_mass(x, z) for x in self.x_support for z in self.z_support}
        types = {}
        for x in self.x_support:
            law = self.conditional(x, self.z_support[0])
            by_type: dict[tuple, dict] = {}
            for t, o in sorted(law):
                by_type.setdefault(t, {})[o] = law[t, o]
            cell = []
            for t, outcomes in by_type.items():
                share = sum(outcomes.values())
                cell.append(TypeMass(ResponseType(t), share,
                                     tuple((o, p / share) for o, p in outcomes.items())))
            types[x] = tuple(cell)
        cls = FiniteModel if self.is_binary else OrderedModel
        return cls(self.z_support, self.x_support, self.y_support, pzx, types, self.levels)


AnyModel = Union[FiniteModel, JointModel]


@dataclass(frozen=True)
class CheckResult:
    """Boolean outcome of a check plus the first failing point, if any."""

    ok: bool
    witness: Optional[tuple] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------- propensities


@dataclass(frozen=True)
class PropensityMatrix:
    """Table of ``pi(z, x) = P(D = 1 | Z = z, X = x)``.

    Population tables are exact. Empirical tables carry ``counts`` (rows per
    ``(x, z)`` cell) and may hold ``None`` for empty cells.
    """

    z_support: tuple[str, ...]
    x_support: tuple[str, ...]
    values: Mapping[tuple[str, str], Optional[Fraction]]
    counts: Optional[Mapping[tuple[str, str], int]] = None

    def __getitem__(self, key: tuple[str, str]) -> Optional[Fraction]:
        """Index as ``pi[z, x]``."""
        z, x = key
        return self.values[x, z]

    @property
    def is_empirical(self) -> bool:
        return self.counts is not None

    def column(self, x: str) -> dict[str, Optional[Fraction]]:
        return {z: self.values[x, z] for z in self.z_support}

    def rows(self) -> list[list[Optional[Fraction]]]:
        """Nested list, one row per covariate cell, columns in z order."""
        return [[self.values[x, z] for z in self.z_support] for x in self.x_support]

    def relabel(self, z_order: Sequence[str] = None, x_order: Sequence[str] = None) -> "PropensityMatrix":
        z_order = tuple(z_order or self.z_support)
        x_order = tuple(x_order or self.x_support)
        return PropensityMatrix(z_order, x_order, dict(self.values),
                                None if self.counts is None else dict(self.counts))


def propensity_matrix(model, require_interior: bool = True) -> PropensityMatrix:
    """Propensity table of a binary model.

    For a :class:`FiniteModel` this sums type shares with ``D_z = 1``. A
    :class:`JointModel` or an observable joint goes through the observable
    law. Population tables raise :class:`DegenerateCellError` on 0/1 entries
    unless ``require_interior`` is off.
    """
    if isinstance(model, ObservableJoint):
        return model.propensity()
    if isinstance(model, JointModel):
        pi = observable_joint(model).propensity()
        return _require_interior(pi) if require_interior else pi
    if not model.is_binary:
        raise OrderedModelError(f"propensity needs a binary model, got levels {model.levels}")
    values = {}
    for x in model.x_support:
        for i, z in enumerate(model.z_support):
            values[x, z] = sum(
                (tm.prob for _, tm in model.positive_types(x) if tm.treatment[i] == 1), Fraction(0)
            )
    pi = PropensityMatrix(model.z_support, model.x_support, values)
    return _require_interior(pi) if require_interior else pi


def _require_interior(pi: PropensityMatrix) -> PropensityMatrix:
    for x in pi.x_support:
        for z in pi.z_support:
            if pi.values[x, z] in (0, 1):
                raise DegenerateCellError(
                    f"pi({z!r}, {x!r}) = {pi.values[x, z]} violates overlap", cell=(z, x)
                )
    return pi


def check_overlap(model: FiniteModel) -> CheckResult:
    """``0 < P(D = 1 | X = x) < 1`` for every covariate cell."""
    if not model.is_binary:
        raise OrderedModelError("overlap is defined for binary models")
    for x in model.x_support:
        p = sum(model.p_z_given_x(z, x) * model.level_prob(z, x, 1) for z in model.z_support)
        if not 0 < p < 1:
            return CheckResult(False, (x, p), f"P(D=1|X={x}) = {p}")
    return CheckResult(True)


def check_relevance(model: FiniteModel) -> CheckResult:
    """Every covariate cell has two instrument values with different treatment laws."""
    for x in model.x_support:
        laws = {
            tuple(model.level_prob(z, x, level) for level in model.levels) for z in model.z_support
        }
        if len(laws) < 2:
            return CheckResult(False, (x,), f"instrument irrelevant at X={x}")
    return CheckResult(True)


# ---------------------------------------------------------------- monotonicity


class Verdict(str, enum.Enum):
    GLOBAL = "GlobalMonotone"
    LOCAL_ONLY = "LocalOnlyMonotone"
    VIOLATED = "Violated"

    def __str__(self):
        return self.value


class FlipWitness(NamedTuple):
    """At ``x`` types move one way between ``z`` and ``z_prime``; at ``x_prime`` the other."""

    z: str
    z_prime: str
    x: str
    x_prime: str


class ConflictWitness(NamedTuple):
    """Cell ``x`` hosts a type with ``D_z > D_z'`` and one with ``D_z < D_z'``."""

    z: str
    z_prime: str
    x: str
    types: tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class MonotonicityVerdict:
    verdict: Verdict
    witnesses: tuple = ()

    @property
    def is_global(self) -> bool:
        return self.verdict is Verdict.GLOBAL


def _cell_direction(model: FiniteModel, x: str, i: int, j: int):
    """Return (sign, up_type, down_type) of ``D_{z_i} - D_{z_j}`` among types at x."""
    up = down = None
    for _, tm in model.positive_types(x):
        s = tm.response.compare(i, j)
        if s > 0 and up is None:
            up = tm.treatment
        elif s < 0 and down is None:
            down = tm.treatment
    if up is not None and down is not None:
        return None, up, down
    return (1 if up is not None else -1 if down is not None else 0), up, down


def classify_monotonicity(model: FiniteModel) -> MonotonicityVerdict:
    """Classify the model as globally monotone, locally-only monotone or violated.

    Pairs are scanned in support order; witnesses are listed in that order.
    """
    conflicts, flips = [], []
    zs = model.z_support
    for i, j in combinations(range(len(zs)), 2):
        signs = []
        for x in model.x_support:
            sign, up, down = _cell_direction(model, x, i, j)
            if sign is None:
                conflicts.append(ConflictWitness(zs[i], zs[j], x, (up, down)))
            else:
                signs.append((x, sign))
        if conflicts:
            continue
        nonzero = [(x, s) for x, s in signs if s]
        if nonzero:
            x0, s0 = nonzero[0]
            opposite = next((x for x, s in nonzero if s == -s0), None)
            if opposite is not None:
                flips.append(FlipWitness(zs[i], zs[j], x0, opposite))
    if conflicts:
        return MonotonicityVerdict(Verdict.VIOLATED, tuple(conflicts))
    if flips:
        return MonotonicityVerdict(Verdict.LOCAL_ONLY, tuple(flips))
    return MonotonicityVerdict(Verdict.GLOBAL, ())


def monotone_unconditional(model: FiniteModel) -> bool:
    """Every pair has ``P(D_z >= D_z') = 1`` or ``P(D_z <= D_z') = 1`` population-wide."""
    weights = {x: model.p_x(x) for x in model.x_support}
    n = len(model.z_support)
    for i in range(n):
        for j in range(n):
            ge = sum(
                (weights[x] * tm.prob for x in model.x_support for _, tm in model.positive_types(x)
                 if tm.treatment[i] >= tm.treatment[j]),
                Fraction(0),
            )
            le = sum(
                (weights[x] * tm.prob for x in model.x_support for _, tm in model.positive_types(x)
                 if tm.treatment[i] <= tm.treatment[j]),
                Fraction(0),
            )
            if ge != 1 and le != 1:
                return False
    return True


def monotone_conditional(model: FiniteModel) -> bool:
    """Same direction for every pair, stated cell by cell: ``P(D_z >= D_z' | X) = 1`` for all x."""
    n = len(model.z_support)
    for i in range(n):
        for j in range(n):
            ge_all = all(
                sum((tm.prob for _, tm in model.positive_types(x) if tm.treatment[i] >= tm.treatment[j]),
                    Fraction(0)) == 1
                for x in model.x_support
            )
            le_all = all(
                sum((tm.prob for _, tm in model.positive_types(x) if tm.treatment[i] <= tm.treatment[j]),
                    Fraction(0)) == 1
                for x in model.x_support
            )
            if not (ge_all or le_all):
                return False
    return True


def check_conditional_independence(model: AnyModel) -> CheckResult:
    """Is the law of (type, outcomes) given (X = x, Z = z) the same for every z?

    Factored models pass by construction; raw joints are compared exactly,
    first on the type marginal, then on the full (type, outcomes) event. The
    witness is ``(x, z, z', event)``.
    """
    if isinstance(model, FiniteModel):
        return CheckResult(True)
    zs = model.z_support
    for x in model.x_support:
        laws = [model.conditional(x, z) for z in zs]
        type_laws = []
        for law in laws:
            marginal: dict[tuple, Fraction] = {}
            for (t, _), p in law.items():
                marginal[t] = marginal.get(t, Fraction(0)) + p
            type_laws.append(marginal)
        for k in range(1, len(zs)):
            for t in sorted(set(type_laws[0]) | set(type_laws[k])):
                if type_laws[0].get(t, 0) != type_laws[k].get(t, 0):
                    return CheckResult(False, (x, zs[0], zs[k], ("type", t)),
                                       f"type share of {t} differs across z at X={x}")
        for k in range(1, len(zs)):
            for event in sorted(set(laws[0]) | set(laws[k])):
                if laws[0].get(event, 0) != laws[k].get(event, 0):
                    return CheckResult(False, (x, zs[0], zs[k], ("joint",) + event),
                                       f"joint law differs across z at X={x}")
    return CheckResult(True)


# ---------------------------------------------------------------- observables


@dataclass(frozen=True)
class ObservableJoint:
    """Law (or empirical frequencies) of the observables ``(X, Z, D, Y)``.

    ``prob`` maps ``(x, z, d, y)`` to a probability. Empirical joints also
    carry the raw ``counts``; their probabilities are exact ``count / n``.
    """

    z_support: tuple[str, ...]
    x_support: tuple[str, ...]
    y_support: tuple[str, ...]
    levels: tuple[int, ...]
    prob: Mapping[tuple, Fraction]
    counts: Optional[Mapping[tuple, int]] = None
    notes: tuple[str, ...] = field(default=())

    @property
    def is_empirical(self) -> bool:
        return self.counts is not None

    @property
    def is_binary(self) -> bool:
        return self.levels == BINARY_LEVELS

    @property
    def n(self) -> Optional[int]:
        return None if self.counts is None else sum(self.counts.values())

    def cell_prob(self, x: str, z: str) -> Fraction:
        return sum((p for (xx, zz, _, _), p in self.prob.items() if xx == x and zz == z), Fraction(0))

    def cell_count(self, x: str, z: str, d: Optional[int] = None) -> Optional[int]:
        if self.counts is None:
            return None
        return sum(c for (xx, zz, dd, _), c in self.counts.items()
                   if xx == x and zz == z and (d is None or dd == d))

    def joint_dy(self, x: str, z: str) -> dict[tuple[int, str], Fraction]:
        """Conditional law of ``(D, Y)`` given ``(x, z)``; empty if the cell is empty."""
        total = self.cell_prob(x, z)
        if total == 0:
            return {}
        return {(d, y): p / total for (xx, zz, d, y), p in self.prob.items() if xx == x and zz == z}

    def propensity(self) -> PropensityMatrix:
        if not self.is_binary:
            raise OrderedModelError(f"propensity needs a binary model, got levels {self.levels}")
        values = {}
        for x in self.x_support:
            for z in self.z_support:
                law = self.joint_dy(x, z)
                values[x, z] = sum((p for (d, _), p in law.items() if d == 1), Fraction(0)) if law else None
        counts = None
        if self.counts is not None:
            counts = {(x, z): self.cell_count(x, z) for x in self.x_support for z in self.z_support}
        return PropensityMatrix(self.z_support, self.x_support, values, counts)

    def binarize(self, k: int) -> "ObservableJoint":
        """Observables of the indicator ``1{D > k}``; outcomes collapse to one label."""
        prob: dict[tuple, Fraction] = {}
        counts: Optional[dict[tuple, int]] = None if self.counts is None else {}
        for (x, z, d, y), p in self.prob.items():
            key = (x, z, int(d > k), "*")
            prob[key] = prob.get(key, Fraction(0)) + p
        if self.counts is not None:
            for (x, z, d, y), c in self.counts.items():
                key = (x, z, int(d > k), "*")
                counts[key] = counts.get(key, 0) + c
        return ObservableJoint(self.z_support, self.x_support, ("*",), BINARY_LEVELS, prob, counts)


def observable_joint(model: AnyModel) -> ObservableJoint:
    """Push a population model forward to the law of ``(X, Z, D, Y)``.

    ``D = D_Z`` and ``Y`` is the potential outcome of the realized level.
    """
    if isinstance(model, FiniteModel):
        model = model.to_joint()
    zs = model.z_support
    offset = model.levels[0]
    prob: dict[tuple, Fraction] = {}
    for (x, z, t, o), p in model.mass.items():
        d = t[zs.index(z)]
        key = (x, z, d, o[d - offset])
        prob[key] = prob.get(key, Fraction(0)) + p
    return ObservableJoint(zs, model.x_support, model.y_support, model.levels, prob)
