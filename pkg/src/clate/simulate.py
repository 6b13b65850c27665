"""Seeded generation of finite models of each monotonicity class, and sampling.

Randomness comes from numpy's PCG64 bit generator, created per call from an
explicit seed; nothing touches global RNG state. Masses are drawn as integer
weights in ``1..granularity`` and normalized exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .data import Dataset
from .exceptions import GenerationExhaustedError, ModelValidationError
from .model import (
    FiniteModel,
    OrderedModel,
    ResponseType,
    TypeMass,
    Verdict,
    check_relevance,
    classify_monotonicity,
    propensity_matrix,
)
from .ordered import ThresholdRepresentation, ordered_pushforward
from .rational import normalize_weights
from .representation import IndexFunction, IndexRepresentation, pushforward, verify_representation

RNG_ALGORITHM = "numpy.random.PCG64"
CLASSES = ("GlobalMonotone", "LocalOnly", "Violated", "FromRepresentation")
_VERDICT_OF = {
    "GlobalMonotone": Verdict.GLOBAL,
    "LocalOnly": Verdict.LOCAL_ONLY,
    "Violated": Verdict.VIOLATED,
    "FromRepresentation": Verdict.GLOBAL,
}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(base: int, index: int) -> int:
    """Seed for replication ``index``: BLAKE2b of ``base XOR index``, truncated to 64 bits."""
    value = (int(base) ^ int(index)) & (2**64 - 1)
    h = hashlib.blake2b(value.to_bytes(8, "little"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class DgpSpec:
    """What to generate. ``K == 2`` gives a binary model."""

    n_z: int = 2
    n_x: int = 2
    n_y: int = 2
    K: int = 2
    model_class: str = "GlobalMonotone"
    seed: int = 0
    granularity: int = 20
    max_types: int = 6
    max_retries: int = 200

    def __post_init__(self):
        if self.n_z < 2 or self.n_x < 1 or self.n_y < 1 or self.K < 2:
            raise ValueError("need n_z >= 2, n_x >= 1, n_y >= 1, K >= 2")
        if self.model_class not in CLASSES:
            raise ValueError(f"model_class must be one of {CLASSES}")
        if self.model_class == "LocalOnly" and self.n_x < 2:
            raise ValueError("LocalOnly models need at least two covariate cells")
        if self.max_types < 3 or self.granularity < 1:
            raise ValueError("need max_types >= 3 and granularity >= 1")

    @property
    def ordered(self) -> bool:
        return self.K > 2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DgpSpec":
        d = dict(d)
        if "class" in d:
            d["model_class"] = d.pop("class")
        return cls(**d)


class _Draw:
    """Small helpers over one generator."""

    def __init__(self, spec: DgpSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.zs = tuple(f"z{i}" for i in range(spec.n_z))
        self.xs = tuple(f"x{i}" for i in range(spec.n_x))
        self.ys = tuple(str(i) for i in range(spec.n_y))

    def int(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]``."""
        return int(self.rng.integers(lo, hi + 1))

    def weights(self, n: int) -> list[Fraction]:
        return normalize_weights(self.int(1, self.spec.granularity) for _ in range(n))

    def pzx(self) -> dict:
        probs = self.weights(len(self.xs) * len(self.zs))
        keys = [(x, z) for x in self.xs for z in self.zs]
        return dict(zip(keys, probs))

    def outcome_law(self, n_levels: int):
        k = self.int(1, 2)
        vectors = [tuple(self.ys[self.int(0, len(self.ys) - 1)] for _ in range(n_levels)) for _ in range(k)]
        merged: dict = {}
        for v, p in zip(vectors, self.weights(k)):
            merged[v] = merged.get(v, Fraction(0)) + p
        return tuple(merged.items())

    def ranks(self, ties: bool = True) -> list[int]:
        """Dense ranks of the instrument values; at least two distinct levels."""
        n = len(self.zs)
        while True:
            raw = [self.int(0, n - 1) for _ in range(n)] if ties and self.int(0, 3) == 0 else list(
                self.rng.permutation(n)
            )
            levels = sorted(set(raw))
            if len(levels) >= 2:
                return [levels.index(r) for r in raw]


def _step_type(ranks: list[int], cutoffs: list[int], base: int) -> ResponseType:
    """Level ``base + #{k : rank >= cutoff_k}`` at each instrument value."""
    return ResponseType(tuple(base + sum(r >= c for c in cutoffs) for r in ranks))


def _threshold_cell(draw: _Draw, ranks: list[int], planted=()) -> list[ResponseType]:
    """Always-taker, never-taker, planted types, and random threshold types in ``ranks``."""
    spec = draw.spec
    n_levels = max(ranks) + 1
    K = spec.K
    base = 0 if K == 2 else 1
    if K == 2:
        out = [_step_type(ranks, [0], base), _step_type(ranks, [n_levels], base)] + list(planted)
    else:
        out = [_step_type(ranks, [0] * j + [n_levels] * (K - 1 - j), base) for j in range(K)]
        out = out[: max(2, spec.max_types - 1)] + list(planted)
    extra = draw.int(1, max(1, spec.max_types - len(out)))
    for _ in range(extra):
        if len(out) >= spec.max_types:
            break
        cutoffs = sorted(draw.int(1, n_levels - 1) if draw.int(0, 2) else draw.int(0, n_levels)
                         for _ in range(K - 1))
        out.append(_step_type(ranks, cutoffs, base))
    if not any(len(set(t.treatment)) > 1 for t in out):
        out.append(_step_type(ranks, [n_levels - 1] * (K - 1), base))
    return out


def _assemble(draw: _Draw, cells: dict) -> FiniteModel:
    spec = draw.spec
    n_levels = spec.K
    types = {}
    for x, responses in cells.items():
        probs = draw.weights(len(responses))
        types[x] = tuple(TypeMass(t, p, draw.outcome_law(n_levels)) for t, p in zip(responses, probs))
    if spec.ordered:
        return OrderedModel(draw.zs, draw.xs, draw.ys, draw.pzx(), types, K=spec.K)
    return FiniteModel(draw.zs, draw.xs, draw.ys, draw.pzx(), types)


def _global(draw: _Draw) -> FiniteModel:
    ranks = draw.ranks()
    return _assemble(draw, {x: _threshold_cell(draw, ranks) for x in draw.xs})


def _flip_ranks(draw: _Draw, a: int, b: int, a_above: bool) -> list[int]:
    ranks = list(draw.rng.permutation(len(draw.zs)))
    if (ranks[a] > ranks[b]) != a_above:
        ranks[a], ranks[b] = ranks[b], ranks[a]
    return [int(r) for r in ranks]


def _local_only(draw: _Draw) -> FiniteModel:
    # compliers for (z_a, z_b) in the first half of the cells, defiers in the rest
    a, b = (int(v) for v in draw.rng.choice(len(draw.zs), 2, replace=False))
    half = (len(draw.xs) + 1) // 2
    base = 0 if draw.spec.K == 2 else 1
    cells = {}
    for pos, x in enumerate(draw.xs):
        ranks = _flip_ranks(draw, a, b, a_above=pos >= half)
        high = max(ranks[a], ranks[b])
        planted = [_step_type(ranks, [high] * (draw.spec.K - 1), base)]
        cells[x] = _threshold_cell(draw, ranks, planted)
    return _assemble(draw, cells)


def _violated(draw: _Draw) -> FiniteModel:
    ranks = draw.ranks(ties=False)
    a, b = (int(v) for v in draw.rng.choice(len(draw.zs), 2, replace=False))
    cells = {x: _threshold_cell(draw, ranks) for x in draw.xs}
    lo, hi = (0, 1) if draw.spec.K == 2 else (1, draw.spec.K)
    target = draw.xs[draw.int(0, len(draw.xs) - 1)]
    up = [lo] * len(draw.zs)
    down = [lo] * len(draw.zs)
    up[a], up[b] = hi, lo
    down[a], down[b] = lo, hi
    cells[target] = cells[target] + [ResponseType(tuple(up)), ResponseType(tuple(down))]
    return _assemble(draw, cells)


def _rational_levels(draw: _Draw, n: int) -> list[Fraction]:
    g = draw.spec.granularity
    return [Fraction(draw.int(0, g), g) for _ in range(n)]


def _binary_from_representation(draw: _Draw) -> tuple[FiniteModel, IndexRepresentation]:
    g = draw.spec.granularity
    while True:
        m_vals = _rational_levels(draw, len(draw.zs))
        if len(set(m_vals)) >= 2:
            break
    m = IndexFunction(draw.zs, dict(zip(draw.zs, m_vals)))
    lo, hi = min(m_vals), max(m_vals)
    q, u_law, laws = {}, {}, {}
    for x in draw.xs:
        n_u = draw.int(3, draw.spec.max_types)
        thresholds = [lo - Fraction(draw.int(1, g), g), hi + Fraction(draw.int(1, g), g)]
        inner = sorted(v for v in set(m_vals) if v > lo)
        thresholds.append(inner[draw.int(0, len(inner) - 1)])
        while len(thresholds) < n_u:
            thresholds.append(Fraction(draw.int(-g, 2 * g), g))
        # latent values are labels 0..n_u-1 in shuffled order; q need not be monotone in u
        order = list(draw.rng.permutation(n_u))
        probs = draw.weights(n_u)
        u_law[x] = tuple((Fraction(int(order[i])), probs[i]) for i in range(n_u))
        for i in range(n_u):
            u = Fraction(int(order[i]))
            q[x, u] = thresholds[i]
            laws[x, u] = draw.outcome_law(2)
    return pushforward(m, q, u_law, draw.pzx(), draw.ys, laws)


def _ordered_from_representation(draw: _Draw) -> tuple[OrderedModel, ThresholdRepresentation]:
    K = draw.spec.K
    while True:
        m_vals = _rational_levels(draw, len(draw.zs))
        if len(set(m_vals)) >= 2:
            break
    m = IndexFunction(draw.zs, dict(zip(draw.zs, m_vals)))
    levels = sorted(set(m_vals))
    lower, upper = levels[0] - 1, levels[-1] + 1
    grid = levels + [upper]
    cells = {}
    for x in draw.xs:
        n_t = draw.int(K, max(K, draw.spec.max_types))
        entries = []
        # one type per level keeps every level attainable
        for j in range(K):
            us = [levels[0]] * j + [upper] * (K - 1 - j)
            entries.append(us)
        while len(entries) < n_t:
            entries.append(sorted(grid[draw.int(0, len(grid) - 1)] for _ in range(K - 1)))
        probs = draw.weights(len(entries))
        cells[x] = [(tuple(us), p, draw.outcome_law(K)) for us, p in zip(entries, probs)]
    return ordered_pushforward(m, cells, draw.pzx(), draw.ys, K, lower, upper)


def _certified(model: FiniteModel, spec: DgpSpec) -> bool:
    if classify_monotonicity(model).verdict is not _VERDICT_OF[spec.model_class]:
        return False
    if not check_relevance(model):
        return False
    if model.is_binary:
        pi = propensity_matrix(model, require_interior=False)
        if any(v in (0, 1) for v in pi.values.values()):
            return False
    return True


def generate_with_representation(spec: DgpSpec):
    """``FromRepresentation`` models together with the triple that generated them."""
    if spec.model_class != "FromRepresentation":
        raise ValueError("generate_with_representation needs model_class='FromRepresentation'")
    rng = make_rng(spec.seed)
    for _ in range(spec.max_retries):
        draw = _Draw(spec, rng)
        try:
            model, rep = (_ordered_from_representation if spec.ordered else _binary_from_representation)(draw)
        except ModelValidationError:
            continue
        if _certified(model, spec):
            if not spec.ordered:
                assert verify_representation(model, rep)
            return model, rep
    raise GenerationExhaustedError(f"no certified model after {spec.max_retries} attempts")


def generate_model(spec: DgpSpec) -> FiniteModel:
    """Random model whose monotonicity class is certified to equal ``spec.model_class``."""
    if spec.model_class == "FromRepresentation":
        return generate_with_representation(spec)[0]
    build = {"GlobalMonotone": _global, "LocalOnly": _local_only, "Violated": _violated}[spec.model_class]
    rng = make_rng(spec.seed)
    for _ in range(spec.max_retries):
        try:
            model = build(_Draw(spec, rng))
        except ModelValidationError:
            continue
        if _certified(model, spec):
            return model
    raise GenerationExhaustedError(f"no certified {spec.model_class} model after {spec.max_retries} attempts")


def sample(model: FiniteModel, n: int, seed: int) -> Dataset:
    """``n`` i.i.d. rows ``(x, z, d, y)`` with ``d = D_z`` and ``y`` the realized potential outcome."""
    if n < 1:
        raise ValueError("n must be at least 1")
    atoms, cum = [], []
    total = Fraction(0)
    offset = model.levels[0]
    for x in model.x_support:
        for i, z in enumerate(model.z_support):
            for _, tm in model.positive_types(x):
                for outcomes, p in tm.outcome_law:
                    if p == 0:
                        continue
                    d = tm.treatment[i]
                    atoms.append((x, z, d, outcomes[d - offset]))
                    total += model.pzx[x, z] * tm.prob * p
                    cum.append(float(total))
    cdf = np.asarray(cum)
    cdf[-1] = 1.0
    rng = make_rng(seed)
    picks = np.searchsorted(cdf, rng.random(n), side="right")
    rows = [atoms[int(k)] for k in picks]
    xs, zs, ds, ys = zip(*rows)
    return Dataset(xs, zs, tuple(int(d) for d in ds), ys, model.x_support, model.z_support,
                   model.y_support, model.levels)
