"""JSON encodings of models and representations.

Rationals are written as ``"num/den"`` strings and keys are sorted, so a
model serializes to the same bytes every time and parses back to an equal
object.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Union

from .exceptions import SchemaError
from .model import FiniteModel, JointModel, OrderedModel, ResponseType, TypeMass
from .ordered import ThresholdRepresentation
from .rational import as_fraction, fraction_str
from .report import canonical_json
from .representation import IndexFunction, IndexRepresentation, Interval, NormalizedForm


def _require(d: dict, *keys: str):
    missing = [k for k in keys if k not in d]
    if missing:
        raise SchemaError(f"missing field(s): {', '.join(missing)}")


def model_to_dict(model: Union[FiniteModel, JointModel]) -> dict:
    zs = model.z_support
    out = {
        "z_support": list(zs),
        "x_support": list(model.x_support),
        "y_support": list(model.y_support),
    }
    if not model.is_binary:
        out["K"] = len(model.levels)
    if isinstance(model, JointModel):
        out["joint"] = [
            {
                "x": x,
                "z": z,
                "treatment_map": dict(zip(zs, t)),
                "outcomes": list(o),
                "prob": fraction_str(p),
            }
            for (x, z, t, o), p in model.mass.items()
        ]
        return out
    out["pzx"] = {x: {z: fraction_str(model.pzx[x, z]) for z in zs} for x in model.x_support}
    out["types_given_x"] = {
        x: [
            {
                "treatment_map": tm.response.as_map(zs),
                "outcome_law": [
                    {"outcomes": list(o), "prob": fraction_str(p)} for o, p in tm.outcome_law
                ],
                "prob": fraction_str(tm.prob),
            }
            for tm in model.types[x]
        ]
        for x in model.x_support
    }
    return out


def model_from_dict(d: dict) -> Union[FiniteModel, JointModel]:
    _require(d, "z_support", "x_support", "y_support")
    zs = [str(z) for z in d["z_support"]]
    levels = (0, 1) if "K" not in d else tuple(range(1, int(d["K"]) + 1))
    try:
        if "joint" in d:
            mass = {}
            for row in d["joint"]:
                key = (row["x"], row["z"], tuple(row["treatment_map"][z] for z in zs),
                       tuple(row["outcomes"]))
                mass[key] = as_fraction(row["prob"])
            return JointModel(zs, d["x_support"], d["y_support"], mass, levels)
        _require(d, "pzx", "types_given_x")
        pzx = {(x, z): as_fraction(d["pzx"][x][z]) for x in d["x_support"] for z in zs}
        types = {
            x: tuple(
                TypeMass(
                    ResponseType(tuple(entry["treatment_map"][z] for z in zs)),
                    as_fraction(entry["prob"]),
                    tuple((tuple(o["outcomes"]), as_fraction(o["prob"])) for o in entry["outcome_law"]),
                )
                for entry in d["types_given_x"][x]
            )
            for x in d["x_support"]
        }
    except KeyError as exc:
        raise SchemaError(f"missing entry {exc}") from None
    cls = FiniteModel if "K" not in d else OrderedModel
    return cls(zs, d["x_support"], d["y_support"], pzx, types, levels)


def model_to_json(model) -> str:
    return canonical_json(model_to_dict(model))


def model_from_json(text: str):
    return model_from_dict(json.loads(text))


def load_model(path: Union[str, Path]):
    try:
        return model_from_json(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None


def digest(text: Union[str, bytes]) -> str:
    if isinstance(text, str):
        text = text.encode()
    return "sha256:" + hashlib.sha256(text).hexdigest()


# ---------------------------------------------------------------- representations


def representation_to_dict(rep: IndexRepresentation) -> dict:
    zs = rep.z_support
    out = {
        "z_support": list(zs),
        "m": {z: fraction_str(rep.m(z)) for z in zs},
        "lower": fraction_str(rep.lower),
        "upper": fraction_str(rep.upper),
        "u_law": {
            x: [{"level": fraction_str(u), "prob": fraction_str(p)} for u, p in rep.u_law[x]]
            for x in rep.x_support
        },
        "q": {
            x: [{"u": fraction_str(u), "threshold": fraction_str(rep.q[x, u])} for u, _ in rep.u_law[x]]
            for x in rep.x_support
        },
        "coupling": {
            x: [{"type_index": i, "u": fraction_str(u)} for i, u in rep.coupling[x]]
            for x in rep.x_support
        },
        "x_support": list(rep.x_support),
        "notes": list(rep.notes),
    }
    if rep.normalized is not None:
        out["q_star"] = {
            x: [
                {
                    "u_star_interval": [fraction_str(iv.lo), fraction_str(iv.hi)],
                    "threshold": fraction_str(iv.threshold),
                    "members": list(iv.members),
                }
                for iv in cells
            ]
            for x, cells in rep.normalized.intervals.items()
        }
    return out


def representation_from_dict(d: dict) -> IndexRepresentation:
    _require(d, "z_support", "x_support", "m", "u_law", "q", "coupling", "lower", "upper")
    m = IndexFunction(d["z_support"], {z: as_fraction(v) for z, v in d["m"].items()})
    xs = d["x_support"]
    u_law = {x: tuple((as_fraction(e["level"]), as_fraction(e["prob"])) for e in d["u_law"][x]) for x in xs}
    q = {(x, as_fraction(e["u"])): as_fraction(e["threshold"]) for x in xs for e in d["q"][x]}
    coupling = {x: tuple((int(e["type_index"]), as_fraction(e["u"])) for e in d["coupling"][x]) for x in xs}
    normalized = None
    if "q_star" in d:
        normalized = NormalizedForm({
            x: tuple(
                Interval(as_fraction(e["u_star_interval"][0]), as_fraction(e["u_star_interval"][1]),
                         as_fraction(e["threshold"]), tuple(e["members"]))
                for e in d["q_star"][x]
            )
            for x in xs
        })
    return IndexRepresentation(m, q, u_law, coupling, as_fraction(d["lower"]), as_fraction(d["upper"]),
                               normalized, tuple(d.get("notes", ())))


def threshold_rep_to_dict(rep: ThresholdRepresentation) -> dict:
    zs = rep.z_support
    return {
        "K": rep.K,
        "z_support": list(zs),
        "x_support": list(rep.x_support),
        "m": {z: fraction_str(rep.m(z)) for z in zs},
        "lower": fraction_str(rep.lower),
        "upper": fraction_str(rep.upper),
        "thresholds": {
            x: [
                {"type_id": idx, "thresholds": [fraction_str(u) for u in us], "prob": fraction_str(p)}
                for idx, us, p in cells
            ]
            for x, cells in rep.thresholds.items()
        },
    }


def threshold_rep_from_dict(d: dict) -> ThresholdRepresentation:
    _require(d, "K", "z_support", "x_support", "m", "lower", "upper", "thresholds")
    m = IndexFunction(d["z_support"], {z: as_fraction(v) for z, v in d["m"].items()})
    thresholds = {
        x: tuple(
            (int(e["type_id"]), tuple(as_fraction(u) for u in e["thresholds"]), as_fraction(e["prob"]))
            for e in d["thresholds"][x]
        )
        for x in d["x_support"]
    }
    return ThresholdRepresentation(m, thresholds, as_fraction(d["lower"]), as_fraction(d["upper"]), int(d["K"]))


def index_to_dict(m: IndexFunction) -> dict:
    return {"z_support": list(m.z_support), "m": {z: fraction_str(m(z)) for z in m.z_support}}


def fraction_table(values: dict) -> dict:
    return {k: fraction_str(v) if isinstance(v, Fraction) else v for k, v in values.items()}
