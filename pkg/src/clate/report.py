"""Audit report container and canonical JSON encoding."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

from ._version import __version__
from .rational import fraction_str

STATUSES = ("pass", "fail", "vacuous", "skipped", "underpowered")


def to_jsonable(obj: Any) -> Any:
    """Recursively convert to JSON types; rationals become ``"num/den"``."""
    if isinstance(obj, Fraction):
        return fraction_str(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, tuple) and hasattr(obj, "_asdict"):
        return {k: to_jsonable(v) for k, v in obj._asdict().items()}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, float) and obj.is_integer():
        return obj
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


@dataclass
class CheckEntry:
    name: str
    status: str
    witnesses: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    tolerance: Optional[float] = None
    estimate: bool = False
    reason: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == "fail" and not self.witnesses:
            raise ValueError(f"failed check {self.name!r} needs a witness")

    def to_dict(self) -> dict:
        return {
            "check_name": self.name,
            "status": self.status,
            "witnesses": to_jsonable(self.witnesses),
            "values": to_jsonable(self.values),
            "tolerance": self.tolerance,
            "estimate": self.estimate,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CheckEntry":
        return cls(d["check_name"], d["status"], d["witnesses"], d["values"],
                   d.get("tolerance"), d.get("estimate", False), d.get("reason", ""))


@dataclass
class AuditReport:
    input_digest: str
    input_kind: str
    checks: list[CheckEntry]
    notes: list[str] = field(default_factory=list)
    version: str = __version__
    rng: Optional[str] = None

    @property
    def verdict(self) -> str:
        return "fail" if any(c.status == "fail" for c in self.checks) else "pass"

    def check(self, name: str) -> CheckEntry:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def statuses(self) -> dict[str, str]:
        return {c.name: c.status for c in self.checks}

    def to_dict(self) -> dict:
        return {
            "toolkit_version": self.version,
            "input_digest": self.input_digest,
            "input_kind": self.input_kind,
            "verdict": self.verdict,
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
            "rng": self.rng,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "AuditReport":
        report = cls(d["input_digest"], d["input_kind"],
                     [CheckEntry.from_dict(c) for c in d["checks"]],
                     list(d.get("notes", [])), d["toolkit_version"], d.get("rng"))
        if report.verdict != d["verdict"]:
            raise ValueError("stored verdict disagrees with check statuses")
        return report

    @classmethod
    def from_json(cls, text: str) -> "AuditReport":
        return cls.from_dict(json.loads(text))
