"""Tag registry and interdependence rules used to vet an INCAR before a run.

Validation never raises: every problem becomes a :class:`Violation` in the
returned report, and an empty report means the deck is runnable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

import yaml

from matagent.vasp_files.incar import BOOL, INT, REAL, TEXT, IncarDocument

UNKNOWN_TAG = "unknown_tag"
WRONG_KIND = "wrong_kind"
OUT_OF_RANGE = "out_of_range"
IBRION_POTIM = "ibrion_potim"
NEB_CELL_CONSISTENCY = "neb_cell_consistency"

_ACCEPTS = {
    "int": {INT},
    "real": {INT, REAL},
    "bool": {BOOL},
    "text": {TEXT},
    "list": {INT, REAL, "IntList", "RealList", TEXT},
}


@dataclass(frozen=True)
class TagSpec:
    kind: str
    range: Optional[tuple] = None
    enum: Optional[tuple] = None


@dataclass(frozen=True)
class Violation:
    rule_id: str
    tag: Optional[str]
    message: str


@dataclass(frozen=True)
class CrossStepContext:
    """Decks from earlier steps of the same workflow (e.g. endpoint relaxations)."""
    prior_decks: tuple = ()


@dataclass(frozen=True)
class InterdependenceRule:
    id: str
    description: str
    tags: tuple
    predicate: Callable  # (doc, cross_step) -> list[str] of messages
    severity: str = "Fatal"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def rule_ids(self) -> list[str]:
        seen = []
        for v in self.violations:
            if v.rule_id not in seen:
                seen.append(v.rule_id)
        return seen

    def describe(self) -> str:
        return "\n".join(
            f"[{v.rule_id}] {v.tag + ': ' if v.tag else ''}{v.message}" for v in self.violations
        )


def _int_or_none(doc, tag):
    v = doc.value(tag)
    if v is not None and v.kind == INT:
        return v.value
    if v is not None and v.kind == REAL and float(v.value).is_integer():
        return int(v.value)
    return None


def effective_ibrion(doc: IncarDocument) -> Optional[int]:
    """IBRION as VASP would use it: -1 for NSW <= 1, else 0, when unset."""
    if "IBRION" in doc:
        return _int_or_none(doc, "IBRION")
    nsw = _int_or_none(doc, "NSW") or 0
    return -1 if nsw <= 1 else 0


def _ibrion_potim(doc, cross_step):
    ib = effective_ibrion(doc)
    has_potim = "POTIM" in doc
    if ib in (0, 1, 2, 3) and not has_potim:
        what = "the MD time step" if ib == 0 else "the ionic step scaling"
        return [f"IBRION={ib} needs POTIM ({what})"]
    if ib == -1 and has_potim:
        return ["POTIM is meaningless with IBRION=-1 (ions are not moved)"]
    return []


def _neb_cell_consistency(doc, cross_step):
    images = _int_or_none(doc, "IMAGES") or 0
    if images <= 0 or cross_step is None:
        return []
    bad = [_int_or_none(d, "ISIF") for d in cross_step.prior_decks]
    bad = [isif for isif in bad if isif is not None and isif >= 3]
    if bad:
        return [f"endpoint relaxations used ISIF={bad[0]}; a changing cell makes the endpoint "
                "cells inconsistent and breaks NEB interpolation (use ISIF=2)"]
    return []


RULES = {
    IBRION_POTIM: InterdependenceRule(
        IBRION_POTIM, "POTIM must be set exactly when IBRION moves ions",
        ("IBRION", "POTIM", "NSW"), _ibrion_potim),
    NEB_CELL_CONSISTENCY: InterdependenceRule(
        NEB_CELL_CONSISTENCY, "NEB endpoints must come from fixed-cell relaxations",
        ("IMAGES", "ISIF"), _neb_cell_consistency),
}


@dataclass
class TagRegistry:
    known_tags: dict
    rules: list

    def __post_init__(self):
        for rule in self.rules:
            missing = [t for t in rule.tags if t not in self.known_tags]
            if missing:
                raise ValueError(f"rule {rule.id} refers to unknown tags {missing}")

    @classmethod
    def from_yaml(cls, path) -> "TagRegistry":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))

    @classmethod
    def from_dict(cls, data) -> "TagRegistry":
        tags = {}
        for name, spec in (data.get("tags") or {}).items():
            rng = spec.get("range")
            enum = spec.get("enum")
            tags[name.upper()] = TagSpec(
                spec["kind"],
                tuple(rng) if rng is not None else None,
                tuple(enum) if enum is not None else None,
            )
        rules = [RULES[r] for r in data.get("rules", [])]
        return cls(tags, rules)

    @classmethod
    def default(cls) -> "TagRegistry":
        path = resources.files("matagent.sim") / "data" / "tags.yaml"
        return cls.from_dict(yaml.safe_load(path.read_text()))


def _check_value(tag, spec: TagSpec, value):
    accepted = _ACCEPTS.get(spec.kind)
    if accepted is not None and value.kind not in accepted:
        return Violation(WRONG_KIND, tag, f"expected {spec.kind}, got {value.kind} {value.serialize()!r}")
    if spec.enum is not None:
        if value.kind == TEXT:
            ok = value.value.upper() in {str(e).upper() for e in spec.enum}
        else:
            ok = value.value in spec.enum
        if not ok:
            return Violation(OUT_OF_RANGE, tag, f"{value.serialize()} not one of {list(spec.enum)}")
    if spec.range is not None and value.is_numeric():
        lo, hi = spec.range
        x = value.as_float()
        if (lo is not None and x < lo) or (hi is not None and x > hi):
            return Violation(OUT_OF_RANGE, tag, f"{value.serialize()} outside [{lo}, {hi}]")
    return None


def validate_deck(incar: IncarDocument, registry: TagRegistry,
                  cross_step: Optional[CrossStepContext] = None) -> ValidationReport:
    report = ValidationReport()
    for entry in incar:
        spec = registry.known_tags.get(entry.tag)
        if spec is None:
            report.violations.append(Violation(UNKNOWN_TAG, entry.tag, "tag does not exist"))
            continue
        problem = _check_value(entry.tag, spec, entry.value)
        if problem:
            report.violations.append(problem)
    for rule in registry.rules:
        for message in rule.predicate(incar, cross_step):
            report.violations.append(Violation(rule.id, None, message))
    return report
