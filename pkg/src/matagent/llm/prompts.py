"""Layered prompt templates, slot rendering and answer extraction.

A template has up to four layers in a fixed order: domain background, task
instructions, current state and format constraint. The format constraint is
mandatory and always last. Slots are written ``{name}`` and are filled in a
single pass, so substituted text is never rescanned. Braces around anything
that is not an identifier are left alone.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Optional

import yaml

from matagent.errors import FormatViolation, TemplateNotFound, UnresolvedSlot
from matagent.vasp_files.incar import IncarDocument, write_incar
from matagent.vasp_files.kpoints import KpointsSpec, write_kpoints
from matagent.vasp_files.outcar import TEXT, ExtractionPattern
from matagent.vasp_files.structure import CrystalStructure
from matagent.vasp_files.poscar import write_poscar

LAYERS = ("domain_background", "task_instructions", "current_state", "format_constraint")
LAYER_TITLES = {
    "domain_background": "Background",
    "task_instructions": "Task",
    "current_state": "Current state",
    "format_constraint": "Answer format",
}
SLOT = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")
FENCE = "```"

# First fenced block. An opening line that is a bare word (``incar``) is an
# info string, not content.
FENCED_BLOCK = ExtractionPattern("answer", r"(?s)```(.*?)```", TEXT)
ANSWER_KINDS = ("incar", "text", "choice")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    layers: tuple  # ((layer_name, body), ...)
    answer_kind: str = "incar"
    answer_extractor: ExtractionPattern = FENCED_BLOCK

    def __post_init__(self):
        names = [name for name, _ in self.layers]
        if not names or names[-1] != "format_constraint":
            raise ValueError(f"template {self.id}: format_constraint must be present and last")
        unknown = [n for n in names if n not in LAYERS]
        if unknown:
            raise ValueError(f"template {self.id}: unknown layers {unknown}")
        if names != sorted(names, key=LAYERS.index) or len(set(names)) != len(names):
            raise ValueError(f"template {self.id}: layers must appear once each, in order {LAYERS}")
        if self.answer_kind not in ANSWER_KINDS:
            raise ValueError(f"template {self.id}: answer_kind must be one of {ANSWER_KINDS}")

    @property
    def slots(self) -> list:
        seen = []
        for _, body in self.layers:
            for name in SLOT.findall(body):
                if name not in seen:
                    seen.append(name)
        return seen


def as_prompt_text(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, IncarDocument):
        return write_incar(value).rstrip("\n")
    if isinstance(value, CrystalStructure):
        return write_poscar(value).rstrip("\n")
    if isinstance(value, KpointsSpec):
        return write_kpoints(value).rstrip("\n")
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "\n".join(as_prompt_text(v) for v in value)
    if isinstance(value, dict):
        return yaml.safe_dump({k: _plain(v) for k, v in value.items()}, sort_keys=False).rstrip("\n")
    return str(value)


def _plain(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return as_prompt_text(v)


def _resolve(ctx, name):
    """Slot lookup in ctx.values, then ctx.simulation_state; plain mappings work too."""
    if isinstance(ctx, Mapping):
        return ctx.get(name, _MISSING)
    values = getattr(ctx, "values", {}) or {}
    if name in values:
        return values[name]
    state = getattr(ctx, "simulation_state", {}) or {}
    return state.get(name, _MISSING)


_MISSING = object()


def check_slots(tpl: PromptTemplate, ctx) -> None:
    for layer, body in tpl.layers:
        for name in SLOT.findall(body):
            if _resolve(ctx, name) is _MISSING:
                raise UnresolvedSlot(name, layer)


def render_prompt(tpl: PromptTemplate, ctx) -> str:
    check_slots(tpl, ctx)
    parts = []
    for layer, body in tpl.layers:
        text = SLOT.sub(lambda m: as_prompt_text(_resolve(ctx, m.group(1))), body)
        parts.append(f"### {LAYER_TITLES[layer]}\n{text.strip()}\n")
    return "\n".join(parts)


def wrap_in_fence(content: str, info: str = "") -> str:
    return f"{FENCE}{info}\n{content}\n{FENCE}"


def extract_answer(text: str, tpl: Optional[PromptTemplate] = None) -> str:
    """Content of the first fenced block; surrounding prose is dropped."""
    pattern = tpl.answer_extractor if tpl is not None else FENCED_BLOCK
    m = pattern.regex.search(text)
    if m is None:
        raise FormatViolation("no fenced answer block found")
    body = m.group(1)
    if "\n" not in body:
        return body.strip()
    first, rest = body.split("\n", 1)
    if re.fullmatch(r"[\w+.-]*", first.strip()):
        body = rest
    if body.endswith("\n"):
        body = body[:-1]
    return body


def templates_from_yaml(text: str) -> dict:
    data = yaml.safe_load(text) or {}
    out = {}
    for tid, spec in (data.get("templates") or {}).items():
        layers = tuple((name, spec["layers"][name]) for name in LAYERS if name in spec["layers"])
        extra = [name for name in spec["layers"] if name not in LAYERS]
        if extra:
            raise ValueError(f"template {tid}: unknown layers {extra}")
        out[tid] = PromptTemplate(tid, layers, spec.get("answer", "incar"))
    return out


class TemplateLibrary:
    def __init__(self, templates: dict):
        self.templates = dict(templates)

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self.templates[template_id]
        except KeyError:
            raise TemplateNotFound(f"no prompt template {template_id!r}") from None

    def __contains__(self, template_id):
        return template_id in self.templates

    @classmethod
    def from_yaml(cls, text: str) -> "TemplateLibrary":
        return cls(templates_from_yaml(text))
