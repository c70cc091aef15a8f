"""Workflow definitions and the declarative manifest format.

A manifest is a YAML file::

    id: structure_relaxation
    task_type: SR
    objective: >
      Prose used when the agent picks a workflow for a request.
    required_inputs: [POSCAR, KPOINTS, POTCAR]
    parameters: {n_images: 3}          # optional constants, readable as $name
    steps:
      - component: GetLLMAnswer        # ReadFile | WriteFile | Command |
        bindings: {template: sr_params}  #   RegexExtractor | GetLLMAnswer
        output_key: incar
        on_error: Abort                # or RecordAndContinue (default Abort)

A binding value starting with ``$`` names a context key: a required input
(its file content), a parameter, ``request_text`` or the output of an
earlier step. ``$$`` escapes a literal dollar. Anything else is a literal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from matagent.errors import ManifestError

COMPONENTS = ("ReadFile", "WriteFile", "Command", "RegexExtractor", "GetLLMAnswer")
ABORT = "Abort"
RECORD_AND_CONTINUE = "RecordAndContinue"
ON_ERROR = (ABORT, RECORD_AND_CONTINUE)
BUILTIN_KEYS = ("request_text",)


@dataclass(frozen=True)
class ContextRef:
    key: str


def parse_binding(value):
    if isinstance(value, str) and value.startswith("$$"):
        return value[1:]
    if isinstance(value, str) and value.startswith("$"):
        return ContextRef(value[1:])
    return value


@dataclass(frozen=True)
class WorkflowStep:
    component: str
    bindings: dict
    output_key: str
    on_error: str = ABORT

    def refs(self) -> list:
        return [v.key for v in self.bindings.values() if isinstance(v, ContextRef)]


@dataclass(frozen=True)
class WorkflowDef:
    id: str
    objective: str
    steps: tuple
    required_inputs: tuple
    task_type: str = ""
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.steps:
            raise ManifestError(f"workflow {self.id}: step list is empty")
        known = set(self.required_inputs) | set(self.parameters) | set(BUILTIN_KEYS)
        seen = set()
        for k, step in enumerate(self.steps, start=1):
            if step.component not in COMPONENTS:
                raise ManifestError(f"workflow {self.id} step {k}: unknown component {step.component!r}")
            if step.on_error not in ON_ERROR:
                raise ManifestError(f"workflow {self.id} step {k}: on_error must be one of {ON_ERROR}")
            for ref in step.refs():
                if ref not in known:
                    raise ManifestError(
                        f"workflow {self.id} step {k}: ${ref} is neither an input nor an earlier output")
            if step.output_key in seen or step.output_key in known:
                raise ManifestError(f"workflow {self.id} step {k}: output key {step.output_key!r} reused")
            seen.add(step.output_key)
            known.add(step.output_key)


def workflow_from_dict(data: dict) -> WorkflowDef:
    try:
        steps = tuple(
            WorkflowStep(
                component=s["component"],
                bindings={k: parse_binding(v) for k, v in (s.get("bindings") or {}).items()},
                output_key=s["output_key"],
                on_error=s.get("on_error", ABORT),
            )
            for s in data.get("steps") or ()
        )
        return WorkflowDef(
            id=data["id"],
            objective=" ".join(str(data["objective"]).split()),
            steps=steps,
            required_inputs=tuple(data.get("required_inputs") or ()),
            task_type=data.get("task_type", ""),
            parameters=dict(data.get("parameters") or {}),
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed workflow manifest: missing or bad field {exc}") from None


def load_workflow(path) -> WorkflowDef:
    with open(path) as fh:
        return workflow_from_dict(yaml.safe_load(fh))


def load_library(directory=None) -> list:
    """All ``*.workflow.yaml`` manifests in a directory, sorted by file name.

    With no directory the bundled library is loaded.
    """
    if directory is None:
        base = resources.files("matagent.engine") / "library"
        files = sorted((p for p in base.iterdir() if p.name.endswith(".workflow.yaml")), key=lambda p: p.name)
        library = [workflow_from_dict(yaml.safe_load(p.read_text())) for p in files]
    else:
        library = [load_workflow(p) for p in sorted(Path(directory).glob("*.workflow.yaml"))]
    ids = [w.id for w in library]
    if len(set(ids)) != len(ids):
        raise ManifestError(f"duplicate workflow ids in library: {ids}")
    return library


def default_templates_text() -> str:
    return (resources.files("matagent.engine") / "library" / "templates.yaml").read_text()
