"""The five modular components a workflow step can invoke."""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Optional

from matagent.errors import (
    BackendCrash,
    CellMismatch,
    DisallowedCommand,
    FileNotFoundInWorkdir,
    FormatViolation,
    MissingInputFile,
    ParseError,
    SpeciesMismatch,
    WorkflowError,
)
from matagent.llm.client import LlmRequest
from matagent.llm.prompts import TemplateLibrary, check_slots, extract_answer, render_prompt
from matagent.sim.backend import CONVERGED_OK, SimulatedBackend
from matagent.sim.neb import neb_interpolate
from matagent.vasp_files.incar import IncarDocument, parse_incar, write_incar
from matagent.vasp_files.kpoints import KpointsSpec, write_kpoints
from matagent.vasp_files.outcar import (
    CONVERGED_LINE,
    DEFAULT_PATTERNS,
    PATTERN_LIBRARY,
    ExtractionPattern,
    band_gap_from_eigenvalues,
    extract_outcar_summary,
    extract_quantities,
    parse_nebef,
)
from matagent.vasp_files.poscar import parse_poscar, write_poscar
from matagent.vasp_files.structure import CrystalStructure

ALLOWED_ACTIONS = ("run_backend", "neb_interpolate", "noop")
CORRECTION = (
    "Your previous answer could not be used: {error}\n"
    "Answer the same request again and follow the answer format exactly."
)


@dataclass(frozen=True)
class CommandResult:
    action: str
    exit_code: int
    stdout: str = ""
    stderr: str = ""
    # backend outcome status (ConvergedOk, ValidationFailed, ...) when known
    status: str = ""
    details: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    @property
    def ok(self) -> bool:
        return self.exit_code == 0


class SimBackend:
    """In-process simulated VASP."""

    name = "sim"

    def __init__(self, **kwargs):
        self.impl = SimulatedBackend(**kwargs)

    def run(self, directory) -> CommandResult:
        try:
            outcome = self.impl.run(directory)
        except MissingInputFile as exc:
            return CommandResult("run_backend", 2, "", f"missing input: {exc}", "MissingInput")
        except Exception as exc:  # anything else is an abnormal termination
            raise BackendCrash(f"simulated backend crashed: {type(exc).__name__}: {exc}") from exc
        return CommandResult("run_backend", outcome.exit_code, outcome.summary(), outcome.reason,
                             outcome.status, MappingProxyType(outcome.to_dict()))


class ExternalBackend:
    """A configured program (e.g. a real VASP binary) run in the step directory.

    The command comes from the run configuration, never from a model answer.
    """

    name = "external"

    def __init__(self, command: str, timeout: Optional[float] = None):
        self.argv = shlex.split(command)
        if not self.argv:
            raise ValueError("empty backend command")
        self.timeout = timeout

    def run(self, directory) -> CommandResult:
        try:
            proc = subprocess.run(self.argv, cwd=directory, capture_output=True, text=True,
                                  timeout=self.timeout, check=False)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise BackendCrash(f"external backend failed to run: {exc}") from exc
        if proc.returncode < 0:
            raise BackendCrash(f"external backend killed by signal {-proc.returncode}")
        outcar = directory / "OUTCAR"
        converged = outcar.is_file() and CONVERGED_LINE.strip() in outcar.read_text(errors="replace")
        status = CONVERGED_OK if proc.returncode == 0 and converged else "NotConverged"
        return CommandResult("run_backend", 0 if status == CONVERGED_OK else 1, proc.stdout, proc.stderr, status)


@dataclass
class ComponentDeps:
    llm: object
    templates: TemplateLibrary
    backend: object = None
    temperature: float = 0.0
    max_answer_length: int = 2048

    def __post_init__(self):
        if self.backend is None:
            self.backend = SimBackend()


def as_file_text(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, IncarDocument):
        return write_incar(value)
    if isinstance(value, CrystalStructure):
        return write_poscar(value)
    if isinstance(value, KpointsSpec):
        return write_kpoints(value)
    raise WorkflowError(f"cannot write a {type(value).__name__} to a file")


# -- file I/O -------------------------------------------------------------------


def run_read_file(path, ctx) -> str:
    target = ctx.resolve_path(path)
    if not target.is_file():
        raise FileNotFoundInWorkdir(f"{path} not found in the working directory")
    return target.read_text()


def run_write_file(path, content, ctx) -> str:
    target = ctx.resolve_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(as_file_text(content))
    return str(path)


# -- commands -------------------------------------------------------------------


def _interpolate(ctx, initial, final, images, dir) -> CommandResult:
    try:
        a = parse_poscar(run_read_file(initial, ctx))
        b = parse_poscar(run_read_file(final, ctx))
        n = int(images)
        band = [a, *neb_interpolate(a, b, n), b]
    except (CellMismatch, SpeciesMismatch) as exc:
        rule = getattr(exc, "rule_id", "")
        return CommandResult("neb_interpolate", 1, "", str(exc), type(exc).__name__,
                             MappingProxyType({"rule_id": rule}))
    except (ParseError, FileNotFoundInWorkdir, ValueError) as exc:
        return CommandResult("neb_interpolate", 1, "", str(exc), "BadInput")
    root = ctx.resolve_path(dir)
    for k, s in enumerate(band):
        run_write_file(f"{dir}/{k:02d}/POSCAR", s, ctx)
    # endpoint decks and outputs travel with the endpoints, as VASP expects
    for src, k in ((initial, 0), (final, n + 1)):
        src_dir = ctx.resolve_path(src).parent
        for name in ("INCAR", "OUTCAR"):
            if (src_dir / name).is_file():
                (root / f"{k:02d}" / name).write_text((src_dir / name).read_text())
    return CommandResult("neb_interpolate", 0, f"wrote {n} images and 2 endpoints to {dir}/00..{n + 1:02d}\n",
                         "", "Interpolated", MappingProxyType({"n_images": n}))


def run_command(cmd, ctx, deps: ComponentDeps, **args) -> CommandResult:
    if not isinstance(cmd, str) or cmd not in ALLOWED_ACTIONS:
        raise DisallowedCommand(f"command {cmd!r} is not one of {ALLOWED_ACTIONS}")
    if cmd == "noop":
        return CommandResult("noop", 0)
    if cmd == "neb_interpolate":
        missing = [k for k in ("initial", "final", "images", "dir") if k not in args]
        if missing:
            raise WorkflowError(f"neb_interpolate needs {missing}")
        return _interpolate(ctx, args["initial"], args["final"], args["images"], args["dir"])
    directory = ctx.resolve_path(args.get("dir", "."))
    if not directory.is_dir():
        return CommandResult("run_backend", 2, "", f"directory {args.get('dir')} does not exist", "MissingInput")
    return deps.backend.run(directory)


# -- extraction -------------------------------------------------------------------


def _pattern(spec) -> ExtractionPattern:
    if isinstance(spec, ExtractionPattern):
        return spec
    if isinstance(spec, str):
        optional = spec.endswith("?")
        name = spec.rstrip("?")
        if name not in PATTERN_LIBRARY:
            raise WorkflowError(f"unknown extraction pattern {name!r}")
        p = PATTERN_LIBRARY[name]
        return p.optional() if optional else p
    return ExtractionPattern(spec["name"], spec["pattern"], spec.get("type", "Real"), spec.get("required", True))


def run_regex_extractor(text, patterns=(), band_gap=False, format="outcar"):
    """Named quantities from OUTCAR or nebef.dat text, as a read-only mapping."""
    if not isinstance(text, str):
        raise WorkflowError(f"extractor source must be text, not {type(text).__name__}")
    if format == "nebef":
        neb = parse_nebef(text)
        out = {"barrier": neb.barrier_ev, "delta_e": neb.delta_e_ev, "n_points": len(neb.energies)}
    elif format == "outcar":
        out = extract_quantities(text, [_pattern(p) for p in patterns] if patterns else DEFAULT_PATTERNS)
        if band_gap:
            gap, direct = band_gap_from_eigenvalues(extract_outcar_summary(text))
            out["band_gap"] = gap
            out["gap_direct"] = direct
    else:
        raise WorkflowError(f"unknown extraction format {format!r}")
    return MappingProxyType(out)


# -- LLM --------------------------------------------------------------------------


def _convert(answer: str, kind: str):
    if kind == "incar":
        try:
            doc = parse_incar(answer)
        except ParseError as exc:
            raise FormatViolation(f"the block is not a valid INCAR ({exc})") from None
        if len(doc) == 0:
            raise FormatViolation("the INCAR block is empty")
        return doc
    return answer.strip()


def run_get_llm_answer(template_id, ctx, deps: ComponentDeps, client):
    """Render, ask, extract and convert, with one correction round."""
    tpl = deps.templates.get(template_id)
    check_slots(tpl, ctx)
    prompt = render_prompt(tpl, ctx)
    scope = getattr(client, "scope", "")
    req = LlmRequest(prompt, template_id=template_id, temperature=deps.temperature,
                     max_answer_length=deps.max_answer_length, scope=scope)
    text = client.complete(req).text
    try:
        return _convert(extract_answer(text, tpl), tpl.answer_kind)
    except FormatViolation as first:
        follow_up = CORRECTION.format(error=first)
        retry = LlmRequest(follow_up, template_id=template_id, temperature=deps.temperature,
                           max_answer_length=deps.max_answer_length, history=((prompt, text),), scope=scope)
        text2 = client.complete(retry).text
        try:
            return _convert(extract_answer(text2, tpl), tpl.answer_kind)
        except FormatViolation as second:
            raise FormatViolation(f"{template_id}: answer unusable after one retry: {second}") from None

