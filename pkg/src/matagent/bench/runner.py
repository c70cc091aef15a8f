"""Running a benchmark: one workflow per entry, then scoring."""

from __future__ import annotations

import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from matagent.bench.dataset import REQUIRED_ROLES, load_benchmark
from matagent.bench.records import RECORDS_DIR, collect, new_record, score_records, write_record
from matagent.engine.components import (
    ComponentDeps,
    run_command,
    run_get_llm_answer,
    run_read_file,
    run_regex_extractor,
    run_write_file,
)
from matagent.engine.context import ExecutionContext, TaskRequest
from matagent.engine.executor import execute_workflow, select_workflow
from matagent.errors import BenchmarkError, FormatViolation, MatAgentError
from matagent.scoring.tasks import AE, BS, SR, TASK_TYPES, TS, ScoringOptions

log = logging.getLogger(__name__)

RUNS_DIR = "runs"
REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.txt"
AGENT, BASELINE = "agent", "baseline"
BASELINE_TEMPLATE = "monolithic"
# structures a monolithic deck is applied to: (input role, run dir, output prefix)
BASELINE_RUNS = {
    SR: (("POSCAR", ".", "relax"),),
    BS: (("POSCAR", ".", "bs"),),
    AE: (("POSCAR_gas", "gas", "gas"), ("POSCAR_surface", "surf", "surf"), ("POSCAR_adsorbate", "ads", "ads")),
    TS: (("POSCAR_initial", "is", "is"), ("POSCAR_final", "fs", "fs")),
}


@dataclass
class BenchConfig:
    benchmark_dir: Path
    out_dir: Path
    tasks: tuple = TASK_TYPES
    parallel: int = 1
    agent: bool = True
    overwrite: bool = False
    scoring: ScoringOptions = field(default_factory=ScoringOptions)


@dataclass
class BenchOutcome:
    records: list
    report: object
    skipped: list


def run_agent_entry(entry, work_dir: Path, deps: ComponentDeps, library) -> dict:
    rec = new_record(entry, AGENT)
    client = deps.llm.for_run(entry.id)
    request = TaskRequest(entry.request, dict(entry.inputs), run_id=entry.id)
    try:
        wf = select_workflow(request, library, deps, client)
        rec["workflow_id"] = wf.id
        if wf.task_type != entry.task_type:
            rec["error"] = f"selected {wf.id} ({wf.task_type}) for a {entry.task_type} task"
            return rec
        result = execute_workflow(wf, request, ExecutionContext(work_dir), deps, client)
    except MatAgentError as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
        return rec
    rec.update(status=result.status, failed_step=result.failed_step, error=result.error)
    rec["flags"], rec["predictions"] = collect(entry.task_type, result.outputs)
    return rec


def _inputs_text(entry) -> str:
    return "\n".join(f"--- {role} ---\n{entry.inputs[role].rstrip()}" for role in REQUIRED_ROLES[entry.task_type])


def run_baseline_entry(entry, work_dir: Path, deps: ComponentDeps) -> dict:
    """One prompt, one deck, applied unchanged to every structure.

    No workflow selection, no format retry, no interpolation and no NEB.
    """
    rec = new_record(entry, BASELINE)
    rec["workflow_id"] = BASELINE_TEMPLATE
    client = deps.llm.for_run(entry.id)
    ctx = ExecutionContext(work_dir)
    values = {"request_text": entry.request, "inputs": _inputs_text(entry)}
    single_shot = ComponentDeps(_NoRetry(client), deps.templates, deps.backend,
                                deps.temperature, deps.max_answer_length)
    try:
        deck = run_get_llm_answer(BASELINE_TEMPLATE, values, single_shot, single_shot.llm)
    except MatAgentError as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
        return rec
    outputs, errors = {}, []
    for role, d, key in BASELINE_RUNS[entry.task_type]:
        try:
            run_write_file(f"{d}/INCAR", deck, ctx)
            run_write_file(f"{d}/POSCAR", entry.inputs[role], ctx)
            run_write_file(f"{d}/KPOINTS", entry.inputs["KPOINTS"], ctx)
            run_write_file(f"{d}/POTCAR", entry.inputs["POTCAR"], ctx)
            res = run_command("run_backend", ctx, deps, dir=d)
            outputs[f"{key}_run"] = res
            if not res.ok:
                errors.append(f"{d}: {res.status}")
                continue
            outcar = run_read_file(f"{d}/OUTCAR", ctx)
            if entry.task_type == BS:
                outputs["bands"] = run_regex_extractor(outcar, band_gap=True)
            elif entry.task_type == SR:
                outputs["contcar"] = run_read_file(f"{d}/CONTCAR", ctx)
            else:
                outputs[f"{key}_energy"] = run_regex_extractor(outcar, ["final_energy"])
        except MatAgentError as exc:
            errors.append(f"{d}: {type(exc).__name__}: {exc}")
    rec["flags"], rec["predictions"] = collect(entry.task_type, outputs)
    rec["status"] = "Failed" if errors else "Completed"
    rec["error"] = "; ".join(errors) or None
    return rec


class _NoRetry:
    """Client wrapper that refuses the format-correction follow-up."""

    def __init__(self, client):
        self.client = client
        self.scope = getattr(client, "scope", "")

    def complete(self, req):
        if req.history:
            raise FormatViolation("baseline answers get no correction round")
        return self.client.complete(req)


def prepare_out_dir(out_dir: Path, overwrite: bool) -> None:
    owned = [out_dir / RUNS_DIR, out_dir / RECORDS_DIR, out_dir / REPORT_FILE, out_dir / SUMMARY_FILE]
    if any(p.exists() for p in owned):
        if not overwrite:
            raise BenchmarkError(f"{out_dir} already holds benchmark output; pass --overwrite to replace it")
        for p in owned:
            if p.is_dir():
                shutil.rmtree(p)
            elif p.exists():
                p.unlink()
    out_dir.mkdir(parents=True, exist_ok=True)


def emit_report(report, out_dir: Path, **extra) -> tuple:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / REPORT_FILE).write_text(report.to_json(**extra))
    (out_dir / SUMMARY_FILE).write_text(report.summary_table())
    return out_dir / REPORT_FILE, out_dir / SUMMARY_FILE


def run_benchmark(config: BenchConfig, deps: ComponentDeps, library) -> BenchOutcome:
    entries, skipped = load_benchmark(config.benchmark_dir, config.tasks)
    out = Path(config.out_dir)
    prepare_out_dir(out, config.overwrite)

    def one(entry):
        work = out / RUNS_DIR / entry.id
        work.mkdir(parents=True)
        log.info("running %s (%s)", entry.id, entry.task_type)
        start = time.perf_counter()
        try:
            if config.agent:
                rec = run_agent_entry(entry, work, deps, library)
            else:
                rec = run_baseline_entry(entry, work, deps)
        except Exception as exc:  # one broken entry must not take the whole run down
            log.exception("entry %s crashed", entry.id)
            rec = new_record(entry, AGENT if config.agent else BASELINE)
            rec["error"] = f"internal error: {type(exc).__name__}: {exc}"
        # recorded for the operator; never part of the score or report
        rec["wall_time"] = round(time.perf_counter() - start, 3)
        write_record(rec, out)
        return rec

    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            records = list(pool.map(one, entries))
    else:
        records = [one(e) for e in entries]
    records.sort(key=lambda r: r["id"])
    report = score_records(records, config.scoring)
    emit_report(report, out, benchmark=Path(config.benchmark_dir).name, mode=AGENT if config.agent else BASELINE,
                entries=[r["id"] for r in records], skipped=skipped,
                options={"couple_accuracy": config.scoring.couple_accuracy,
                         "ts_strict_gate": config.scoring.ts_strict_gate})
    return BenchOutcome(records, report, skipped)
