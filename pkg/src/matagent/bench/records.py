"""Run records and rescoring.

A record is a self-contained JSON document: everything the scorer needs
(completion flags, predictions and the reference labels) travels with it, so
``bench score`` never touches the benchmark directory or the run outputs.
"""

from __future__ import annotations

import json
from pathlib import Path

from matagent.errors import BenchmarkError
from matagent.scoring.report import aggregate_report
from matagent.scoring.tasks import (
    AE,
    BS,
    SCORERS,
    SR,
    TASK_TYPES,
    TS,
    AeCompletionFlags,
    AeItem,
    BsItem,
    ScoringOptions,
    SrItem,
    TsCompletionFlags,
    TsItem,
)
from matagent.sim.backend import CONVERGED_OK
from matagent.vasp_files.poscar import parse_poscar

RECORD_SCHEMA_VERSION = 1
RECORDS_DIR = "records"


def new_record(entry, mode: str) -> dict:
    return {
        "schema_version": RECORD_SCHEMA_VERSION,
        "id": entry.id,
        "task_type": entry.task_type,
        "mode": mode,
        "status": "Failed",
        "workflow_id": None,
        "failed_step": None,
        "error": None,
        "flags": empty_flags(entry.task_type),
        "predictions": {},
        "reference": entry.reference(),
    }


def empty_flags(task_type: str) -> dict:
    if task_type == SR:
        return {"converged": False}
    if task_type == BS:
        return {"completed": False}
    if task_type == AE:
        return {"co_relaxed": False, "surface_relaxed": False, "adsorbed_relaxed": False}
    return {"is_done": False, "fs_done": False, "interp_done": False, "neb_converged": False}


def _ok(outputs, key) -> bool:
    res = outputs.get(key)
    return res is not None and getattr(res, "ok", False) and getattr(res, "status", "") in (CONVERGED_OK, "Interpolated")


def _energy(outputs, run_key, energy_key):
    values = outputs.get(energy_key)
    if not _ok(outputs, run_key) or not values:
        return None
    return values.get("final_energy")


def collect(task_type: str, outputs: dict) -> tuple:
    """Completion flags and predictions from the outputs of a workflow run."""
    if task_type == SR:
        converged = _ok(outputs, "relax_run") and isinstance(outputs.get("contcar"), str)
        return {"converged": converged}, ({"structure": outputs["contcar"]} if converged else {})
    if task_type == BS:
        bands = outputs.get("bands")
        done = _ok(outputs, "bs_run") and bands is not None and "band_gap" in bands
        return {"completed": done}, ({"band_gap": bands["band_gap"]} if done else {})
    if task_type == AE:
        flags = {"co_relaxed": _ok(outputs, "gas_run"), "surface_relaxed": _ok(outputs, "surf_run"),
                 "adsorbed_relaxed": _ok(outputs, "ads_run")}
        parts = [_energy(outputs, f"{k}_run", f"{k}_energy") for k in ("ads", "surf", "gas")]
        preds = {}
        if all(p is not None for p in parts):
            preds = {"e_ads": parts[0] - parts[1] - parts[2],
                     "energies": dict(zip(("adsorbed", "surface", "gas"), parts))}
        return flags, preds
    flags = {"is_done": _ok(outputs, "is_run"), "fs_done": _ok(outputs, "fs_run"),
             "interp_done": _ok(outputs, "interp"), "neb_converged": _ok(outputs, "neb_run")}
    neb = outputs.get("neb_result")
    preds = {}
    if flags["neb_converged"] and neb is not None:
        preds = {"delta_e": neb["delta_e"], "barrier": neb["barrier"]}
    return flags, preds


def record_to_item(rec: dict):
    t, flags, pred, ref = rec["task_type"], rec["flags"], rec["predictions"], rec["reference"]
    if t == SR:
        structure = pred.get("structure")
        return SrItem(rec["id"], bool(flags["converged"]), parse_poscar(structure) if structure else None,
                      parse_poscar(ref["reference"]))
    if t == BS:
        return BsItem(rec["id"], bool(flags["completed"]), pred.get("band_gap"), ref["band_gap"])
    if t == AE:
        return AeItem(rec["id"], AeCompletionFlags(**flags), pred.get("e_ads"), ref["e_ads"])
    if t == TS:
        return TsItem(rec["id"], TsCompletionFlags(**flags), pred.get("delta_e"), ref["delta_e"],
                      pred.get("barrier"), ref["barrier"])
    raise BenchmarkError(f"record {rec.get('id')!r} has unknown task type {t!r}")


def score_records(records, options: ScoringOptions = ScoringOptions()):
    """Score records grouped by task type, in canonical task order."""
    by_task = {}
    for rec in sorted(records, key=lambda r: r["id"]):
        by_task.setdefault(rec["task_type"], []).append(record_to_item(rec))
    unknown = set(by_task) - set(TASK_TYPES)
    if unknown:
        raise BenchmarkError(f"unknown task types {sorted(unknown)}")
    return aggregate_report([SCORERS[t](by_task[t], options) for t in TASK_TYPES if t in by_task])


def write_record(rec: dict, out_dir) -> Path:
    path = Path(out_dir) / RECORDS_DIR / f"{rec['id']}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    return path


def load_records(directory) -> list:
    """Records from a records directory or from a run output directory holding one."""
    root = Path(directory)
    if (root / RECORDS_DIR).is_dir():
        root = root / RECORDS_DIR
    files = sorted(root.glob("*.json")) if root.is_dir() else []
    if not files:
        raise BenchmarkError(f"no run records found in {directory}")
    records = []
    for f in files:
        try:
            rec = json.loads(f.read_text())
        except json.JSONDecodeError as exc:
            raise BenchmarkError(f"{f.name}: not valid JSON ({exc})") from None
        if rec.get("schema_version") != RECORD_SCHEMA_VERSION:
            raise BenchmarkError(f"{f.name}: unsupported record schema {rec.get('schema_version')!r}")
        records.append(rec)
    return records
