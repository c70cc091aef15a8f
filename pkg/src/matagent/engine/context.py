"""Execution state threaded through a workflow run."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Optional

from matagent.errors import ContextKeyError, PathEscape, WorkflowError

COMPLETED = "Completed"
FAILED = "Failed"
RUN_RECORD = "run_record.json"


@dataclass(frozen=True)
class TaskRequest:
    request_text: str
    input_files: dict  # role -> file content
    task_hint: Optional[str] = None
    # names the run; scripted LLM clients use it to pick per-entry answers
    run_id: str = ""


@dataclass(frozen=True)
class HistoryEntry:
    step: int  # 1-based
    component: str
    output_key: str
    outcome: str  # "ok", "failed" or "recorded" (failed under RecordAndContinue)
    wall_time: float
    message: str = ""


@dataclass
class TaskResult:
    status: str
    outputs: dict
    report_text: str
    workflow_id: str = ""
    failed_step: Optional[int] = None
    error: Optional[str] = None
    history: tuple = ()

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED


class ExecutionContext:
    """Write-once value store, append-only history and a sandboxed directory."""

    def __init__(self, working_dir, simulation_state: Optional[dict] = None, llm=None):
        self.working_dir = Path(working_dir).resolve()
        if not self.working_dir.is_dir():
            raise WorkflowError(f"working directory {self.working_dir} does not exist")
        self._values = {}
        self.history = []
        self.simulation_state = dict(simulation_state or {})
        self.llm = llm

    @property
    def values(self):
        return MappingProxyType(self._values)

    def set(self, key: str, value) -> None:
        if key in self._values:
            raise WorkflowError(f"context key {key!r} is already set; write a new key instead")
        self._values[key] = value

    def get(self, key: str):
        try:
            return self._values[key]
        except KeyError:
            raise ContextKeyError(f"context has no value {key!r}") from None

    def __contains__(self, key):
        return key in self._values

    def resolve_path(self, rel) -> Path:
        """Absolute path for ``rel`` inside the working directory."""
        rel = str(rel)
        if not rel or os.path.isabs(rel) or rel.startswith("~"):
            raise PathEscape(f"path {rel!r} must be relative to the working directory")
        target = (self.working_dir / rel).resolve()
        if target != self.working_dir and self.working_dir not in target.parents:
            raise PathEscape(f"path {rel!r} leaves the working directory")
        return target

    def record(self, entry: HistoryEntry) -> None:
        self.history.append(entry)

    def note(self, text: str) -> None:
        """Append a line to the running progress notes that prompts can quote."""
        prior = self.simulation_state.get("progress", "")
        self.simulation_state["progress"] = (prior + "\n" + text).strip("\n")

    def write_run_record(self, workflow_id: str, status: str, extra: Optional[dict] = None) -> Path:
        record = {
            "workflow": workflow_id,
            "status": status,
            "history": [
                {
                    "step": h.step,
                    "component": h.component,
                    "output_key": h.output_key,
                    "outcome": h.outcome,
                    "duration_s": round(h.wall_time, 6),
                    "message": h.message,
                }
                for h in self.history
            ],
            **(extra or {}),
        }
        path = self.working_dir / RUN_RECORD
        path.write_text(json.dumps(record, indent=2, default=str) + "\n")
        return path
