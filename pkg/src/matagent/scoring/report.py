"""Benchmark-level aggregation and report rendering."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from matagent.errors import DuplicateTaskType
from matagent.scoring.tasks import TASK_TYPES

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BenchmarkReport:
    breakdowns: tuple  # ScoreBreakdown, in canonical task order
    overall_completion: float
    overall_accuracy: float

    def task(self, task_type):
        for b in self.breakdowns:
            if b.task_type == task_type:
                return b
        raise KeyError(task_type)

    @property
    def task_types(self) -> list:
        return [b.task_type for b in self.breakdowns]

    def to_dict(self, **extra) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            **extra,
            "overall": {"completion": self.overall_completion, "accuracy": self.overall_accuracy},
            "tasks": [b.to_dict() for b in self.breakdowns],
        }

    def to_json(self, **extra) -> str:
        return json.dumps(self.to_dict(**extra), indent=2, sort_keys=False) + "\n"

    def summary_table(self) -> str:
        lines = [f"{'task':<8}{'items':>6}{'completion':>12}{'accuracy':>12}", "-" * 38]
        for b in self.breakdowns:
            lines.append(f"{b.task_type:<8}{len(b.items):>6}{b.completion_total:>12.2f}{b.accuracy_total:>12.2f}")
        lines.append("-" * 38)
        n = sum(len(b.items) for b in self.breakdowns)
        lines.append(f"{'overall':<8}{n:>6}{self.overall_completion:>12.2f}{self.overall_accuracy:>12.2f}")
        return "\n".join(lines) + "\n"


def aggregate_report(breakdowns) -> BenchmarkReport:
    """Unweighted mean over tasks of the per-task 100-point totals."""
    seen = set()
    for b in breakdowns:
        if b.task_type in seen:
            raise DuplicateTaskType(f"two breakdowns for task {b.task_type}")
        seen.add(b.task_type)
    order = {t: k for k, t in enumerate(TASK_TYPES)}
    ordered = tuple(sorted(breakdowns, key=lambda b: order.get(b.task_type, len(order))))
    if not ordered:
        return BenchmarkReport((), 0.0, 0.0)
    completion = math.fsum(b.completion_total for b in ordered) / len(ordered)
    accuracy = math.fsum(b.accuracy_total for b in ordered) / len(ordered)
    return BenchmarkReport(ordered, completion, accuracy)
