"""Benchmark harness: entries, agent and baseline runs, records and reports."""

from matagent.bench.dataset import LABEL_KEYS, REQUIRED_ROLES, BenchEntry, bundled_data, load_benchmark, load_entry
from matagent.bench.records import collect, load_records, record_to_item, score_records, write_record
from matagent.bench.runner import (
    AGENT,
    BASELINE,
    REPORT_FILE,
    SUMMARY_FILE,
    BenchConfig,
    BenchOutcome,
    emit_report,
    run_agent_entry,
    run_baseline_entry,
    run_benchmark,
)

__all__ = [
    "AGENT", "BASELINE", "LABEL_KEYS", "REPORT_FILE", "REQUIRED_ROLES", "SUMMARY_FILE",
    "BenchConfig", "BenchEntry", "BenchOutcome", "bundled_data", "collect", "emit_report", "load_benchmark", "load_entry",
    "load_records", "record_to_item", "run_agent_entry", "run_baseline_entry", "run_benchmark",
    "score_records", "write_record",
]
