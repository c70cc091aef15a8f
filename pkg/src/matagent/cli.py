"""Command line: ``matagent bench run``, ``matagent bench score`` and ``matagent simulate``.

Exit status reports harness health only: 0 when the run or rescoring went
through (whatever the scores), 2 for bad configuration or unusable input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from matagent.bench.dataset import bundled_data
from matagent.bench.records import load_records, score_records
from matagent.bench.runner import AGENT, BASELINE, BenchConfig, emit_report, run_benchmark
from matagent.engine import ComponentDeps, ExternalBackend, SimBackend, default_templates, load_library
from matagent.errors import MatAgentError, MissingInputFile
from matagent.llm import ChatCompletionsClient, MockClient, MockScript, ProviderConfig
from matagent.scoring.tasks import TASK_TYPES, ScoringOptions
from matagent.sim.backend import run_simulation

EXIT_OK, EXIT_CONFIG = 0, 2


def _tasks(text: str) -> tuple:
    tasks = tuple(t.strip().upper() for t in text.split(",") if t.strip())
    bad = [t for t in tasks if t not in TASK_TYPES]
    if bad or not tasks:
        raise argparse.ArgumentTypeError(f"tasks must be a comma list drawn from {','.join(TASK_TYPES)}")
    return tasks


def mock_script_path(spec: str) -> Path:
    """``mock:PATH``; a bare name such as ``golden`` picks a bundled script."""
    path = Path(spec)
    if path.is_file():
        return path
    bundled = bundled_data() / "mock" / (spec if spec.endswith(".txt") else spec + ".txt")
    if bundled.is_file():
        return bundled
    raise MatAgentError(f"mock script {spec!r} not found")


def make_llm(args):
    if args.llm.startswith("mock:"):
        return MockClient(MockScript.from_file(mock_script_path(args.llm[len("mock:"):])))
    if args.llm == "live":
        flags = {"endpoint": args.llm_endpoint, "model": args.llm_model}
        return ChatCompletionsClient(ProviderConfig.resolve(flags, config_file=args.llm_config))
    raise MatAgentError(f"--llm must be mock:PATH or live, got {args.llm!r}")


def make_backend(args):
    if args.backend == "sim":
        return SimBackend()
    if not args.backend_command:
        raise MatAgentError("--backend external needs --backend-command")
    return ExternalBackend(args.backend_command)


def cmd_bench_run(args) -> int:
    deps = ComponentDeps(make_llm(args), default_templates(), make_backend(args))
    config = BenchConfig(
        benchmark_dir=args.benchmark_dir or bundled_data() / "toy_benchmark",
        out_dir=args.out,
        tasks=args.tasks,
        parallel=max(1, args.parallel),
        agent=not args.no_agent,
        overwrite=args.overwrite,
        scoring=ScoringOptions(couple_accuracy=args.couple_accuracy, ts_strict_gate=args.ts_strict_gate),
    )
    outcome = run_benchmark(config, deps, load_library(args.workflows))
    for note in outcome.skipped:
        print(f"skipped: {note}", file=sys.stderr)
    print(outcome.report.summary_table(), end="")
    print(f"{len(outcome.records)} records, report and summary written to {args.out}")
    return EXIT_OK


def cmd_bench_score(args) -> int:
    records = load_records(args.records)
    options = ScoringOptions(couple_accuracy=args.couple_accuracy, ts_strict_gate=args.ts_strict_gate)
    report = score_records(records, options)
    modes = sorted({r.get("mode", AGENT) for r in records})
    if args.out:
        emit_report(report, Path(args.out), mode=modes[0] if len(modes) == 1 else "mixed",
                    entries=[r["id"] for r in sorted(records, key=lambda r: r["id"])], rescored=True,
                    options={"couple_accuracy": options.couple_accuracy, "ts_strict_gate": options.ts_strict_gate})
    print(report.summary_table(), end="")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        outcome = run_simulation(args.dir)
    except MissingInputFile as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(outcome.summary(), end="")
    return outcome.exit_code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="matagent", description="LLM workflow agent for VASP-style calculations.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = ap.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run or rescore a benchmark")
    bsub = bench.add_subparsers(dest="bench_command", required=True)

    run = bsub.add_parser("run", help="run every entry of a benchmark and score it")
    run.add_argument("--benchmark-dir", type=Path, help="benchmark root (default: bundled toy benchmark)")
    run.add_argument("--tasks", type=_tasks, default=TASK_TYPES, help="e.g. SR,BS (default: all)")
    run.add_argument("--llm", default="mock:golden", help="mock:SCRIPT or live (default: mock:golden)")
    run.add_argument("--llm-config", type=Path, help="YAML with endpoint/model/api_key/timeout")
    run.add_argument("--llm-endpoint")
    run.add_argument("--llm-model")
    run.add_argument("--backend", choices=("sim", "external"), default="sim")
    run.add_argument("--backend-command", help="program run in each calculation directory (external backend)")
    run.add_argument("--workflows", type=Path, help="directory of *.workflow.yaml (default: bundled library)")
    run.add_argument("--parallel", type=int, default=1, help="entries run concurrently")
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--no-agent", action="store_true", help=f"single-shot {BASELINE} instead of workflows")
    run.add_argument("--overwrite", action="store_true", help="replace earlier output in --out")
    run.add_argument("--ts-strict-gate", action="store_true", help="zero TS accuracy terms with relative error > 0.1")
    run.add_argument("--couple-accuracy", action="store_true", help="no accuracy points without completion")
    run.set_defaults(func=cmd_bench_run)

    score = bsub.add_parser("score", help="rescore saved run records")
    score.add_argument("--records", type=Path, required=True, help="records directory or run output directory")
    score.add_argument("--out", type=Path, help="also write report.json and summary.txt here")
    score.add_argument("--ts-strict-gate", action="store_true")
    score.add_argument("--couple-accuracy", action="store_true")
    score.set_defaults(func=cmd_bench_score)

    sim = sub.add_parser("simulate", help="run the simulated backend in a calculation directory")
    sim.add_argument("dir", type=Path)
    sim.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MatAgentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
