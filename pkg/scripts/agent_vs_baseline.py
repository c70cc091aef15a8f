"""Compare workflow-driven runs with single-prompt baseline runs on the toy benchmark.

The agent answers come from the golden mock script and the baseline answers
from the monolithic script, so the comparison isolates the harness: what
workflow selection, per-step prompts, interpolation and NEB add over one
deck applied everywhere.

    python scripts/agent_vs_baseline.py [--benchmark-dir D] [--out DIR]
"""

import argparse
import tempfile
from pathlib import Path

from matagent.bench import BenchConfig, bundled_data, run_benchmark
from matagent.engine import ComponentDeps, default_templates, load_library
from matagent.llm import MockClient, MockScript


def run(mode_agent, script, bench_dir, out):
    deps = ComponentDeps(MockClient(MockScript.from_file(script)), default_templates())
    return run_benchmark(BenchConfig(bench_dir, out, agent=mode_agent, overwrite=True), deps, load_library()).report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--benchmark-dir", type=Path, default=bundled_data() / "toy_benchmark")
    ap.add_argument("--agent-script", type=Path, default=bundled_data() / "mock" / "golden.txt")
    ap.add_argument("--baseline-script", type=Path, default=bundled_data() / "mock" / "baseline.txt")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    root = args.out or Path(tempfile.mkdtemp(prefix="agent_vs_baseline_"))
    agent = run(True, args.agent_script, args.benchmark_dir, root / "agent")
    base = run(False, args.baseline_script, args.benchmark_dir, root / "baseline")

    rows = {b.task_type: b for b in agent.breakdowns}
    print(f"{'task':8s}{'completion':>24s}{'accuracy':>24s}")
    print(f"{'':8s}{'baseline':>12s}{'agent':>12s}{'baseline':>12s}{'agent':>12s}")
    for b in base.breakdowns:
        a = rows[b.task_type]
        print(f"{b.task_type:8s}{b.completion_total:12.2f}{a.completion_total:12.2f}"
              f"{b.accuracy_total:12.2f}{a.accuracy_total:12.2f}")
    print(f"{'overall':8s}{base.overall_completion:12.2f}{agent.overall_completion:12.2f}"
          f"{base.overall_accuracy:12.2f}{agent.overall_accuracy:12.2f}")
    print(f"outputs in {root}")


if __name__ == "__main__":
    main()
