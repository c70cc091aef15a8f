"""Run the bundled toy benchmark against every bundled mock script.

Prints one line per script with overall completion and accuracy, plus the
entries that lost points relative to the golden run.

    python scripts/run_toy_benchmark.py [--out /tmp/toy_runs] [--parallel 2]
"""

import argparse
import tempfile
from pathlib import Path

from matagent.bench import BenchConfig, bundled_data, run_benchmark
from matagent.engine import ComponentDeps, default_templates, load_library
from matagent.llm import MockClient, MockScript

SCRIPTS = ("golden", "faulty_unknown_tag", "faulty_potim", "faulty_isif", "faulty_no_hybrid", "faulty_format")


def item_points(report):
    return {it["id"]: (it["completion"], it["accuracy"]) for t in report.to_dict()["tasks"] for it in t["items"]}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, help="keep run outputs here (default: a temporary directory)")
    ap.add_argument("--parallel", type=int, default=1)
    args = ap.parse_args()

    root = args.out or Path(tempfile.mkdtemp(prefix="toy_runs_"))
    library = load_library()
    golden = None
    for name in SCRIPTS:
        deps = ComponentDeps(MockClient(MockScript.from_file(bundled_data() / "mock" / f"{name}.txt")),
                             default_templates())
        config = BenchConfig(bundled_data() / "toy_benchmark", root / name, parallel=args.parallel, overwrite=True)
        report = run_benchmark(config, deps, library).report
        points = item_points(report)
        golden = golden or points
        lost = [f"{k} {c - golden[k][0]:+.1f}/{a - golden[k][1]:+.1f}" for k, (c, a) in points.items()
                if (c, a) != golden[k]]
        print(f"{name:20s} completion {report.overall_completion:6.2f}  accuracy {report.overall_accuracy:6.2f}"
              f"  {'lost: ' + ', '.join(lost) if lost else ''}")
    print(f"outputs in {root}")


if __name__ == "__main__":
    main()
