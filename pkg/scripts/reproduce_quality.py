"""Re-run the bundled benchmark datasets and print deviation statistics.

Each dataset gets a batch of seeded runs (TSP instances through the
whole-tour pipeline, CVRP instances through cluster-first/route-second)
and the batch is reduced to best / mean / min / max deviation against the
reference distances in data/bks.json.

Run from the repository root:

    python3 scripts/reproduce_quality.py --runs 10
    python3 scripts/reproduce_quality.py --datasets burma14 E-n22-k4 --runs 3

With default settings the full five-dataset sweep takes on the order of
half an hour on one core; start with --runs 2 for a smoke check.
"""
import argparse
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from qroute.bench import (
    load_bks,
    run_cell,
    summarize,
    write_run_csv,
    write_summary_csv,
)
from qroute.clustering import CoreStopRule
from qroute.instances import parse_instance
from qroute.solver import SolverConfig

DATASETS = {
    "burma14": ("burma14.tsp", None),
    "ulysses16": ("ulysses16.tsp", None),
    "ulysses22": ("ulysses22.tsp", None),
    "E-n22-k4": ("E-n22-k4.vrp", CoreStopRule.MAX_DISTANCE),
    "E-n33-k4": ("E-n33-k4.vrp", CoreStopRule.MAX_REQUEST),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--datasets", nargs="+", choices=sorted(DATASETS),
                        default=sorted(DATASETS))
    parser.add_argument("--runs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--num-repeats", type=int, default=250)
    parser.add_argument("--out-prefix", metavar="PATH",
                        help="write PATH.summary.csv and PATH.runs.csv")
    args = parser.parse_args(argv)

    bks = load_bks(ROOT / "data" / "bks.json")
    config = SolverConfig(seed=args.seed, num_repeats=args.num_repeats)

    all_runs, summaries = [], []
    print(f"{'dataset':<12} {'bks':>6} {'best':>6} {'mean dev':>9} "
          f"{'max dev':>8} {'seconds':>8}")
    for name in args.datasets:
        filename, rule = DATASETS[name]
        instance = parse_instance((ROOT / "data" / filename).read_text())
        started = time.perf_counter()
        cell = run_cell(
            instance, config, args.runs,
            rule=rule or CoreStopRule.MAX_DISTANCE,
        )
        elapsed = time.perf_counter() - started
        summary = summarize(cell, bks)
        all_runs.extend(cell)
        summaries.append(summary)
        print(f"{name:<12} {summary.bks:>6} {summary.best:>6} "
              f"{summary.mean_dev:>8.2f}% {summary.max_dev:>7.2f}% "
              f"{elapsed:>8.1f}")

    if args.out_prefix:
        write_summary_csv(f"{args.out_prefix}.summary.csv", summaries)
        write_run_csv(f"{args.out_prefix}.runs.csv", all_runs, bks)
        print(f"wrote {args.out_prefix}.summary.csv and {args.out_prefix}.runs.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
