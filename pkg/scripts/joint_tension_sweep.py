"""Sweep the clustering-vs-ordering weight ratio of the one-step QUBO.

The single-QUBO formulation carries two soft objectives: a proximity term
that pulls customers of one vehicle together (weight C) and an ordering
term that prices consecutive stops (weight E).  Pushing C up concentrates
clusters but starts to pay for load violations; keeping C low yields
decodable routes whose clusters spread out.  This script quantifies that
trade-off on a small instance: for each C value it runs a batch of seeded
tabu solves and records how many decoded samples were valid next to how
tight the decoded clusters were.

Run from the repository root:

    python3 scripts/joint_tension_sweep.py --out sweep.csv
"""
import argparse
import csv
import itertools
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qroute.formulations import build_joint_qubo, decode_joint_routes, joint_spec
from qroute.instances import EdgeWeightKind, InstanceKind, ProblemInstance
from qroute.solver import SolverConfig, solve

DEFAULT_PROXIMITY_WEIGHTS = (0.25, 4.0, 64.0, 1024.0, 16384.0)


def demo_instance(n_customers: int = 3, capacity: int = 2) -> ProblemInstance:
    """Two natural customer groups on opposite sides of the depot."""
    left = [(-10.0 - 3 * i, 2.0 * i) for i in range(-(-n_customers // 2))]
    right = [(10.0 + 3 * i, -2.0 * i) for i in range(n_customers // 2)]
    coords = [(0.0, 0.0)] + left + right
    nodes = tuple((i + 1, x, y) for i, (x, y) in enumerate(coords))
    return ProblemInstance(
        name="tension-demo",
        kind=InstanceKind.CVRP,
        nodes=nodes,
        edge_weight_kind=EdgeWeightKind.EUC_2D,
        demands={i + 2: 1 for i in range(n_customers)},
        capacity=capacity,
        depot_id=1,
        min_vehicles=None,
    )


def cluster_tightness(instance: ProblemInstance, routes: dict) -> float:
    """Mean pairwise distance between customers sharing a vehicle.

    Depot copies are ignored; vehicles with fewer than two customers
    contribute nothing.  Smaller numbers mean denser clusters.
    """
    distances = []
    for stops in routes.values():
        customers = [s for s in stops if not isinstance(s, tuple)]
        for a, b in itertools.combinations(customers, 2):
            distances.append(math.dist(instance.coords(a), instance.coords(b)))
    return sum(distances) / len(distances) if distances else float("nan")


def run_sweep(
    instance: ProblemInstance | None = None,
    vehicle_count: int = 2,
    proximity_weights=DEFAULT_PROXIMITY_WEIGHTS,
    order_weight: float = 1.0,
    seeds=range(5),
    num_repeats: int = 25,
) -> list[dict]:
    instance = instance or demo_instance()
    records = []
    for proximity in proximity_weights:
        spec = joint_spec(
            instance, vehicle_count,
            proximity_weight=proximity, order_weight=order_weight,
        )
        q = build_joint_qubo(spec)
        valid = 0
        violation_counts = []
        tightnesses = []
        for seed in seeds:
            report = solve(q, SolverConfig(seed=seed, num_repeats=num_repeats))
            decoded = decode_joint_routes(spec, report.best)
            valid += decoded["valid"]
            violation_counts.append(len(decoded["violations"]))
            tightness = cluster_tightness(instance, decoded["routes"])
            if not math.isnan(tightness):
                tightnesses.append(tightness)
        records.append({
            "proximity_weight": proximity,
            "order_weight": order_weight,
            "seeds": len(list(seeds)),
            "valid_fraction": valid / len(list(seeds)),
            "mean_violations": sum(violation_counts) / len(violation_counts),
            "mean_tightness": (
                sum(tightnesses) / len(tightnesses) if tightnesses else float("nan")
            ),
        })
    return records


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--customers", type=int, default=3)
    parser.add_argument("--vehicles", type=int, default=2)
    parser.add_argument("--capacity", type=int, default=2)
    parser.add_argument("--seeds", type=int, default=5, metavar="N",
                        help="seeded solves per weight setting")
    parser.add_argument("--num-repeats", type=int, default=25)
    parser.add_argument("--weights", type=float, nargs="+",
                        default=list(DEFAULT_PROXIMITY_WEIGHTS),
                        help="proximity weights to sweep")
    parser.add_argument("--out", metavar="CSV")
    args = parser.parse_args(argv)

    records = run_sweep(
        demo_instance(args.customers, args.capacity),
        vehicle_count=args.vehicles,
        proximity_weights=args.weights,
        seeds=range(args.seeds),
        num_repeats=args.num_repeats,
    )
    header = f"{'C':>8} {'E':>4} {'valid':>6} {'violations':>11} {'tightness':>10}"
    print(header)
    for rec in records:
        print(f"{rec['proximity_weight']:>8g} {rec['order_weight']:>4g} "
              f"{rec['valid_fraction']:>6.2f} {rec['mean_violations']:>11.2f} "
              f"{rec['mean_tightness']:>10.2f}")
    if args.out:
        with open(args.out, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(records[0]))
            writer.writeheader()
            writer.writerows(records)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
