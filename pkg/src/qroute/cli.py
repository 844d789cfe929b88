"""Command line front end.

Subcommands
-----------
solve-cvrp   cluster-first/route-second solve of a CVRP file
solve-tsp    whole-instance TSP solve through the QUBO pipeline
build-qubo   emit the TSP QUBO for an instance without solving it
bench        multi-run statistics over one or more instances
oracle       exact reference answer (dynamic programming / brute force)

Exit codes: 0 success, 1 invalid input, 2 solver failure.  The remote
backend endpoint comes from --remote-endpoint or, failing that, the
QROUTE_REMOTE_ENDPOINT environment variable.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    load_bks,
    run_benchmark,
    summarize,
    write_run_csv,
    write_summary_csv,
    _run_row,
    _summary_row,
)
from .clustering import DEFAULT_IMPROVEMENT_ITERATIONS, CoreStopRule
from .formulations import build_tsp_qubo, tsp_spec
from .instances import (
    InstanceKind,
    ParseError,
    ProblemInstance,
    distance_matrix,
    parse_instance,
)
from .oracles import brute_force_cvrp, held_karp
from .pipeline import (
    SolutionInvalid,
    solution_to_dict,
    solve_cvrp,
    solve_tsp,
)
from .qubo import terms
from .remote import RemoteError
from .solver import (
    DEFAULT_NUM_REPEATS,
    DEFAULT_SUBQUBO_SIZE,
    Backend,
    RemoteSettings,
    SolverAbort,
    SolverConfig,
)

ENDPOINT_ENV = "QROUTE_REMOTE_ENDPOINT"

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_SOLVER_FAILURE = 2


class UsageError(Exception):
    """Bad arguments or unreadable input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise UsageError(message)


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--backend", choices=[b.value for b in Backend], default="tabu",
        help="subQUBO sampler (default: tabu)",
    )
    parser.add_argument(
        "--num-repeats", type=int, default=DEFAULT_NUM_REPEATS, metavar="N",
        help=f"non-improving rounds before stopping (default: {DEFAULT_NUM_REPEATS})",
    )
    parser.add_argument(
        "--subqubo-size", type=int, default=DEFAULT_SUBQUBO_SIZE, metavar="N",
        help=f"variables per subQUBO (default: {DEFAULT_SUBQUBO_SIZE})",
    )
    parser.add_argument("--seed", type=int, default=0, metavar="N")
    parser.add_argument(
        "--remote-endpoint", metavar="URL",
        help=f"sampler service URL (fallback: ${ENDPOINT_ENV})",
    )


def _add_out_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out", nargs=2, metavar=("{json,csv}", "PATH"),
        help="also write results to PATH in the given format",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="qroute", description=__doc__.split("\n")[0])
    commands = parser.add_subparsers(dest="command", required=True)

    cvrp = commands.add_parser("solve-cvrp", help="solve a CVRP instance")
    cvrp.add_argument("instance", metavar="FILE")
    cvrp.add_argument(
        "--core-stop", choices=[r.value for r in CoreStopRule],
        default="max_distance", help="cluster core selection rule",
    )
    cvrp.add_argument(
        "--improvement-iterations", type=int,
        default=DEFAULT_IMPROVEMENT_ITERATIONS, metavar="N",
        help="cluster improvement move budget",
    )
    cvrp.add_argument("--runs", type=int, default=1, metavar="N",
                      help="seeded runs; the best solution is reported")
    _add_solver_flags(cvrp)
    _add_out_flag(cvrp)

    tsp = commands.add_parser("solve-tsp", help="solve a TSP instance")
    tsp.add_argument("instance", metavar="FILE")
    tsp.add_argument("--runs", type=int, default=1, metavar="N",
                     help="seeded runs; the best tour is reported")
    _add_solver_flags(tsp)
    _add_out_flag(tsp)

    qubo = commands.add_parser(
        "build-qubo", help="emit the routing QUBO without solving it"
    )
    qubo.add_argument("instance", metavar="FILE")
    _add_out_flag(qubo)

    bench = commands.add_parser("bench", help="multi-run deviation statistics")
    bench.add_argument("instances", nargs="+", metavar="FILE")
    bench.add_argument("--runs", type=int, default=10, metavar="N")
    bench.add_argument(
        "--core-stop", choices=[r.value for r in CoreStopRule],
        default="max_distance",
    )
    bench.add_argument(
        "--improvement-iterations", type=int,
        default=DEFAULT_IMPROVEMENT_ITERATIONS, metavar="N",
    )
    bench.add_argument("--bks-file", metavar="PATH",
                       help="JSON file mapping dataset name to best known distance")
    _add_solver_flags(bench)
    _add_out_flag(bench)

    oracle = commands.add_parser(
        "oracle", help="exact optimum via dynamic programming / brute force"
    )
    oracle.add_argument("instance", metavar="FILE")
    _add_out_flag(oracle)

    return parser


def _load(path: str) -> ProblemInstance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        return parse_instance(text)
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _solver_config(args) -> SolverConfig:
    backend = Backend(args.backend)
    remote = None
    if backend is Backend.REMOTE:
        endpoint = args.remote_endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise UsageError(
                "remote backend needs --remote-endpoint or "
                f"${ENDPOINT_ENV}"
            )
        remote = RemoteSettings(endpoint=endpoint)
    config = SolverConfig(
        subqubo_size=args.subqubo_size,
        num_repeats=args.num_repeats,
        backend=backend,
        seed=args.seed,
        remote=remote,
    )
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return config


def _check_runs(runs: int) -> None:
    if runs < 1:
        raise UsageError("--runs must be positive")


def _parse_out(args) -> tuple[str, Path] | None:
    if args.out is None:
        return None
    kind, path = args.out
    if kind not in ("json", "csv"):
        raise UsageError(f"--out format must be json or csv, got {kind!r}")
    return kind, Path(path)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, fieldnames, rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def cmd_solve_cvrp(args) -> int:
    instance = _load(args.instance)
    if instance.kind is not InstanceKind.CVRP:
        raise UsageError(f"{args.instance} is not a CVRP instance")
    _check_runs(args.runs)
    config = _solver_config(args)
    rule = CoreStopRule(args.core_stop)

    best = None
    for run_index in range(args.runs):
        solution = solve_cvrp(
            instance, rule, replace(config, seed=config.seed + run_index),
            improvement_iterations=args.improvement_iterations,
        )
        if best is None or solution.total_distance < best.total_distance:
            best = solution

    print(f"instance {instance.name}")
    print(f"runs {args.runs}")
    for index, tour in enumerate(best.tours):
        nodes = " ".join(str(n) for n in tour.nodes)
        print(f"route {index + 1}: {nodes} (length {tour.length})")
    print(f"total {best.total_distance}")
    for warning in best.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for label, orchestration, backend_s, total in best.timings.rows():
        print(f"time {label}: {orchestration:.3f} {backend_s:.3f} {total:.3f}")

    out = _parse_out(args)
    if out is not None:
        kind, path = out
        if kind == "json":
            _write_json(path, solution_to_dict(best))
        else:
            _write_csv(
                path, ("route", "nodes", "length"),
                [
                    {
                        "route": i + 1,
                        "nodes": " ".join(str(n) for n in tour.nodes),
                        "length": tour.length,
                    }
                    for i, tour in enumerate(best.tours)
                ],
            )
    return EXIT_OK


def cmd_solve_tsp(args) -> int:
    instance = _load(args.instance)
    if instance.kind is not InstanceKind.TSP:
        raise UsageError(f"{args.instance} is not a TSP instance")
    _check_runs(args.runs)
    config = _solver_config(args)

    best = None
    for run_index in range(args.runs):
        tour = solve_tsp(instance, replace(config, seed=config.seed + run_index))
        if best is None or tour.length < best.length:
            best = tour

    print(f"instance {instance.name}")
    print(f"runs {args.runs}")
    print("tour " + " ".join(str(n) for n in best.nodes))
    print(f"length {best.length}")

    out = _parse_out(args)
    if out is not None:
        kind, path = out
        payload = {"instance": instance.name, "runs": args.runs,
                   "nodes": list(best.nodes), "length": best.length}
        if kind == "json":
            _write_json(path, payload)
        else:
            _write_csv(
                path, ("instance", "nodes", "length"),
                [{
                    "instance": instance.name,
                    "nodes": " ".join(str(n) for n in best.nodes),
                    "length": best.length,
                }],
            )
    return EXIT_OK


def cmd_build_qubo(args) -> int:
    instance = _load(args.instance)
    if instance.kind is not InstanceKind.TSP:
        raise UsageError(
            f"{args.instance} is not a TSP instance; build-qubo emits the "
            "single-tour routing QUBO"
        )
    spec = tsp_spec(
        [node_id for node_id, _, _ in instance.nodes], distance_matrix(instance)
    )
    q = build_tsp_qubo(spec)
    entries = sorted(terms(q))
    print(f"instance {instance.name}")
    print(f"dim {q.dim}")
    print(f"terms {len(entries)}")
    print(f"offset {q.offset}")

    out = _parse_out(args)
    if out is not None:
        kind, path = out
        if kind == "json":
            _write_json(path, {
                "instance": instance.name,
                "dim": q.dim,
                "offset": q.offset,
                "terms": [[i, j, coeff] for i, j, coeff in entries],
            })
        else:
            _write_csv(
                path, ("i", "j", "coefficient"),
                [{"i": i, "j": j, "coefficient": coeff}
                 for i, j, coeff in entries],
            )
    return EXIT_OK


def cmd_bench(args) -> int:
    instances = [_load(path) for path in args.instances]
    _check_runs(args.runs)
    config = _solver_config(args)
    bks = load_bks(args.bks_file) if args.bks_file else None

    runs, summaries = run_benchmark(
        instances, args.runs, configs=config, bks=bks,
        rule=CoreStopRule(args.core_stop),
        improvement_iterations=args.improvement_iterations,
    )
    for summary in summaries:
        dev = "" if summary.mean_dev is None else f" mean_dev {summary.mean_dev:.2f}%"
        bks_note = "" if summary.bks is None else f" bks {summary.bks}"
        print(f"{summary.dataset}: best {summary.best} over {summary.runs} runs"
              f"{bks_note}{dev}")

    out = _parse_out(args)
    if out is not None:
        kind, path = out
        if kind == "csv":
            write_summary_csv(path, summaries)
            run_path = path.with_name(path.stem + ".runs" + path.suffix)
            write_run_csv(run_path, runs, bks)
        else:
            _write_json(path, {
                "runs": [_run_row(r, bks) for r in runs],
                "summaries": [_summary_row(s) for s in summaries],
            })
    return EXIT_OK


def cmd_oracle(args) -> int:
    instance = _load(args.instance)
    if instance.kind is InstanceKind.TSP:
        length, order = held_karp(distance_matrix(instance))
        nodes = [instance.nodes[i][0] for i in order]
        print(f"instance {instance.name}")
        print("tour " + " ".join(str(n) for n in nodes))
        print(f"length {length}")
        payload = {"instance": instance.name, "nodes": nodes, "length": length}
    else:
        try:
            total, routes = brute_force_cvrp(instance)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        print(f"instance {instance.name}")
        for index, route in enumerate(routes):
            print(f"route {index + 1}: " + " ".join(str(n) for n in route))
        print(f"total {total}")
        payload = {"instance": instance.name, "routes": routes, "total": total}

    out = _parse_out(args)
    if out is not None:
        kind, path = out
        if kind == "json":
            _write_json(path, payload)
        else:
            raise UsageError("oracle supports only --out json")
    return EXIT_OK


_COMMANDS = {
    "solve-cvrp": cmd_solve_cvrp,
    "solve-tsp": cmd_solve_tsp,
    "build-qubo": cmd_build_qubo,
    "bench": cmd_bench,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except (SolverAbort, RemoteError, SolutionInvalid) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
