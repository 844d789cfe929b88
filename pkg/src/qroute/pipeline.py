"""Hybrid pipeline: cluster the customers, route each cluster as a TSP QUBO.

`solve_cvrp` runs the whole chain — cluster generation and improvement,
per-cluster TSP QUBO construction, decomposition solve, decoding — and
returns a validated solution with a timing breakdown shaped like the
paper-style runtime tables: one row per cluster with orchestration /
backend / total columns, a sum row, a main-procedure figure (everything
outside the decomposition solves) and the overall wall time.

Samples that decode to an invalid tour are retried with fresh seeds a
bounded number of times, then replaced by a nearest-neighbour tour with a
recorded warning — a solution is never silently invalid.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace

from .clustering import (
    DEFAULT_IMPROVEMENT_ITERATIONS,
    Clustering,
    CoreStopRule,
    generate_clusters,
    improve_clusters,
)
from .formulations import Tour, TspQuboSpec, build_tsp_qubo, decode_tour, tsp_spec
from .instances import DistanceMatrix, InstanceKind, ProblemInstance, distance_matrix, submatrix
from .solver import SolveReport, SolverConfig, solve

RETRY_LIMIT = 3
_RETRY_SEED_STRIDE = 0x9E37  # arbitrary odd stride for derived retry seeds


@dataclass(frozen=True)
class TimingRow:
    label: str
    orchestration: float  # seconds outside the backend (CPU-analogue column)
    backend: float        # seconds inside backend solves (QPU-analogue column)

    @property
    def total(self) -> float:
        return self.orchestration + self.backend


@dataclass(frozen=True)
class TimingReport:
    clusters: tuple[TimingRow, ...]
    main_procedure: float  # clustering + QUBO construction + decode + I/O
    total: float

    @property
    def solver_sum(self) -> TimingRow:
        return TimingRow(
            label="Sum",
            orchestration=sum(row.orchestration for row in self.clusters),
            backend=sum(row.backend for row in self.clusters),
        )

    def rows(self) -> list[tuple[str, float, float, float]]:
        """Table rows as (label, orchestration, backend, total)."""
        out = [
            (row.label, row.orchestration, row.backend, row.total)
            for row in self.clusters
        ]
        summed = self.solver_sum
        out.append((summed.label, summed.orchestration, summed.backend, summed.total))
        out.append(("Main procedure", self.main_procedure, 0.0, self.main_procedure))
        out.append(("Total", self.total - sum(r.backend for r in self.clusters),
                    sum(r.backend for r in self.clusters), self.total))
        return out


@dataclass(frozen=True)
class RoutingOutcome:
    """One cluster's routing result with its provenance."""

    tour: Tour
    from_sample: bool     # False when the nearest-neighbour fallback produced it
    attempts: int
    report: SolveReport | None


@dataclass(frozen=True)
class CvrpSolution:
    instance_name: str
    clustering: Clustering
    tours: tuple[Tour, ...]
    total_distance: int
    cluster_valid: tuple[bool, ...]
    warnings: tuple[str, ...]
    timings: TimingReport
    config: dict


class SolutionInvalid(AssertionError):
    """The pipeline produced a solution that fails its own validator."""


def nearest_neighbor_tour(node_ids, D: DistanceMatrix) -> Tour:
    """Greedy fallback cycle starting at the first node (the depot)."""
    remaining = list(range(1, len(node_ids)))
    order = [0]
    while remaining:
        here = order[-1]
        nearest = min(remaining, key=lambda j: (D[here, j], j))
        remaining.remove(nearest)
        order.append(nearest)
    length = sum(
        D[order[k], order[(k + 1) % len(order)]] for k in range(len(order))
    )
    return Tour(nodes=tuple(node_ids[k] for k in order), length=length)


def route_nodes(
    spec: TspQuboSpec, config: SolverConfig, retry_limit: int = RETRY_LIMIT
) -> RoutingOutcome:
    """Solve one TSP QUBO, retrying reseeded on invalid decodes."""
    q = build_tsp_qubo(spec)
    last_report = None
    for attempt in range(retry_limit + 1):
        attempt_config = (
            config if attempt == 0
            else replace(config, seed=config.seed + _RETRY_SEED_STRIDE * attempt)
        )
        report = solve(q, attempt_config)
        last_report = report
        tour = decode_tour(spec, report.best)
        if isinstance(tour, Tour):
            return RoutingOutcome(
                tour=tour, from_sample=True, attempts=attempt + 1, report=report
            )
    fallback = nearest_neighbor_tour(spec.node_ids, spec.D)
    return RoutingOutcome(
        tour=fallback, from_sample=False, attempts=retry_limit + 1,
        report=last_report,
    )


def solve_tsp(instance: ProblemInstance, config: SolverConfig | None = None) -> Tour:
    """Route a whole TSP instance through the QUBO pipeline."""
    if instance.kind is not InstanceKind.TSP:
        raise ValueError("solve_tsp expects a TSP instance")
    config = config or SolverConfig()
    D = distance_matrix(instance)
    spec = tsp_spec([node_id for node_id, _, _ in instance.nodes], D)
    return route_nodes(spec, config).tour


def solve_cvrp(
    instance: ProblemInstance,
    rule: CoreStopRule = CoreStopRule.MAX_DISTANCE,
    config: SolverConfig | None = None,
    improvement_iterations: int = DEFAULT_IMPROVEMENT_ITERATIONS,
) -> CvrpSolution:
    """Cluster-first/route-second solve of a CVRP instance."""
    if instance.kind is not InstanceKind.CVRP:
        raise ValueError("solve_cvrp expects a CVRP instance")
    config = config or SolverConfig()
    started = time.perf_counter()
    warnings_log: list[str] = []

    clustering = improve_clusters(
        instance,
        generate_clusters(instance, rule),
        max_iterations=improvement_iterations,
    )
    full_matrix = distance_matrix(instance)

    tours: list[Tour] = []
    valid_flags: list[bool] = []
    timing_rows: list[TimingRow] = []
    for index, cluster in enumerate(clustering.clusters):
        cluster_started = time.perf_counter()
        node_ids = [instance.depot_id] + sorted(cluster.members)
        spec = tsp_spec(node_ids, submatrix(full_matrix, node_ids))
        outcome = route_nodes(
            spec, replace(config, seed=config.seed + index)
        )
        elapsed = time.perf_counter() - cluster_started
        backend_seconds = outcome.report.backend_time if outcome.report else 0.0
        timing_rows.append(
            TimingRow(
                label=f"Cluster {index + 1}",
                orchestration=elapsed - backend_seconds,
                backend=backend_seconds,
            )
        )
        tours.append(outcome.tour)
        valid_flags.append(outcome.from_sample)
        if not outcome.from_sample:
            warnings_log.append(
                f"cluster {index + 1}: no valid sample in {outcome.attempts} "
                "attempts; nearest-neighbour fallback used"
            )

    total_distance = sum(tour.length for tour in tours)
    total_seconds = time.perf_counter() - started
    timings = TimingReport(
        clusters=tuple(timing_rows),
        main_procedure=total_seconds - sum(row.total for row in timing_rows),
        total=total_seconds,
    )
    solution = CvrpSolution(
        instance_name=instance.name,
        clustering=clustering,
        tours=tuple(tours),
        total_distance=total_distance,
        cluster_valid=tuple(valid_flags),
        warnings=tuple(warnings_log),
        timings=timings,
        config={
            "rule": rule.value,
            "backend": config.backend.value,
            "seed": config.seed,
            "num_repeats": config.num_repeats,
            "subqubo_size": config.subqubo_size,
            "improvement_iterations": improvement_iterations,
        },
    )
    problems = validate_solution(instance, solution)
    if problems:
        raise SolutionInvalid("; ".join(problems))
    return solution


def validate_solution(instance: ProblemInstance, solution: CvrpSolution) -> list[str]:
    """Re-check a solution against the raw instance; empty list means valid."""
    problems = []
    full_matrix = distance_matrix(instance)
    seen: list[int] = []
    for position, tour in enumerate(solution.tours):
        if tour.nodes[0] != instance.depot_id:
            problems.append(f"tour {position} does not start at the depot")
        customers = [n for n in tour.nodes if n != instance.depot_id]
        if len(customers) != len(tour.nodes) - 1:
            problems.append(f"tour {position} revisits the depot mid-route")
        seen.extend(customers)
        load = sum(instance.demands[c] for c in customers)
        if load > instance.capacity:
            problems.append(
                f"tour {position} load {load} exceeds capacity {instance.capacity}"
            )
        length = sum(
            full_matrix[tour.nodes[k] - 1, tour.nodes[(k + 1) % len(tour.nodes)] - 1]
            for k in range(len(tour.nodes))
        )
        if length != tour.length:
            problems.append(
                f"tour {position} length {tour.length} != recomputed {length}"
            )
    if sorted(seen) != sorted(instance.customer_ids):
        problems.append("tours do not visit every customer exactly once")
    if solution.total_distance != sum(t.length for t in solution.tours):
        problems.append("total_distance is not the sum of tour lengths")
    return problems


def solution_to_dict(solution: CvrpSolution, include_timings: bool = True) -> dict:
    """JSON-ready representation; deterministic for fixed instance+config+seed."""
    payload = {
        "instance": solution.instance_name,
        "config": dict(sorted(solution.config.items())),
        "clusters": [
            {
                "members": sorted(cluster.members),
                "center": [cluster.center[0], cluster.center[1]],
                "total_demand": cluster.total_demand,
            }
            for cluster in solution.clustering.clusters
        ],
        "tours": [
            {"nodes": list(tour.nodes), "length": tour.length}
            for tour in solution.tours
        ],
        "total_distance": solution.total_distance,
        "cluster_valid": list(solution.cluster_valid),
        "warnings": list(solution.warnings),
    }
    if include_timings:
        payload["timings"] = {
            "rows": [
                {
                    "label": label,
                    "orchestration_s": orchestration,
                    "backend_s": backend,
                    "total_s": total,
                }
                for label, orchestration, backend, total in solution.timings.rows()
            ],
            "main_procedure_s": solution.timings.main_procedure,
            "total_s": solution.timings.total,
        }
    return payload


def solution_to_json(solution: CvrpSolution, include_timings: bool = True) -> str:
    return json.dumps(
        solution_to_dict(solution, include_timings=include_timings),
        indent=2,
        sort_keys=True,
    )
