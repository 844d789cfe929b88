"""Classical clustering phase: core-stop seeding, greedy growth, improvement.

Clusters are grown one at a time.  A core stop seeds the cluster (picked by
largest demand or largest depot distance), then the unclustered customer
nearest to the running geometric center is absorbed until the nearest
candidate no longer fits the remaining capacity.  A follow-up improvement
pass migrates customers towards closer centers while respecting capacity.

All geometry here is raw planar Euclidean on the instance coordinates;
the rounded TSPLIB metric only matters for the routing phase.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

from .instances import InstanceKind, ProblemInstance

DEFAULT_IMPROVEMENT_ITERATIONS = 50


class CoreStopRule(enum.Enum):
    """How the first customer (core stop) of each new cluster is picked."""

    MAX_DISTANCE = "max_distance"  # farthest from the depot
    MAX_REQUEST = "max_request"    # largest demand

    def __str__(self) -> str:  # argparse-friendly
        return self.value


@dataclass(frozen=True)
class Cluster:
    members: frozenset[int]
    center: tuple[float, float]
    total_demand: int


@dataclass(frozen=True)
class Clustering:
    clusters: tuple[Cluster, ...]

    def assignment(self) -> dict[int, int]:
        """Map each customer id to the index of its cluster."""
        out: dict[int, int] = {}
        for index, cluster in enumerate(self.clusters):
            for customer in cluster.members:
                out[customer] = index
        return out

    @property
    def customer_count(self) -> int:
        return sum(len(c.members) for c in self.clusters)


@dataclass(frozen=True)
class MoveRecord:
    """One applied improvement move, for auditing the strict-decrease rule."""

    customer: int
    source: int
    target: int
    old_distance: float
    new_distance: float


class ClusterCountWarning(UserWarning):
    """More clusters than the advisory vehicle count from the dataset name."""


def _mean_center(instance: ProblemInstance, members) -> tuple[float, float]:
    xs, ys = zip(*(instance.coords(c) for c in members))
    return (sum(xs) / len(xs), sum(ys) / len(ys))


def _require_cvrp(instance: ProblemInstance) -> None:
    if instance.kind is not InstanceKind.CVRP:
        raise ValueError("clustering requires a CVRP instance with demands")


def _select_core(instance: ProblemInstance, candidates, rule: CoreStopRule) -> int:
    if rule is CoreStopRule.MAX_REQUEST:
        return min(candidates, key=lambda c: (-instance.demands[c], c))
    depot = instance.coords(instance.depot_id)
    return min(candidates, key=lambda c: (-math.dist(instance.coords(c), depot), c))


def generate_clusters(instance: ProblemInstance, rule: CoreStopRule) -> Clustering:
    """Grow capacity-feasible clusters greedily around core stops.

    Each cluster closes at the first nearest-to-center candidate whose
    demand would exceed the remaining capacity; skipping over such a
    candidate is deliberately not attempted.  Ties (equal demand, equal
    distance) resolve to the lowest customer id.
    """
    _require_cvrp(instance)
    unclustered = list(instance.customer_ids)
    clusters: list[Cluster] = []
    while unclustered:
        core = _select_core(instance, unclustered, rule)
        unclustered.remove(core)
        members = [core]
        load = instance.demands[core]
        center = instance.coords(core)
        while unclustered:
            nearest = min(
                unclustered,
                key=lambda c: (math.dist(instance.coords(c), center), c),
            )
            if load + instance.demands[nearest] > instance.capacity:
                break
            unclustered.remove(nearest)
            members.append(nearest)
            load += instance.demands[nearest]
            center = _mean_center(instance, members)
        clusters.append(
            Cluster(members=frozenset(members), center=center, total_demand=load)
        )
    if instance.min_vehicles is not None and len(clusters) > instance.min_vehicles:
        warnings.warn(
            f"{len(clusters)} clusters exceed the advisory vehicle count "
            f"{instance.min_vehicles} for {instance.name}",
            ClusterCountWarning,
            stacklevel=2,
        )
    return Clustering(clusters=tuple(clusters))


def _first_improving_move(instance, member_sets, loads, centers):
    """Scan customers in id order for the first strictly improving move."""
    owner = {}
    for index, members in enumerate(member_sets):
        for customer in members:
            owner[customer] = index
    for customer in sorted(owner):
        source = owner[customer]
        position = instance.coords(customer)
        current = math.dist(position, centers[source])
        demand = instance.demands[customer]
        best = None
        for target in range(len(member_sets)):
            if target == source:
                continue
            if loads[target] + demand > instance.capacity:
                continue
            distance = math.dist(position, centers[target])
            if best is None or (distance, target) < best[:2]:
                best = (distance, target)
        if best is not None and best[0] < current:
            return MoveRecord(
                customer=customer,
                source=source,
                target=best[1],
                old_distance=current,
                new_distance=best[0],
            )
    return None


def improve_clusters(
    instance: ProblemInstance,
    clustering: Clustering,
    max_iterations: int = DEFAULT_IMPROVEMENT_ITERATIONS,
    move_log: list[MoveRecord] | None = None,
) -> Clustering:
    """Reassign customers to strictly closer centers while capacity allows.

    After each applied move both affected centers are recomputed and the
    scan restarts from the lowest customer id, so `max_iterations` bounds
    the number of applied moves.  A cluster emptied by a move is dropped.
    """
    _require_cvrp(instance)
    if max_iterations < 1:
        raise ValueError("max_iterations must be positive")
    member_sets = [set(c.members) for c in clustering.clusters]
    loads = [c.total_demand for c in clustering.clusters]
    centers = [c.center for c in clustering.clusters]
    for _ in range(max_iterations):
        move = _first_improving_move(instance, member_sets, loads, centers)
        if move is None:
            break
        demand = instance.demands[move.customer]
        member_sets[move.source].discard(move.customer)
        member_sets[move.target].add(move.customer)
        loads[move.source] -= demand
        loads[move.target] += demand
        target = move.target
        if member_sets[move.source]:
            centers[move.source] = _mean_center(instance, member_sets[move.source])
        else:
            del member_sets[move.source], loads[move.source], centers[move.source]
            if target > move.source:
                target -= 1
        centers[target] = _mean_center(instance, member_sets[target])
        if move_log is not None:
            move_log.append(move)  # indices as they were at move time
    return Clustering(
        clusters=tuple(
            Cluster(
                members=frozenset(members),
                center=centers[index],
                total_demand=loads[index],
            )
            for index, members in enumerate(member_sets)
        )
    )
