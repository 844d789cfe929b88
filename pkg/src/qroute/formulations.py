"""QUBO constructions for routing and clustering, plus sample decoders.

Three formulations are provided:

* a cycle-position TSP encoding (one binary per node/position pair) used by
  the hybrid pipeline's routing phase,
* a knapsack-style clustering encoding (capacity one-hots per vehicle plus
  customer/vehicle assignment variables),
* a joint encoding that solves assignment and ordering simultaneously on
  globally unique positions, with the depot replicated once per route.

Each builder tracks the constant offsets of the expanded squared penalty
terms so that valid assignments evaluate to their natural objective value
(e.g. a valid tour's total energy is exactly the weighted tour length).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .instances import DistanceMatrix, ProblemInstance, distance_matrix, submatrix
from .qubo import QuboBuilder, QuboProblem, Sample


__all__ = [
    "TspQuboSpec",
    "ClusterQuboSpec",
    "JointQuboSpec",
    "Tour",
    "TourInvalidity",
    "ClusterInvalidity",
    "build_tsp_qubo",
    "decode_tour",
    "build_cluster_qubo",
    "decode_clusters",
    "build_joint_qubo",
    "decode_joint_routes",
    "tsp_spec",
    "cluster_spec",
    "joint_spec",
]

JOINT_VARIABLE_GUARD = 2500


def _default_onehot_penalty(n: int, max_distance: int, distance_weight: float) -> float:
    """n * max(D), floored so the dominance condition stays satisfiable."""
    return max(n * max_distance * distance_weight, 1)


# ---------------------------------------------------------------------------
# TSP (cycle-position) encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TspQuboSpec:
    """Cycle over node_ids with variable x[i, j] = node i at position j.

    Variable index layout: i * n + j, 0-based.  onehot_penalty is the shared
    weight of both one-hot constraint families; distance_weight scales the
    tour-length objective.
    """

    node_ids: tuple[int, ...]
    D: DistanceMatrix
    onehot_penalty: float
    distance_weight: float = 1

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("cycle needs at least one node")
        if self.D.n != self.n:
            raise ValueError("distance matrix size does not match node count")
        if self.distance_weight <= 0:
            raise ValueError("distance_weight must be positive")
        if self.distance_weight * self.D.max() >= self.onehot_penalty:
            raise ValueError(
                "penalty condition violated: need "
                f"distance_weight*max(D) < onehot_penalty, got "
                f"{self.distance_weight} * {self.D.max()} vs {self.onehot_penalty}"
            )


def tsp_spec(node_ids: Sequence[int], D: DistanceMatrix,
             onehot_penalty: float | None = None,
             distance_weight: float = 1) -> TspQuboSpec:
    if onehot_penalty is None:
        onehot_penalty = _default_onehot_penalty(len(node_ids), D.max(), distance_weight)
    spec = TspQuboSpec(
        node_ids=tuple(node_ids),
        D=D,
        onehot_penalty=onehot_penalty,
        distance_weight=distance_weight,
    )
    spec.validate()
    return spec


@dataclass(frozen=True)
class Tour:
    nodes: tuple[int, ...]
    length: int


@dataclass(frozen=True)
class TourInvalidity:
    """One entry per violated one-hot group: (constraint, subject, ones)."""

    violations: tuple[tuple[str, int, int], ...]


def build_tsp_qubo(spec: TspQuboSpec) -> QuboProblem:
    spec.validate()
    n = spec.n
    A = spec.onehot_penalty
    B = spec.distance_weight
    builder = QuboBuilder(n * n)

    def var(i: int, j: int) -> int:
        return i * n + j

    # each node occupies exactly one position: A * (1 - sum_j x[i,j])^2
    for i in range(n):
        for j in range(n):
            builder.add(var(i, j), var(i, j), -A)
            for j2 in range(j + 1, n):
                builder.add(var(i, j), var(i, j2), 2 * A)
        builder.add_offset(A)
    # each position hosts exactly one node: A * (1 - sum_i x[i,j])^2
    for j in range(n):
        for i in range(n):
            for i2 in range(i + 1, n):
                builder.add(var(i, j), var(i2, j), 2 * A)
            builder.add(var(i, j), var(i, j), -A)
        builder.add_offset(A)
    # tour length: B * D(u, v) over consecutive positions, cyclic
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            d = spec.D[u, v]
            if d == 0:
                continue
            for j in range(n):
                builder.add(var(u, j), var(v, (j + 1) % n), B * d)

    labels = {var(i, j): (spec.node_ids[i], j) for i in range(n) for j in range(n)}
    return builder.build(labels=labels)


def decode_tour(spec: TspQuboSpec, sample: Sample | Sequence[int]) -> Tour | TourInvalidity:
    """Read a bit assignment back into a cycle, or report which one-hot failed.

    Valid tours are normalized to start at the first node of the spec (the
    depot for cluster tours) and to traverse the cheaper-direction-neutral
    orientation given by the sample.
    """
    bits = sample.bits if isinstance(sample, Sample) else tuple(sample)
    n = spec.n
    if len(bits) != n * n:
        raise ValueError(f"expected {n * n} bits, got {len(bits)}")
    violations = []
    for i in range(n):
        ones = sum(bits[i * n + j] for j in range(n))
        if ones != 1:
            violations.append(("node", spec.node_ids[i], ones))
    for j in range(n):
        ones = sum(bits[i * n + j] for i in range(n))
        if ones != 1:
            violations.append(("position", j, ones))
    if violations:
        return TourInvalidity(violations=tuple(violations))

    order = [0] * n
    for i in range(n):
        for j in range(n):
            if bits[i * n + j]:
                order[j] = i
    length = sum(spec.D[order[j], order[(j + 1) % n]] for j in range(n))
    start = order.index(0)
    rotated = order[start:] + order[:start]
    return Tour(nodes=tuple(spec.node_ids[i] for i in rotated), length=length)


# ---------------------------------------------------------------------------
# Clustering (knapsack-style) encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusterQuboSpec:
    """Assignment of customers to vehicles with one-hot capacity selection.

    Variables: y[k, n] for n = 1..capacity_slots declare vehicle k's load
    (index k * W + n - 1), followed by x[k, a] assigning customer a to
    vehicle k (index m * W + k * n_customers + a).
    """

    vehicle_count: int
    capacity_slots: int
    customer_ids: tuple[int, ...]
    weights: tuple[int, ...]
    D: DistanceMatrix  # customer-to-customer distances, same order as customer_ids
    select_penalty: float  # X: one capacity choice, one vehicle per customer
    load_penalty: float  # A: declared capacity must equal the packed load
    proximity_weight: float  # C: clustering objective on intra-vehicle pairs

    @property
    def n_customers(self) -> int:
        return len(self.customer_ids)

    @property
    def dim(self) -> int:
        return self.vehicle_count * self.capacity_slots + self.vehicle_count * self.n_customers

    def validate(self) -> None:
        if self.vehicle_count < 1:
            raise ValueError("need at least one vehicle")
        if len(self.weights) != self.n_customers:
            raise ValueError("weights and customer_ids must align")
        if any(w > self.capacity_slots for w in self.weights):
            worst = max(self.weights)
            raise ValueError(
                f"capacity one-hot bound {self.capacity_slots} cannot represent "
                f"demand {worst}"
            )
        if not self.select_penalty > self.load_penalty > self.proximity_weight * self.D.max():
            raise ValueError(
                "penalty hierarchy violated: need X > A > C*max(D), got "
                f"{self.select_penalty} > {self.load_penalty} > "
                f"{self.proximity_weight} * {self.D.max()}"
            )

    def y_index(self, k: int, slot: int) -> int:
        """Variable for vehicle k declaring capacity `slot` (1-based slot)."""
        return k * self.capacity_slots + slot - 1

    def x_index(self, k: int, a: int) -> int:
        return (self.vehicle_count * self.capacity_slots
                + k * self.n_customers + a)


def cluster_spec(instance: ProblemInstance, vehicle_count: int,
                 proximity_weight: float = 1,
                 capacity_divisor: int = 1,
                 select_penalty: float | None = None,
                 load_penalty: float | None = None) -> ClusterQuboSpec:
    """Build a clustering spec from a CVRP instance.

    capacity_divisor coarsens the capacity one-hot: demands are divided and
    ceiled, bounding variable count for large-capacity instances.
    """
    customer_ids = instance.customer_ids
    full = distance_matrix(instance)
    D = submatrix(full, list(customer_ids))
    weights = tuple(
        -(-instance.demands[c] // capacity_divisor) for c in customer_ids
    )
    slots = -(-instance.capacity // capacity_divisor)
    if load_penalty is None:
        load_penalty = _default_onehot_penalty(len(customer_ids), D.max(), 1)
    if select_penalty is None:
        select_penalty = load_penalty ** 2
        if select_penalty <= load_penalty:
            select_penalty = load_penalty + 1
    spec = ClusterQuboSpec(
        vehicle_count=vehicle_count,
        capacity_slots=slots,
        customer_ids=customer_ids,
        weights=weights,
        D=D,
        select_penalty=select_penalty,
        load_penalty=load_penalty,
        proximity_weight=proximity_weight,
    )
    spec.validate()
    return spec


def build_cluster_qubo(spec: ClusterQuboSpec) -> QuboProblem:
    spec.validate()
    m, W = spec.vehicle_count, spec.capacity_slots
    X, A, C = spec.select_penalty, spec.load_penalty, spec.proximity_weight
    builder = QuboBuilder(spec.dim)

    for k in range(m):
        # X * (1 - sum_n y[k,n])^2: exactly one declared capacity
        for slot in range(1, W + 1):
            builder.add(spec.y_index(k, slot), spec.y_index(k, slot), -X)
            for slot2 in range(slot + 1, W + 1):
                builder.add(spec.y_index(k, slot), spec.y_index(k, slot2), 2 * X)
        builder.add_offset(X)
        # A * (sum_n n*y[k,n] - sum_a w_a x[k,a])^2: declared = packed
        for slot in range(1, W + 1):
            builder.add(spec.y_index(k, slot), spec.y_index(k, slot), A * slot * slot)
            for slot2 in range(slot + 1, W + 1):
                builder.add(spec.y_index(k, slot), spec.y_index(k, slot2),
                            2 * A * slot * slot2)
        for a, w in enumerate(spec.weights):
            builder.add(spec.x_index(k, a), spec.x_index(k, a), A * w * w)
            for a2 in range(a + 1, spec.n_customers):
                builder.add(spec.x_index(k, a), spec.x_index(k, a2),
                            2 * A * w * spec.weights[a2])
        for slot in range(1, W + 1):
            for a, w in enumerate(spec.weights):
                builder.add(spec.y_index(k, slot), spec.x_index(k, a),
                            -2 * A * slot * w)
    # X * (1 - sum_k x[k,a])^2: every customer in exactly one vehicle
    for a in range(spec.n_customers):
        for k in range(m):
            builder.add(spec.x_index(k, a), spec.x_index(k, a), -X)
            for k2 in range(k + 1, m):
                builder.add(spec.x_index(k, a), spec.x_index(k2, a), 2 * X)
        builder.add_offset(X)
    # C * D(u, v) on intra-vehicle customer pairs
    if C:
        for k in range(m):
            for a in range(spec.n_customers):
                for a2 in range(a + 1, spec.n_customers):
                    d = spec.D[a, a2]
                    if d:
                        builder.add(spec.x_index(k, a), spec.x_index(k, a2), C * d)

    labels: dict[int, tuple] = {}
    for k in range(m):
        for slot in range(1, W + 1):
            labels[spec.y_index(k, slot)] = ("capacity", k, slot)
        for a, customer in enumerate(spec.customer_ids):
            labels[spec.x_index(k, a)] = ("assign", k, customer)
    return builder.build(labels=labels)


@dataclass(frozen=True)
class ClusterInvalidity:
    violations: tuple[tuple[str, int, int], ...]


def decode_clusters(spec: ClusterQuboSpec, sample: Sample | Sequence[int]
                    ) -> dict[int, int] | ClusterInvalidity:
    """Map customers to vehicles, or report one-hot/load violations.

    Returns {customer_id: vehicle_index} on success.  A vehicle whose
    declared capacity differs from its packed load is a violation (that is
    the equality the load penalty enforces).
    """
    bits = sample.bits if isinstance(sample, Sample) else tuple(sample)
    if len(bits) != spec.dim:
        raise ValueError(f"expected {spec.dim} bits, got {len(bits)}")
    violations = []
    assignment: dict[int, int] = {}
    for a, customer in enumerate(spec.customer_ids):
        owners = [k for k in range(spec.vehicle_count) if bits[spec.x_index(k, a)]]
        if len(owners) != 1:
            violations.append(("customer", customer, len(owners)))
        else:
            assignment[customer] = owners[0]
    for k in range(spec.vehicle_count):
        declared = [slot for slot in range(1, spec.capacity_slots + 1)
                    if bits[spec.y_index(k, slot)]]
        if len(declared) != 1:
            violations.append(("capacity", k, len(declared)))
            continue
        load = sum(w for a, w in enumerate(spec.weights) if bits[spec.x_index(k, a)])
        if declared[0] != load:
            violations.append(("load", k, load - declared[0]))
    if violations:
        return ClusterInvalidity(violations=tuple(violations))
    return assignment


# ---------------------------------------------------------------------------
# Joint (simultaneous assignment + ordering) encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointQuboSpec:
    """Customers and depot copies placed on globally unique cycle positions.

    Stops 0..n_customers-1 are customers; the last depot_copies stops are
    depot replicas (one per route, forced by the depot term).  Variable
    x[k, stop, j] has index k * (n_stops * positions) + stop * positions + j;
    the capacity one-hots y[k, n] follow.
    """

    vehicle_count: int
    depot_copies: int
    positions: int
    capacity_slots: int
    customer_ids: tuple[int, ...]
    weights: tuple[int, ...]
    D: DistanceMatrix  # over stops: customers then depot copies
    hard_penalty: float  # X
    load_penalty: float  # A
    proximity_weight: float  # C
    order_weight: float  # E

    @property
    def n_customers(self) -> int:
        return len(self.customer_ids)

    @property
    def n_stops(self) -> int:
        return self.n_customers + self.depot_copies

    @property
    def dim(self) -> int:
        return (self.vehicle_count * self.n_stops * self.positions
                + self.vehicle_count * self.capacity_slots)

    def x_index(self, k: int, stop: int, j: int) -> int:
        return k * self.n_stops * self.positions + stop * self.positions + j

    def y_index(self, k: int, slot: int) -> int:
        return (self.vehicle_count * self.n_stops * self.positions
                + k * self.capacity_slots + slot - 1)

    def validate(self) -> None:
        if self.depot_copies != self.vehicle_count:
            raise ValueError("one depot copy per route is required")
        if self.D.n != self.n_stops:
            raise ValueError("stop distance matrix size mismatch")
        if self.dim > JOINT_VARIABLE_GUARD:
            raise ValueError(
                f"joint formulation limited to {JOINT_VARIABLE_GUARD} variables, "
                f"this spec needs {self.dim}"
            )
        if any(w > self.capacity_slots for w in self.weights):
            raise ValueError("capacity one-hot bound below a customer demand")


def joint_spec(instance: ProblemInstance, vehicle_count: int,
               proximity_weight: float = 1, order_weight: float = 1,
               capacity_divisor: int = 1,
               positions: int | None = None) -> JointQuboSpec:
    customer_ids = instance.customer_ids
    d = vehicle_count
    stops = list(customer_ids) + [instance.depot_id] * d
    full = distance_matrix(instance)
    D = submatrix(full, stops)
    weights = tuple(
        -(-instance.demands[c] // capacity_divisor) for c in customer_ids
    )
    slots = -(-instance.capacity // capacity_divisor)
    n_positions = positions if positions is not None else len(stops)
    load_penalty = _default_onehot_penalty(len(customer_ids), D.max(), 1)
    hard_penalty = load_penalty ** 2
    if hard_penalty <= load_penalty:
        hard_penalty = load_penalty + 1
    spec = JointQuboSpec(
        vehicle_count=vehicle_count,
        depot_copies=d,
        positions=n_positions,
        capacity_slots=slots,
        customer_ids=customer_ids,
        weights=weights,
        D=D,
        hard_penalty=hard_penalty,
        load_penalty=load_penalty,
        proximity_weight=proximity_weight,
        order_weight=order_weight,
    )
    spec.validate()
    return spec


def build_joint_qubo(spec: JointQuboSpec) -> QuboProblem:
    spec.validate()
    m, N = spec.vehicle_count, spec.positions
    n_c, n_s = spec.n_customers, spec.n_stops
    W = spec.capacity_slots
    X, A = spec.hard_penalty, spec.load_penalty
    C, E = spec.proximity_weight, spec.order_weight
    builder = QuboBuilder(spec.dim)

    def on_route(k: int, stop: int) -> list[int]:
        return [spec.x_index(k, stop, j) for j in range(N)]

    # capacity declaration (one-hot + declared-equals-load), per vehicle;
    # a stop's membership on route k is sum_j x[k, stop, j]
    for k in range(m):
        for slot in range(1, W + 1):
            builder.add(spec.y_index(k, slot), spec.y_index(k, slot), -X)
            for slot2 in range(slot + 1, W + 1):
                builder.add(spec.y_index(k, slot), spec.y_index(k, slot2), 2 * X)
        builder.add_offset(X)
        for slot in range(1, W + 1):
            builder.add(spec.y_index(k, slot), spec.y_index(k, slot), A * slot * slot)
            for slot2 in range(slot + 1, W + 1):
                builder.add(spec.y_index(k, slot), spec.y_index(k, slot2),
                            2 * A * slot * slot2)
        members = [(a, w) for a, w in enumerate(spec.weights)]
        for a, w in members:
            vars_a = on_route(k, a)
            for p, va in enumerate(vars_a):
                builder.add(va, va, A * w * w)
                for vb in vars_a[p + 1:]:
                    builder.add(va, vb, 2 * A * w * w)
            for a2, w2 in members[a + 1:]:
                for va in vars_a:
                    for vb in on_route(k, a2):
                        builder.add(va, vb, 2 * A * w * w2)
        for slot in range(1, W + 1):
            for a, w in members:
                for va in on_route(k, a):
                    builder.add(spec.y_index(k, slot), va, -2 * A * slot * w)
    # every customer: exactly one route and one position
    for a in range(n_c):
        all_vars = [spec.x_index(k, a, j) for k in range(m) for j in range(N)]
        for p, va in enumerate(all_vars):
            builder.add(va, va, -X)
            for vb in all_vars[p + 1:]:
                builder.add(va, vb, 2 * X)
        builder.add_offset(X)
    # every position: exactly one stop on exactly one route
    for j in range(N):
        all_vars = [spec.x_index(k, stop, j) for k in range(m) for stop in range(n_s)]
        for p, va in enumerate(all_vars):
            builder.add(va, va, -X)
            for vb in all_vars[p + 1:]:
                builder.add(va, vb, 2 * X)
        builder.add_offset(X)
    # every route: exactly one depot copy
    for k in range(m):
        depot_vars = [spec.x_index(k, stop, j)
                      for stop in range(n_c, n_s) for j in range(N)]
        for p, va in enumerate(depot_vars):
            builder.add(va, va, -X)
            for vb in depot_vars[p + 1:]:
                builder.add(va, vb, 2 * X)
        builder.add_offset(X)
    # clustering objective: intra-route customer pair distances
    if C:
        for k in range(m):
            for a in range(n_c):
                for a2 in range(a + 1, n_c):
                    d = spec.D[a, a2]
                    if not d:
                        continue
                    for va in on_route(k, a):
                        for vb in on_route(k, a2):
                            builder.add(va, vb, C * d)
    # ordering objective: distances between consecutive global positions,
    # aggregated over routes (positions are globally unique), truncated at N
    if E:
        for j in range(N - 1):
            for u in range(n_s):
                for v in range(n_s):
                    if u == v:
                        continue
                    d = spec.D[u, v]
                    if not d:
                        continue
                    for k in range(m):
                        for k2 in range(m):
                            builder.add(spec.x_index(k, u, j),
                                        spec.x_index(k2, v, j + 1), E * d)

    labels: dict[int, tuple] = {}
    stop_names = list(spec.customer_ids) + [("depot", c) for c in range(spec.depot_copies)]
    for k in range(m):
        for stop in range(n_s):
            for j in range(N):
                labels[spec.x_index(k, stop, j)] = ("place", k, stop_names[stop], j)
        for slot in range(1, W + 1):
            labels[spec.y_index(k, slot)] = ("capacity", k, slot)
    return builder.build(labels=labels)


def decode_joint_routes(spec: JointQuboSpec, sample: Sample | Sequence[int]) -> dict:
    """Best-effort reading of a joint sample for experiment reporting.

    Returns {"routes": {k: [stop names in position order]}, "violations":
    [...], "valid": bool}.  Violation kinds mirror the penalty terms.
    """
    bits = sample.bits if isinstance(sample, Sample) else tuple(sample)
    if len(bits) != spec.dim:
        raise ValueError(f"expected {spec.dim} bits, got {len(bits)}")
    violations = []
    stop_names = list(spec.customer_ids) + [("depot", c) for c in range(spec.depot_copies)]
    routes: dict[int, list] = {k: [] for k in range(spec.vehicle_count)}
    for a, customer in enumerate(spec.customer_ids):
        placements = [
            (k, j)
            for k in range(spec.vehicle_count)
            for j in range(spec.positions)
            if bits[spec.x_index(k, a, j)]
        ]
        if len(placements) != 1:
            violations.append(("customer", customer, len(placements)))
    for j in range(spec.positions):
        occupants = [
            (k, stop)
            for k in range(spec.vehicle_count)
            for stop in range(spec.n_stops)
            if bits[spec.x_index(k, stop, j)]
        ]
        if len(occupants) != 1:
            violations.append(("position", j, len(occupants)))
    for k in range(spec.vehicle_count):
        depot_uses = sum(
            bits[spec.x_index(k, stop, j)]
            for stop in range(spec.n_customers, spec.n_stops)
            for j in range(spec.positions)
        )
        if depot_uses != 1:
            violations.append(("depot", k, depot_uses))
        placed = sorted(
            (j, stop)
            for stop in range(spec.n_stops)
            for j in range(spec.positions)
            if bits[spec.x_index(k, stop, j)]
        )
        routes[k] = [stop_names[stop] for _, stop in placed]
    return {"routes": routes, "violations": violations, "valid": not violations}
