"""Independent symbolic evaluators for the penalty Hamiltonians.

These walk the mathematical formulas literally (squared one-hot sums and
explicit pair sums on a given bit assignment) without touching the QUBO
builders, so they catch expansion and offset mistakes in the production
constructions.
"""
from __future__ import annotations

import itertools
from typing import Iterator, Sequence

from qroute.formulations import ClusterQuboSpec, JointQuboSpec, TspQuboSpec


def symbolic_tsp_energy(spec: TspQuboSpec, bits: Sequence[int]) -> float:
    n, A, B = spec.n, spec.onehot_penalty, spec.distance_weight

    def x(i: int, j: int) -> int:
        return bits[i * n + j]

    h = 0
    for i in range(n):
        h += A * (1 - sum(x(i, j) for j in range(n))) ** 2
    for j in range(n):
        h += A * (1 - sum(x(i, j) for i in range(n))) ** 2
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            for j in range(n):
                h += B * spec.D[u, v] * x(u, j) * x(v, (j + 1) % n)
    return h


def symbolic_cluster_energy(spec: ClusterQuboSpec, bits: Sequence[int]) -> float:
    m, W = spec.vehicle_count, spec.capacity_slots
    X, A, C = spec.select_penalty, spec.load_penalty, spec.proximity_weight

    def y(k: int, slot: int) -> int:
        return bits[spec.y_index(k, slot)]

    def x(k: int, a: int) -> int:
        return bits[spec.x_index(k, a)]

    h = 0
    for k in range(m):
        h += X * (1 - sum(y(k, slot) for slot in range(1, W + 1))) ** 2
        declared = sum(slot * y(k, slot) for slot in range(1, W + 1))
        packed = sum(w * x(k, a) for a, w in enumerate(spec.weights))
        h += A * (declared - packed) ** 2
    for a in range(spec.n_customers):
        h += X * (1 - sum(x(k, a) for k in range(m))) ** 2
    for k in range(m):
        for a in range(spec.n_customers):
            for a2 in range(a + 1, spec.n_customers):
                h += C * spec.D[a, a2] * x(k, a) * x(k, a2)
    return h


def symbolic_joint_energy(spec: JointQuboSpec, bits: Sequence[int]) -> float:
    m, N, W = spec.vehicle_count, spec.positions, spec.capacity_slots
    n_c, n_s = spec.n_customers, spec.n_stops
    X, A = spec.hard_penalty, spec.load_penalty
    C, E = spec.proximity_weight, spec.order_weight

    def x(k: int, stop: int, j: int) -> int:
        return bits[spec.x_index(k, stop, j)]

    def y(k: int, slot: int) -> int:
        return bits[spec.y_index(k, slot)]

    def membership(k: int, stop: int) -> int:
        return sum(x(k, stop, j) for j in range(N))

    h = 0
    for k in range(m):
        h += X * (1 - sum(y(k, slot) for slot in range(1, W + 1))) ** 2
        declared = sum(slot * y(k, slot) for slot in range(1, W + 1))
        packed = sum(w * membership(k, a) for a, w in enumerate(spec.weights))
        h += A * (declared - packed) ** 2
    for a in range(n_c):
        h += X * (1 - sum(x(k, a, j) for k in range(m) for j in range(N))) ** 2
    for j in range(N):
        h += X * (1 - sum(x(k, stop, j) for k in range(m) for stop in range(n_s))) ** 2
    for k in range(m):
        h += X * (1 - sum(membership(k, stop) for stop in range(n_c, n_s))) ** 2
    for k in range(m):
        for a in range(n_c):
            for a2 in range(a + 1, n_c):
                h += C * spec.D[a, a2] * membership(k, a) * membership(k, a2)
    for j in range(N - 1):
        for u in range(n_s):
            for v in range(n_s):
                if u == v:
                    continue
                occupied_u = sum(x(k, u, j) for k in range(m))
                occupied_v = sum(x(k, v, j + 1) for k in range(m))
                h += E * spec.D[u, v] * occupied_u * occupied_v
    return h


def all_bit_vectors(dim: int) -> Iterator[tuple[int, ...]]:
    """Lexicographic enumeration matching the oracle tie-break order."""
    return itertools.product((0, 1), repeat=dim)


def permutation_bits(perm: Sequence[int], n: int) -> list[int]:
    """Bits for the TSP layout placing node perm[j] at position j."""
    bits = [0] * (n * n)
    for j, node in enumerate(perm):
        bits[node * n + j] = 1
    return bits
