"""Independent exact solvers used as ground truth in tests and the CLI.

These deliberately share no algorithmic code with the production solver:
Held-Karp dynamic programming for TSP, batched full enumeration for QUBOs,
and set-partition brute force for tiny CVRP instances.
"""
from __future__ import annotations

import itertools
from typing import Iterator

import numpy as np
from numba import njit

from .instances import DistanceMatrix, ProblemInstance, distance_matrix
from .qubo import QuboProblem, Sample, to_dense

__all__ = ["held_karp", "enumerate_qubo", "brute_force_cvrp"]

HELD_KARP_MAX_NODES = 18
ENUMERATE_MAX_DIM = 24
BRUTE_FORCE_MAX_CUSTOMERS = 8


@njit(cache=True)
def _held_karp_tables(D):
    n = D.shape[0]
    m = n - 1  # nodes 1..n-1; node 0 is the anchor of every cycle
    size = 1 << m
    INF = np.int64(1) << np.int64(60)
    dp = np.full((size, m), INF, dtype=np.int64)
    parent = np.full((size, m), -1, dtype=np.int8)
    for k in range(m):
        dp[1 << k, k] = D[0, k + 1]
    for mask in range(1, size):
        for last in range(m):
            if not mask & (1 << last):
                continue
            cur = dp[mask, last]
            if cur >= INF:
                continue
            for nxt in range(m):
                if mask & (1 << nxt):
                    continue
                cand = cur + D[last + 1, nxt + 1]
                nm = mask | (1 << nxt)
                if cand < dp[nm, nxt]:
                    dp[nm, nxt] = cand
                    parent[nm, nxt] = last
    return dp, parent


def held_karp(D: DistanceMatrix) -> tuple[int, tuple[int, ...]]:
    """Exact shortest Hamiltonian cycle; returns (length, 0-based node order)."""
    n = D.n
    if n > HELD_KARP_MAX_NODES:
        raise ValueError(f"held_karp limited to {HELD_KARP_MAX_NODES} nodes, got {n}")
    if n == 1:
        return 0, (0,)
    if n == 2:
        return 2 * D[0, 1], (0, 1)
    dp, parent = _held_karp_tables(D.entries)
    m = n - 1
    full = (1 << m) - 1
    best_len, best_last = None, None
    for last in range(m):
        total = int(dp[full, last]) + D[last + 1, 0]
        if best_len is None or total < best_len:
            best_len, best_last = total, last
    order = [best_last]
    mask, last = full, best_last
    while parent[mask, last] >= 0:
        prev = int(parent[mask, last])
        mask ^= 1 << last
        order.append(prev)
        last = prev
    tour = (0, *[k + 1 for k in reversed(order)])
    # canonical direction: the neighbor after 0 is the smaller of the two
    if n > 2 and tour[-1] < tour[1]:
        tour = (0, *reversed(tour[1:]))
    return best_len, tour


def enumerate_qubo(q: QuboProblem) -> Sample:
    """Global minimum by full enumeration in lexicographic bit order.

    Ties resolve to the lexicographically smallest bit vector (bit 0 most
    significant), i.e. the first minimum encountered.
    """
    if q.dim > ENUMERATE_MAX_DIM:
        raise ValueError(f"enumerate_qubo limited to {ENUMERATE_MAX_DIM} variables, got {q.dim}")
    if q.dim == 0:
        return Sample(bits=(), energy=0, total_energy=q.offset)
    dense = to_dense(q)
    d = q.dim
    total = 1 << d
    chunk = min(total, 1 << 16)
    shifts = np.arange(d - 1, -1, -1, dtype=np.uint64)  # bit 0 is the high bit
    best_energy = np.inf
    best_code = -1
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        energies = ((bits @ dense) * bits).sum(axis=1)
        local = int(np.argmin(energies))
        if energies[local] < best_energy:
            best_energy = float(energies[local])
            best_code = int(codes[local])
    best_bits = tuple(int((best_code >> int(s)) & 1) for s in shifts)
    # recompute exactly in sparse arithmetic (einsum is float-rounded)
    energy = 0
    for (i, j), value in q.coefficients.items():
        if best_bits[i] and best_bits[j]:
            energy += value
    return Sample(bits=best_bits, energy=energy, total_energy=energy + q.offset)


def _partitions(items: list[int]) -> Iterator[list[list[int]]]:
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for partial in _partitions(rest):
        for block in partial:
            yield [*(b if b is not block else [head, *b] for b in partial)]
        yield [[head], *partial]


def _optimal_route_length(D: DistanceMatrix, depot_idx: int, members: tuple[int, ...]) -> int:
    """Cheapest depot-anchored cycle through `members` (matrix indices)."""
    if len(members) == 1:
        return 2 * D[depot_idx, members[0]]
    best = None
    # the depot anchors the cycle, so every member permutation is a distinct
    # route; only reflection (same length under symmetric D) can be skipped
    for order in itertools.permutations(members):
        if order[0] > order[-1]:
            continue
        length = D[depot_idx, order[0]] + D[order[-1], depot_idx]
        for a, b in zip(order, order[1:]):
            length += D[a, b]
        if best is None or length < best:
            best = length
    return best


def brute_force_cvrp(instance: ProblemInstance) -> tuple[int, list[list[int]]]:
    """Exact CVRP optimum over all capacity-feasible partitions (<= 8 customers).

    Returns (total distance, routes as lists of node ids, depot excluded).
    """
    customers = list(instance.customer_ids)
    if len(customers) > BRUTE_FORCE_MAX_CUSTOMERS:
        raise ValueError(
            f"brute_force_cvrp limited to {BRUTE_FORCE_MAX_CUSTOMERS} customers, "
            f"got {len(customers)}"
        )
    D = distance_matrix(instance)
    depot_idx = instance.depot_id - 1
    route_cache: dict[tuple[int, ...], int] = {}

    def route_length(block: list[int]) -> int:
        key = tuple(sorted(block))
        if key not in route_cache:
            members = tuple(c - 1 for c in key)
            route_cache[key] = _optimal_route_length(D, depot_idx, members)
        return route_cache[key]

    best_total, best_routes = None, None
    for partition in _partitions(customers):
        if any(
            sum(instance.demands[c] for c in block) > instance.capacity
            for block in partition
        ):
            continue
        total = sum(route_length(block) for block in partition)
        if best_total is None or total < best_total:
            best_total, best_routes = total, partition
    return best_total, [sorted(block) for block in best_routes]
