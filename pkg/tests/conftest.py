"""Shared fixtures: bundled benchmark instances and random-instance strategies."""
from __future__ import annotations

import math
from pathlib import Path

import pytest
from hypothesis import strategies as st

from qroute.instances import (
    EdgeWeightKind,
    InstanceKind,
    ProblemInstance,
    parse_instance,
)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def load_instance(name: str) -> ProblemInstance:
    path = DATA_DIR / name
    return parse_instance(path.read_text())


@pytest.fixture(scope="session")
def burma14() -> ProblemInstance:
    return load_instance("burma14.tsp")


@pytest.fixture(scope="session")
def ulysses16() -> ProblemInstance:
    return load_instance("ulysses16.tsp")


@pytest.fixture(scope="session")
def ulysses22() -> ProblemInstance:
    return load_instance("ulysses22.tsp")


@pytest.fixture(scope="session")
def en22() -> ProblemInstance:
    return load_instance("E-n22-k4.vrp")


@pytest.fixture(scope="session")
def en33() -> ProblemInstance:
    return load_instance("E-n33-k4.vrp")


def make_cvrp(
    coords: list[tuple[float, float]],
    demands: list[int],
    capacity: int,
    name: str = "random-cvrp",
) -> ProblemInstance:
    """Build a CVRP instance with the depot first; demands[0] is ignored."""
    nodes = tuple((i + 1, float(x), float(y)) for i, (x, y) in enumerate(coords))
    demand_map = {1: 0}
    for i, demand in enumerate(demands[1:], start=2):
        demand_map[i] = demand
    return ProblemInstance(
        name=name,
        kind=InstanceKind.CVRP,
        nodes=nodes,
        edge_weight_kind=EdgeWeightKind.EUC_2D,
        demands=demand_map,
        capacity=capacity,
        depot_id=1,
        min_vehicles=None,
    )


def make_tsp(coords: list[tuple[float, float]], name: str = "random-tsp") -> ProblemInstance:
    nodes = tuple((i + 1, float(x), float(y)) for i, (x, y) in enumerate(coords))
    return ProblemInstance(
        name=name,
        kind=InstanceKind.TSP,
        nodes=nodes,
        edge_weight_kind=EdgeWeightKind.EUC_2D,
        demands={},
        capacity=None,
        depot_id=None,
        min_vehicles=None,
    )


@st.composite
def cvrp_instances(draw, min_customers: int = 2, max_customers: int = 10,
                   max_coord: int = 100):
    """Random Euclidean CVRP instances with feasible singleton clusters."""
    n_customers = draw(st.integers(min_customers, max_customers))
    coords = draw(
        st.lists(
            st.tuples(st.integers(0, max_coord), st.integers(0, max_coord)),
            min_size=n_customers + 1,
            max_size=n_customers + 1,
            unique=True,
        )
    )
    capacity = draw(st.integers(5, 60))
    demands = [0] + [draw(st.integers(1, capacity)) for _ in range(n_customers)]
    return make_cvrp(coords, demands, capacity)


@st.composite
def tsp_instances(draw, min_nodes: int = 2, max_nodes: int = 8, max_coord: int = 100):
    n = draw(st.integers(min_nodes, max_nodes))
    coords = draw(
        st.lists(
            st.tuples(st.integers(0, max_coord), st.integers(0, max_coord)),
            min_size=n,
            max_size=n,
            unique=True,
        )
    )
    return make_tsp(coords)
