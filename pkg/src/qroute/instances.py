"""TSPLIB/CVRPLIB instance parsing and integer distance matrices.

Supports the two edge-weight conventions needed by the benchmark sets used
here: EUC_2D (nearest-integer Euclidean) and GEO (great-circle distance on
the TSPLIB reference sphere).  Both follow the TSPLIB95 document so that
published best-known values are reproduced exactly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "EdgeWeightKind",
    "InstanceKind",
    "ProblemInstance",
    "DistanceMatrix",
    "ParseError",
    "parse_instance",
    "serialize_instance",
    "distance_matrix",
]

# TSPLIB95 GEO constants: truncated pi and the Earth radius in km.
GEO_PI = 3.141592
GEO_RADIUS = 6378.388


class InstanceKind(Enum):
    TSP = "TSP"
    CVRP = "CVRP"


class EdgeWeightKind(Enum):
    EUC_2D = "EUC_2D"
    GEO = "GEO"


class ParseError(ValueError):
    """Instance text rejected; message carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    kind: InstanceKind
    nodes: tuple[tuple[int, float, float], ...]  # (id, x, y), ids 1..n
    edge_weight_kind: EdgeWeightKind
    demands: dict[int, int] = field(default_factory=dict)  # CVRP only
    capacity: int | None = None  # CVRP only
    depot_id: int | None = None  # CVRP only
    min_vehicles: int | None = None  # advisory, parsed from "-kY" in the name

    @property
    def dimension(self) -> int:
        return len(self.nodes)

    @property
    def customer_ids(self) -> tuple[int, ...]:
        """All node ids except the depot (every id for pure TSP)."""
        return tuple(i for i, _, _ in self.nodes if i != self.depot_id)

    def coords(self, node_id: int) -> tuple[float, float]:
        _, x, y = self.nodes[node_id - 1]
        return x, y


@dataclass(frozen=True)
class DistanceMatrix:
    n: int
    entries: np.ndarray  # (n, n) int64, symmetric, zero diagonal

    def __post_init__(self):
        self.entries.setflags(write=False)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        return int(self.entries[ij])

    def max(self) -> int:
        return int(self.entries.max())


_HEADER_RE = re.compile(r"^\s*([A-Z_0-9]+)\s*:\s*(.*?)\s*$")
_SECTIONS = ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION")


def parse_instance(text: str) -> ProblemInstance:
    """Parse a TSPLIB/CVRPLIB document into a validated ProblemInstance."""
    header: dict[str, str] = {}
    coords: list[tuple[int, float, float]] = []
    seen_ids: set[int] = set()
    demands: dict[int, int] = {}
    depot_ids: list[int] = []
    seen_sections: set[str] = set()
    section: str | None = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if line in _SECTIONS:
            section = line
            seen_sections.add(line)
            continue
        if line.endswith("_SECTION"):
            # Unknown sections (display data and the like) are skipped whole.
            section = line
            continue
        if section is None:
            m = _HEADER_RE.match(line)
            if m:
                header[m.group(1)] = m.group(2)
                continue
            raise ParseError(f"unrecognized header line {line!r}", line_no)
        if section == "NODE_COORD_SECTION":
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"malformed coordinate line {line!r}", line_no)
            try:
                node_id, x, y = int(parts[0]), float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ParseError(f"malformed coordinate line {line!r}", line_no) from exc
            if node_id in seen_ids:
                raise ParseError(f"duplicate node id {node_id}", line_no)
            seen_ids.add(node_id)
            coords.append((node_id, x, y))
        elif section == "DEMAND_SECTION":
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"malformed demand line {line!r}", line_no)
            node_id, demand = int(parts[0]), int(parts[1])
            if node_id in demands:
                raise ParseError(f"duplicate demand for node {node_id}", line_no)
            if demand < 0:
                raise ParseError(f"negative demand for node {node_id}", line_no)
            demands[node_id] = demand
        elif section == "DEPOT_SECTION":
            value = int(line.split()[0])
            if value != -1:
                depot_ids.append(value)

    if "NODE_COORD_SECTION" not in seen_sections:
        raise ParseError("missing NODE_COORD_SECTION")

    ewt = header.get("EDGE_WEIGHT_TYPE", "EUC_2D")
    try:
        edge_weight_kind = EdgeWeightKind(ewt)
    except ValueError:
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt!r}") from None

    name = header.get("NAME", "unnamed")
    declared_type = header.get("TYPE")
    if declared_type is not None and declared_type not in ("TSP", "CVRP"):
        raise ParseError(f"unsupported TYPE {declared_type!r}")
    if declared_type is None:
        declared_type = "CVRP" if "DEMAND_SECTION" in seen_sections else "TSP"
    kind = InstanceKind(declared_type)

    coords.sort(key=lambda item: item[0])
    ids = [i for i, _, _ in coords]
    if ids != list(range(1, len(ids) + 1)):
        raise ParseError("node ids are not contiguous from 1")
    if "DIMENSION" in header and int(header["DIMENSION"]) != len(ids):
        raise ParseError(
            f"DIMENSION {header['DIMENSION']} does not match "
            f"{len(ids)} coordinate lines"
        )

    capacity = None
    depot_id = None
    if kind is InstanceKind.CVRP:
        if "DEMAND_SECTION" not in seen_sections:
            raise ParseError("missing DEMAND_SECTION")
        if "CAPACITY" not in header:
            raise ParseError("missing CAPACITY")
        if "DEPOT_SECTION" not in seen_sections:
            raise ParseError("missing DEPOT_SECTION")
        capacity = int(header["CAPACITY"])
        if capacity <= 0:
            raise ParseError(f"non-positive CAPACITY {capacity}")
        if len(depot_ids) != 1:
            raise ParseError(f"expected exactly one depot, got {depot_ids}")
        depot_id = depot_ids[0]
        if depot_id not in seen_ids:
            raise ParseError(f"depot id {depot_id} has no coordinates")
        missing = [i for i in ids if i not in demands]
        if missing:
            raise ParseError(f"missing demand for nodes {missing}")
        if demands[depot_id] != 0:
            raise ParseError(f"depot demand must be 0, got {demands[depot_id]}")
        for node_id, demand in demands.items():
            if node_id != depot_id and demand > capacity:
                raise ParseError(
                    f"demand {demand} of node {node_id} exceeds capacity {capacity}"
                )
        demands = {i: demands[i] for i in ids}
    else:
        demands = {}

    min_vehicles = None
    k_match = re.search(r"-k(\d+)", name)
    if k_match:
        min_vehicles = int(k_match.group(1))

    return ProblemInstance(
        name=name,
        kind=kind,
        nodes=tuple(coords),
        edge_weight_kind=edge_weight_kind,
        demands=demands,
        capacity=capacity,
        depot_id=depot_id,
        min_vehicles=min_vehicles,
    )


def serialize_instance(instance: ProblemInstance) -> str:
    """Render an instance back to TSPLIB text; parse(serialize(x)) == x."""
    out = [
        f"NAME : {instance.name}",
        f"TYPE : {instance.kind.value}",
        f"DIMENSION : {instance.dimension}",
        f"EDGE_WEIGHT_TYPE : {instance.edge_weight_kind.value}",
    ]
    if instance.kind is InstanceKind.CVRP:
        out.append(f"CAPACITY : {instance.capacity}")
    out.append("NODE_COORD_SECTION")
    for node_id, x, y in instance.nodes:
        out.append(f" {node_id} {x!r} {y!r}")
    if instance.kind is InstanceKind.CVRP:
        out.append("DEMAND_SECTION")
        for node_id, _, _ in instance.nodes:
            out.append(f"{node_id} {instance.demands[node_id]}")
        out.append("DEPOT_SECTION")
        out.append(f" {instance.depot_id}")
        out.append(" -1")
    out.append("EOF")
    return "\n".join(out) + "\n"


def _geo_radians(coordinate: float) -> float:
    """Decode a TSPLIB degrees.minutes coordinate into radians."""
    degrees = int(coordinate)
    minutes = coordinate - degrees
    return GEO_PI * (degrees + 5.0 * minutes / 3.0) / 180.0


def _geo_distance(lat1, lon1, lat2, lon2) -> int:
    q1 = math.cos(lon1 - lon2)
    q2 = math.cos(lat1 - lat2)
    q3 = math.cos(lat1 + lat2)
    return int(GEO_RADIUS * math.acos(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)) + 1.0)


def distance_matrix(instance: ProblemInstance) -> DistanceMatrix:
    n = instance.dimension
    xs = np.array([x for _, x, _ in instance.nodes], dtype=np.float64)
    ys = np.array([y for _, _, y in instance.nodes], dtype=np.float64)
    if instance.edge_weight_kind is EdgeWeightKind.EUC_2D:
        dx = xs[:, None] - xs[None, :]
        dy = ys[:, None] - ys[None, :]
        entries = np.floor(np.sqrt(dx * dx + dy * dy) + 0.5).astype(np.int64)
    else:
        lat = np.array([_geo_radians(x) for x in xs])
        lon = np.array([_geo_radians(y) for y in ys])
        entries = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                d = _geo_distance(lat[i], lon[i], lat[j], lon[j])
                entries[i, j] = entries[j, i] = d
    np.fill_diagonal(entries, 0)
    return DistanceMatrix(n=n, entries=entries)


def submatrix(matrix: DistanceMatrix, node_ids: list[int]) -> DistanceMatrix:
    """Distance matrix restricted to the given 1-based node ids, in order."""
    idx = np.array([i - 1 for i in node_ids], dtype=np.intp)
    sub = matrix.entries[np.ix_(idx, idx)].copy()
    return DistanceMatrix(n=len(node_ids), entries=sub)
