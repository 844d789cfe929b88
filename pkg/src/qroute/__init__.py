"""Cluster-first/route-second CVRP solving with a QUBO routing phase."""

from .instances import (
    DistanceMatrix,
    EdgeWeightKind,
    InstanceKind,
    ParseError,
    ProblemInstance,
    distance_matrix,
    parse_instance,
    serialize_instance,
)
from .qubo import QuboBuilder, QuboProblem, Sample, clamp, evaluate, make_sample

__all__ = [
    "DistanceMatrix",
    "EdgeWeightKind",
    "InstanceKind",
    "ParseError",
    "ProblemInstance",
    "distance_matrix",
    "parse_instance",
    "serialize_instance",
    "QuboBuilder",
    "QuboProblem",
    "Sample",
    "clamp",
    "evaluate",
    "make_sample",
]
