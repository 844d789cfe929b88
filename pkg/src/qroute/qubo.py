"""Sparse upper-triangular QUBO representation with exact energy accounting.

Coefficients are kept on the upper triangle (i <= j, diagonal = linear
terms); constant offsets from expanding squared penalty terms are tracked
explicitly so that identities like "total energy of a valid tour assignment
equals the tour length" can be asserted literally.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "QuboProblem",
    "QuboBuilder",
    "Sample",
    "evaluate",
    "make_sample",
    "add_term",
    "clamp",
    "terms",
    "to_dense",
]


@dataclass(frozen=True)
class QuboProblem:
    dim: int
    coefficients: Mapping[tuple[int, int], float]  # (i, j) with i <= j
    offset: float = 0
    labels: Mapping[int, Hashable] | None = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", MappingProxyType(dict(self.coefficients)))
        if self.labels is not None:
            object.__setattr__(self, "labels", MappingProxyType(dict(self.labels)))

    def validate(self) -> None:
        for (i, j), value in self.coefficients.items():
            if not (0 <= i <= j < self.dim):
                raise ValueError(f"coefficient key ({i}, {j}) outside 0..{self.dim - 1}")
            if value == 0:
                raise ValueError(f"explicit zero stored at ({i}, {j})")
        if self.labels is not None:
            if sorted(self.labels) != list(range(self.dim)):
                raise ValueError("labels do not cover variable indices exactly")
            if len(set(self.labels.values())) != self.dim:
                raise ValueError("labels are not distinct")


@dataclass(frozen=True)
class Sample:
    """A binary assignment; energy excludes the offset, total_energy includes it."""

    bits: tuple[int, ...]
    energy: float
    total_energy: float


class QuboBuilder:
    """Accumulates terms; coefficients landing on the same cell are added."""

    def __init__(self, dim: int):
        if dim < 0:
            raise ValueError("dim must be non-negative")
        self.dim = dim
        self._coeffs: dict[tuple[int, int], float] = {}
        self._offset: float = 0

    def add(self, i: int, j: int, value: float) -> "QuboBuilder":
        if not (0 <= i < self.dim and 0 <= j < self.dim):
            raise IndexError(f"index ({i}, {j}) out of range for dim {self.dim}")
        if value == 0:
            return self
        key = (i, j) if i <= j else (j, i)
        new = self._coeffs.get(key, 0) + value
        if new == 0:
            self._coeffs.pop(key, None)
        else:
            self._coeffs[key] = new
        return self

    def add_offset(self, value: float) -> "QuboBuilder":
        self._offset += value
        return self

    def build(self, labels: Mapping[int, Hashable] | None = None) -> QuboProblem:
        problem = QuboProblem(
            dim=self.dim,
            coefficients=dict(self._coeffs),
            offset=self._offset,
            labels=labels,
        )
        problem.validate()
        return problem


def evaluate(q: QuboProblem, bits: Sequence[int]) -> float:
    """Matrix energy sum_{i<=j} coeff(i,j) * bits[i] * bits[j] (offset excluded)."""
    if len(bits) != q.dim:
        raise ValueError(f"expected {q.dim} bits, got {len(bits)}")
    energy = 0
    for (i, j), value in q.coefficients.items():
        if bits[i] and bits[j]:
            energy += value
    return energy


def make_sample(q: QuboProblem, bits: Sequence[int]) -> Sample:
    energy = evaluate(q, bits)
    return Sample(bits=tuple(int(b) for b in bits), energy=energy,
                  total_energy=energy + q.offset)


def add_term(q: QuboProblem, i: int, j: int, value: float) -> QuboProblem:
    """Return a copy of q with `value` accumulated onto cell (min(i,j), max(i,j))."""
    builder = QuboBuilder(q.dim)
    builder._coeffs = dict(q.coefficients)
    builder._offset = q.offset
    builder.add(i, j, value)
    return builder.build(labels=dict(q.labels) if q.labels is not None else None)


def clamp(q: QuboProblem, fixed: Mapping[int, int]) -> tuple[QuboProblem, float]:
    """Fold fixed variables away, returning the free-variable subproblem.

    For any assignment y of the free variables,

        evaluate(sub, y) + base_energy == evaluate(q, combined)

    where `combined` places y on the free indices and `fixed` elsewhere.
    Cross terms between a fixed-1 variable and a free one land on the free
    variable's diagonal; fixed-fixed interactions accumulate in base_energy.
    """
    for index, bit in fixed.items():
        if not 0 <= index < q.dim:
            raise IndexError(f"fixed index {index} out of range")
        if bit not in (0, 1):
            raise ValueError(f"fixed value for {index} must be 0 or 1, got {bit}")
    free = sorted(set(range(q.dim)) - set(fixed))
    position = {old: new for new, old in enumerate(free)}
    builder = QuboBuilder(len(free))
    base_energy = 0
    for (i, j), value in q.coefficients.items():
        i_fixed, j_fixed = i in fixed, j in fixed
        if i_fixed and j_fixed:
            base_energy += value * fixed[i] * fixed[j]
        elif not i_fixed and not j_fixed:
            builder.add(position[i], position[j], value)
        else:
            fixed_idx, free_idx = (i, j) if i_fixed else (j, i)
            if fixed[fixed_idx]:
                builder.add(position[free_idx], position[free_idx], value)
    if q.labels is not None:
        labels = {new: q.labels[old] for old, new in position.items()}
    else:
        labels = {new: old for old, new in position.items()}
    return builder.build(labels=labels), base_energy


def terms(q: QuboProblem) -> list[tuple[int, int, float]]:
    """Sorted (i, j, coefficient) triples — the export/wire unit."""
    return [(i, j, value) for (i, j), value in sorted(q.coefficients.items())]


def to_dense(q: QuboProblem) -> np.ndarray:
    """Upper-triangular dense matrix with the offset left out."""
    dense = np.zeros((q.dim, q.dim))
    for (i, j), value in q.coefficients.items():
        dense[i, j] = value
    return dense
