"""QUBO container semantics: evaluation, accumulation, clamping."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qroute.qubo import (
    QuboBuilder,
    QuboProblem,
    add_term,
    clamp,
    evaluate,
    make_sample,
    terms,
    to_dense,
)


@st.composite
def random_qubos(draw, min_dim=1, max_dim=10, coeff=st.integers(-50, 50)):
    dim = draw(st.integers(min_dim, max_dim))
    builder = QuboBuilder(dim)
    n_terms = draw(st.integers(0, dim * (dim + 1) // 2))
    for _ in range(n_terms):
        i = draw(st.integers(0, dim - 1))
        j = draw(st.integers(0, dim - 1))
        builder.add(i, j, draw(coeff))
    builder.add_offset(draw(coeff))
    return builder.build()


def bits_for(q, draw_source):
    return draw_source(st.lists(st.integers(0, 1), min_size=q.dim, max_size=q.dim))


class TestEvaluate:
    def test_all_zero_bits(self):
        q = QuboBuilder(4).add(0, 1, 3).add(2, 2, -5).build()
        assert evaluate(q, [0, 0, 0, 0]) == 0

    def test_single_variable_diagonal(self):
        q = QuboBuilder(1).add(0, 0, -1).build()
        assert evaluate(q, [1]) == -1

    def test_length_mismatch(self):
        q = QuboBuilder(2).add(0, 1, 1).build()
        with pytest.raises(ValueError, match="expected 2 bits"):
            evaluate(q, [1])

    @settings(max_examples=100, deadline=None)
    @given(data=st.data(), q=random_qubos(max_dim=8))
    def test_matches_dense_matrix_product(self, data, q):
        bits = np.array(bits_for(q, data.draw), dtype=np.float64)
        dense = to_dense(q)
        assert evaluate(q, bits.astype(int)) == pytest.approx(bits @ dense @ bits)

    @settings(max_examples=60, deadline=None)
    @given(data=st.data(), q=random_qubos(max_dim=8))
    def test_permutation_consistency(self, data, q):
        perm = data.draw(st.permutations(range(q.dim)))
        bits = bits_for(q, data.draw)
        builder = QuboBuilder(q.dim)
        for (i, j), value in q.coefficients.items():
            builder.add(perm[i], perm[j], value)
        relabeled = builder.build()
        permuted_bits = [0] * q.dim
        for old, new in enumerate(perm):
            permuted_bits[new] = bits[old]
        assert evaluate(q, bits) == evaluate(relabeled, permuted_bits)

    def test_make_sample_total_energy(self):
        q = QuboBuilder(2).add(0, 0, 2).add_offset(7).build()
        sample = make_sample(q, [1, 0])
        assert sample.energy == 2
        assert sample.total_energy == 9


class TestAddTerm:
    def test_cancellation_removes_entry(self):
        q = QuboBuilder(2).build()
        q = add_term(q, 0, 1, 2)
        q = add_term(q, 0, 1, -2)
        assert (0, 1) not in q.coefficients

    def test_triangular_normalization(self):
        q = QuboBuilder(4).build()
        q = add_term(q, 3, 1, 5)
        q = add_term(q, 1, 3, 2)
        assert q.coefficients == {(1, 3): 7}

    def test_onehot_expansion_two_groups(self):
        # A * (1 - x0 - x1)^2 + A * (1 - x2 - x3)^2 with A = 10
        A = 10
        builder = QuboBuilder(4)
        for group in ((0, 1), (2, 3)):
            for i in group:
                builder.add(i, i, -A)
            builder.add(group[0], group[1], 2 * A)
            builder.add_offset(A)
        q = builder.build()
        assert dict(q.coefficients) == {(0, 0): -A, (1, 1): -A, (0, 1): 2 * A,
                                        (2, 2): -A, (3, 3): -A, (2, 3): 2 * A}
        assert q.offset == 2 * A
        # exact one-hots reach zero total energy, violations pay the penalty
        assert evaluate(q, [1, 0, 1, 0]) + q.offset == 0
        assert evaluate(q, [1, 1, 1, 0]) + q.offset == A
        assert evaluate(q, [0, 0, 1, 0]) + q.offset == A

    def test_out_of_range(self):
        q = QuboBuilder(2).build()
        with pytest.raises(IndexError):
            add_term(q, 0, 5, 1)


class TestValidation:
    def test_key_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            QuboProblem(2, {(0, 2): 1.0}).validate()

    def test_stored_zero_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            QuboProblem(2, {(0, 1): 0.0}).validate()

    def test_label_coverage(self):
        with pytest.raises(ValueError, match="labels"):
            QuboProblem(2, {}, labels={0: "a"}).validate()
        QuboProblem(2, {}, labels={0: "a", 1: "b"}).validate()

    def test_coefficients_immutable(self):
        q = QuboBuilder(2).add(0, 1, 1).build()
        with pytest.raises(TypeError):
            q.coefficients[(0, 1)] = 5


class TestClamp:
    def test_clamp_nothing_is_identity(self):
        q = QuboBuilder(3).add(0, 1, 2).add(2, 2, -3).add_offset(4).build()
        sub, base = clamp(q, {})
        assert base == 0
        assert sub.dim == 3
        assert dict(sub.coefficients) == dict(q.coefficients)

    def test_clamp_everything(self):
        q = QuboBuilder(3).add(0, 1, 2).add(2, 2, -3).build()
        sub, base = clamp(q, {0: 1, 1: 1, 2: 1})
        assert sub.dim == 0
        assert base == evaluate(q, [1, 1, 1]) == -1

    def test_single_free_variable_diagonal_is_flip_delta(self):
        q = QuboBuilder(3).add(0, 1, 4).add(1, 2, -7).add(1, 1, 2).build()
        fixed = {0: 1, 2: 1}
        sub, base = clamp(q, fixed)
        assert sub.dim == 1
        on = evaluate(q, [1, 1, 1])
        off = evaluate(q, [1, 0, 1])
        assert sub.coefficients[(0, 0)] == on - off
        assert base == off

    def test_sub_labels_point_back_to_parent(self):
        q = QuboBuilder(3).add(0, 2, 1).build()
        sub, _ = clamp(q, {1: 0})
        assert sub.labels == {0: 0, 1: 2}

    @settings(max_examples=150, deadline=None)
    @given(data=st.data(), q=random_qubos(min_dim=1, max_dim=10))
    def test_folding_exactness_fuzzed(self, data, q):
        indices = list(range(q.dim))
        fixed_set = data.draw(st.sets(st.sampled_from(indices), max_size=q.dim))
        fixed = {i: data.draw(st.integers(0, 1)) for i in sorted(fixed_set)}
        sub, base = clamp(q, fixed)
        free = sorted(set(indices) - set(fixed))
        y = data.draw(st.lists(st.integers(0, 1), min_size=len(free), max_size=len(free)))
        combined = [0] * q.dim
        for index, bit in fixed.items():
            combined[index] = bit
        for slot, index in enumerate(free):
            combined[index] = y[slot]
        # exact integer arithmetic: no tolerance needed
        assert evaluate(sub, y) + base + q.offset == evaluate(q, combined) + q.offset

    def test_invalid_fixed_index(self):
        q = QuboBuilder(2).build()
        with pytest.raises(IndexError):
            clamp(q, {5: 1})


class TestExport:
    def test_terms_sorted(self):
        q = QuboBuilder(3).add(2, 2, 1).add(0, 1, 2).add(0, 0, 3).build()
        assert terms(q) == [(0, 0, 3), (0, 1, 2), (2, 2, 1)]

    def test_dense_upper_triangular(self):
        q = QuboBuilder(3).add(1, 0, 5).build()
        dense = to_dense(q)
        assert dense[0, 1] == 5
        assert dense[1, 0] == 0
