"""Parser, serializer, and distance-convention tests."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qroute.instances import (
    EdgeWeightKind,
    InstanceKind,
    ParseError,
    distance_matrix,
    parse_instance,
    serialize_instance,
    submatrix,
)

from .conftest import cvrp_instances, make_tsp, tsp_instances

MINIMAL_TSP = """\
NAME : tiny
TYPE : TSP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 4
3 0 4
EOF
"""

MINIMAL_CVRP = """\
NAME : tiny-k2
TYPE : CVRP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 10
NODE_COORD_SECTION
1 0 0
2 3 4
3 0 4
DEMAND_SECTION
1 0
2 7
3 5
DEPOT_SECTION
 1
 -1
EOF
"""


class TestParse:
    def test_burma14_header(self, burma14):
        assert burma14.dimension == 14
        assert burma14.kind is InstanceKind.TSP
        assert burma14.edge_weight_kind is EdgeWeightKind.GEO
        assert burma14.demands == {}
        assert burma14.depot_id is None

    def test_en22_header(self, en22):
        assert en22.dimension == 22
        assert en22.kind is InstanceKind.CVRP
        assert en22.capacity == 6000
        assert en22.depot_id == 1
        assert en22.min_vehicles == 4
        assert en22.demands[1] == 0
        assert sum(en22.demands.values()) == 22500

    def test_en33_header(self, en33):
        assert en33.dimension == 33
        assert en33.capacity == 8000
        assert en33.min_vehicles == 4
        assert sum(en33.demands.values()) == 29370

    def test_customer_ids_exclude_depot(self, en22):
        assert len(en22.customer_ids) == 21
        assert 1 not in en22.customer_ids

    def test_minimal_documents(self):
        tsp = parse_instance(MINIMAL_TSP)
        assert tsp.kind is InstanceKind.TSP and tsp.dimension == 3
        cvrp = parse_instance(MINIMAL_CVRP)
        assert cvrp.kind is InstanceKind.CVRP
        assert cvrp.min_vehicles == 2  # from the -k2 name suffix

    def test_missing_node_coord_section(self):
        with pytest.raises(ParseError, match="NODE_COORD_SECTION"):
            parse_instance("NAME : x\nTYPE : TSP\nEOF\n")

    @pytest.mark.parametrize(
        "removed, message",
        [
            ("DEMAND_SECTION", "DEMAND_SECTION"),
            ("CAPACITY : 10", "CAPACITY"),
            ("DEPOT_SECTION", "DEPOT_SECTION"),
        ],
    )
    def test_missing_cvrp_sections(self, removed, message):
        lines = [l for l in MINIMAL_CVRP.splitlines(keepends=True)]
        if removed.endswith("_SECTION"):
            start = next(i for i, l in enumerate(lines) if l.strip() == removed)
            end = start + 1
            while end < len(lines) and not (
                lines[end].strip().endswith("_SECTION") or lines[end].strip() == "EOF"
            ):
                end += 1
            del lines[start:end]
        else:
            lines = [l for l in lines if l.strip() != removed]
        with pytest.raises(ParseError, match=message):
            parse_instance("".join(lines))

    def test_unsupported_edge_weight_type(self):
        text = MINIMAL_TSP.replace("EUC_2D", "ATT")
        with pytest.raises(ParseError, match="EDGE_WEIGHT_TYPE"):
            parse_instance(text)

    def test_duplicate_node_id(self):
        text = MINIMAL_TSP.replace("2 3 4", "1 3 4")
        with pytest.raises(ParseError, match="duplicate node id"):
            parse_instance(text)

    def test_demand_exceeding_capacity(self):
        text = MINIMAL_CVRP.replace("2 7", "2 11")
        with pytest.raises(ParseError, match="exceeds capacity"):
            parse_instance(text)

    def test_nonzero_depot_demand(self):
        text = MINIMAL_CVRP.replace("1 0 0", "1 0 0").replace("DEMAND_SECTION\n1 0", "DEMAND_SECTION\n1 3")
        with pytest.raises(ParseError, match="depot demand"):
            parse_instance(text)

    def test_noncontiguous_ids(self):
        text = MINIMAL_TSP.replace("3 0 4", "5 0 4")
        with pytest.raises(ParseError, match="contiguous"):
            parse_instance(text)

    def test_error_carries_line_number(self):
        try:
            parse_instance(MINIMAL_TSP.replace("2 3 4", "1 3 4"))
        except ParseError as exc:
            assert exc.line_no == 7
            assert "line 7" in str(exc)
        else:
            pytest.fail("expected ParseError")

    def test_dimension_mismatch(self):
        text = MINIMAL_TSP.replace("DIMENSION : 3", "DIMENSION : 4")
        with pytest.raises(ParseError, match="DIMENSION"):
            parse_instance(text)


class TestDistanceMatrix:
    def test_three_four_five(self):
        instance = parse_instance(MINIMAL_TSP)
        D = distance_matrix(instance)
        assert D[0, 1] == 5
        assert D[1, 2] == 3
        assert D[0, 2] == 4

    def test_coincident_points(self):
        instance = make_tsp([(1, 1), (1, 1), (4, 5)])
        D = distance_matrix(instance)
        assert D[0, 1] == 0

    def test_rounding_is_nearest_integer(self):
        # distance sqrt(2) = 1.414... rounds down; sqrt(8) = 2.828... rounds up
        instance = make_tsp([(0, 0), (1, 1), (3, 3)])
        D = distance_matrix(instance)
        assert D[0, 1] == 1
        assert D[1, 2] == 3
        assert D[0, 2] == 4

    def test_geo_matrix_is_symmetric_integer(self, burma14):
        D = distance_matrix(burma14)
        assert D.entries.dtype == np.int64
        assert (D.entries == D.entries.T).all()
        assert (np.diag(D.entries) == 0).all()
        assert (D.entries[~np.eye(D.n, dtype=bool)] > 0).all()

    @settings(max_examples=60, deadline=None)
    @given(tsp_instances(max_nodes=10))
    def test_matrix_invariants_fuzzed(self, instance):
        D = distance_matrix(instance)
        assert (D.entries == D.entries.T).all()
        assert (np.diag(D.entries) == 0).all()
        assert (D.entries >= 0).all()

    def test_submatrix_preserves_entries(self, en22):
        D = distance_matrix(en22)
        sub = submatrix(D, [1, 5, 9])
        assert sub.n == 3
        assert sub[0, 1] == D[0, 4]
        assert sub[1, 2] == D[4, 8]

    def test_entries_read_only(self, burma14):
        D = distance_matrix(burma14)
        with pytest.raises(ValueError):
            D.entries[0, 1] = 99


class TestRoundTrip:
    @pytest.mark.parametrize(
        "name",
        ["burma14.tsp", "ulysses16.tsp", "ulysses22.tsp", "E-n22-k4.vrp", "E-n33-k4.vrp"],
    )
    def test_bundled_instances(self, name):
        from .conftest import load_instance

        instance = load_instance(name)
        assert parse_instance(serialize_instance(instance)) == instance

    @settings(max_examples=60, deadline=None)
    @given(cvrp_instances())
    def test_random_cvrp(self, instance):
        assert parse_instance(serialize_instance(instance)) == instance

    @settings(max_examples=40, deadline=None)
    @given(tsp_instances())
    def test_random_tsp(self, instance):
        assert parse_instance(serialize_instance(instance)) == instance
