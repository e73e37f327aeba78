# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import json
import os
import unittest
from fractions import Fraction

import numpy as np
import pytest
from ddt import data, ddt, unpack
from hypothesis import given, settings, strategies as st

from patrolbench.errors import (
    DisconnectedGraphError,
    DuplicateEdgeError,
    EmbeddingDimensionError,
    GraphFormatError,
    InvalidWeightError,
    PointNotOnGraphError,
    UnknownNodeError,
)
from patrolbench.graph import (
    GraphPoint,
    MonitorGraph,
    diameter,
    feasibility_bound,
    graph_from_dict,
    laplacian_gpe,
    load_graph,
    node_diameter,
    random_geometric_graph,
    save_graph,
    shortest_path,
    transient_threshold,
    tsp_tour,
)
from tests.helpers import get_long_edge, get_square, get_triangle, get_two_node, load_instance


@ddt
class TestConstruction(unittest.TestCase):
    def test_ids_sorted_naturally(self):
        graph = MonitorGraph([("10", 1), ("2", 1), ("1", 1)], [("1", "2", 1), ("2", "10", 1)])
        assert graph.ids == ("1", "2", "10")
        assert graph.index(10) == 2
        assert graph.node_id(0) == "1"

    def test_exact_weights_and_lengths(self):
        graph = MonitorGraph([("a", "3/2"), ("b", 0.5)], [("a", "b", "5/2")])
        assert graph.weights == (Fraction(3, 2), Fraction(1, 2))
        assert graph.length(0, 1) == Fraction(5, 2)
        assert graph.w_max == Fraction(3, 2)
        assert graph.w_min == Fraction(1, 2)

    @data(
        ([], [], GraphFormatError),
        ([("1", 1), ("1", 2)], [], GraphFormatError),
        ([("1", 0), ("2", 1)], [("1", "2", 1)], InvalidWeightError),
        ([("1", 1), ("2", 1)], [("1", "2", -1)], InvalidWeightError),
        ([("1", 1), ("2", 1)], [("1", "1", 1)], GraphFormatError),
        ([("1", 1), ("2", 1)], [("1", "2", 1), ("2", "1", 2)], DuplicateEdgeError),
        ([("1", 1), ("2", 1)], [("1", "3", 1)], UnknownNodeError),
        ([("1", 1), ("2", 1), ("3", 1)], [("1", "2", 1)], DisconnectedGraphError),
    )
    @unpack
    def test_rejects_invalid_graphs(self, nodes, edges, error):
        with pytest.raises(error):
            MonitorGraph(nodes, edges)

    def test_single_node(self):
        graph = load_instance("single_node.json")
        assert graph.num_nodes == 1
        assert graph.num_edges == 0
        assert diameter(graph) == 0
        assert tsp_tour(graph).length == 0


class TestGraphFiles:
    def test_round_trip_keeps_exact_values(self, tmp_path):
        graph = get_long_edge()
        path = os.path.join(str(tmp_path), "g.json")
        save_graph(graph, path)
        again = load_graph(path)
        assert again.ids == graph.ids
        assert again.weights == graph.weights
        assert again.edges == graph.edges

    def test_missing_file(self, tmp_path):
        with pytest.raises(GraphFormatError):
            load_graph(os.path.join(str(tmp_path), "missing.json"))

    def test_unknown_key(self):
        with pytest.raises(GraphFormatError):
            graph_from_dict({"nodes": [{"id": "1", "weight": 1}], "edges": [], "extra": 1})

    def test_malformed_entry(self, tmp_path):
        path = os.path.join(str(tmp_path), "bad.json")
        with open(path, "w") as f:
            json.dump({"nodes": [{"id": "1"}]}, f)
        with pytest.raises(GraphFormatError):
            load_graph(path)


class TestDistances:
    def test_triangle(self):
        graph = get_triangle()
        assert all(graph.dist[u][v] == (0 if u == v else 1) for u in range(3) for v in range(3))
        assert node_diameter(graph) == 1
        assert diameter(graph) == Fraction(3, 2)

    def test_long_edge(self):
        graph = get_long_edge()
        assert node_diameter(graph) == 6
        assert graph.diameter == Fraction(13, 2)

    def test_node_path_lexicographic_tie_break(self):
        graph = get_square()
        assert graph.node_path(0, 2) == (0, 1, 2)
        assert graph.node_path(2, 0) == (2, 1, 0)

    def test_shortest_path_between_edge_points(self):
        graph = get_square()
        a = GraphPoint.on_edge(0, 1, Fraction(1, 4), graph.length(0, 1))
        b = GraphPoint.on_edge(2, 3, Fraction(1, 4), graph.length(2, 3))
        distance, path = shortest_path(graph, a, b)
        assert distance == 2
        assert path[0] == a and path[-1] == b

    def test_shortest_path_on_one_edge(self):
        graph = get_two_node(4)
        a = GraphPoint.on_edge(0, 1, 1, graph.length(0, 1))
        b = GraphPoint.on_edge(1, 0, 1, graph.length(0, 1))
        distance, path = shortest_path(graph, a, b)
        assert distance == 2
        assert path == [a, b]

    def test_point_off_graph(self):
        graph = get_triangle()
        with pytest.raises(PointNotOnGraphError):
            GraphPoint.on_edge(0, 1, 2, graph.length(0, 1))
        with pytest.raises(PointNotOnGraphError):
            shortest_path(graph, GraphPoint(edge=(0, 1), offset=Fraction(1)), GraphPoint.at(2))

    def test_edge_points_collapse_to_nodes(self):
        assert GraphPoint.on_edge(3, 1, 0, Fraction(2)) == GraphPoint.at(3)
        assert GraphPoint.on_edge(3, 1, 2, Fraction(2)) == GraphPoint.at(1)
        assert GraphPoint.on_edge(3, 1, Fraction(1, 2), Fraction(2)) == GraphPoint(
            edge=(1, 3), offset=Fraction(3, 2)
        )


class TestTours:
    def test_triangle_tour(self):
        tour = tsp_tour(get_triangle())
        assert tour.length == 3
        assert tour.walk[0] == tour.walk[-1]
        assert sorted(set(tour.walk)) == [0, 1, 2]

    def test_long_edge_tour(self):
        graph = get_long_edge()
        assert graph.tsp.length == 13
        assert feasibility_bound(graph, 3) == Fraction(13, 3)

    def test_two_node_tour(self):
        assert tsp_tour(get_two_node()).length == 40

    def test_walk_uses_edges(self):
        graph = get_long_edge()
        walk = graph.tsp.walk
        assert all(graph.has_edge(a, b) for a, b in zip(walk, walk[1:]))

    def test_transient_threshold(self):
        assert transient_threshold(get_triangle(), 3) == Fraction(9, 2)


class TestSpectralEncoding:
    def test_dimension_limit(self):
        with pytest.raises(EmbeddingDimensionError):
            laplacian_gpe(get_triangle(), 3)
        with pytest.raises(EmbeddingDimensionError):
            laplacian_gpe(get_triangle(), 0)

    def test_shape_and_sign(self):
        table = laplacian_gpe(get_long_edge(), 2)
        assert table.vectors.shape == (4, 2)
        assert table.dim == 2
        for j in range(2):
            column = table.vectors[:, j]
            first = column[np.flatnonzero(np.abs(column) > 1e-12)[0]]
            assert first > 0

    def test_spectrum_of_normalized_laplacian(self):
        table = laplacian_gpe(get_triangle(), 2)
        assert np.allclose(table.spectrum, [0.0, 1.5, 1.5])


class TestRandomGeometric:
    def test_bundled_instance(self):
        graph = load_instance("random_geometric10.json")
        assert graph.num_nodes == 10

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=2, max_value=9), st.integers(min_value=0, max_value=10_000))
    def test_seeded_and_connected(self, n, seed):
        a = random_geometric_graph(n, 0.3, seed)
        b = random_geometric_graph(n, 0.3, seed)
        assert a.to_dict() == b.to_dict()
        assert all(l >= Fraction(1, 100) and l.denominator in (1, 2, 4, 5, 10, 20, 25, 50, 100) for _, _, l in a.edges)
