# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Weighted monitoring graphs: the metric space the robots patrol.

Node ids are strings in files and are mapped to dense integer indices in natural
order (numeric ids by value, then the remaining ids alphabetically). Every
structure below works on indices; ``MonitorGraph.node_id`` maps back.
"""

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import networkx
import numpy as np

import patrolbench
from .errors import (
    DisconnectedGraphError,
    DuplicateEdgeError,
    EmbeddingDimensionError,
    GraphFormatError,
    InvalidWeightError,
    PointNotOnGraphError,
    UnknownNodeError,
)
from .rational import rational_to_str, to_rational


def _natural_key(node_id: str) -> Tuple[int, int, str]:
    if node_id.isdigit():
        return (0, int(node_id), "")
    return (1, 0, node_id)


@dataclass(frozen=True)
class GraphPoint:
    r"""A point of the geometric realization: a node, or an interior point of an edge.

    Edge points are normalized so that ``edge[0] < edge[1]`` and ``offset`` is measured
    from ``edge[0]``.
    """

    node: Optional[int] = None
    edge: Optional[Tuple[int, int]] = None
    offset: Fraction = Fraction(0)

    @classmethod
    def at(cls, node: int) -> "GraphPoint":
        return cls(node=node)

    @classmethod
    def on_edge(cls, u: int, v: int, offset: Fraction, length: Fraction) -> "GraphPoint":
        r"""Point at distance ``offset`` from ``u`` along edge (u, v) of the given length.
        Offsets 0 and ``length`` collapse onto the endpoints."""
        offset = to_rational(offset)
        if offset < 0 or offset > length:
            raise PointNotOnGraphError(
                "offset {} outside edge ({}, {}) of length {}".format(offset, u, v, length)
            )
        if offset == 0:
            return cls.at(u)
        if offset == length:
            return cls.at(v)
        if u > v:
            u, v, offset = v, u, length - offset
        return cls(edge=(u, v), offset=offset)

    @property
    def is_node(self) -> bool:
        return self.node is not None


@dataclass(frozen=True)
class GpeTable:
    r"""Spectral positional encoding, one row per node index."""

    vectors: np.ndarray
    eigenvalues: np.ndarray
    spectrum: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def embed(self, node: int) -> np.ndarray:
        return self.vectors[node]


@dataclass(frozen=True)
class TspTour:
    order: Tuple[int, ...]
    walk: Tuple[int, ...]
    length: Fraction


class MonitorGraph:
    r"""Finite, connected, undirected graph with positive node weights and edge lengths.

    Instances are immutable after construction and safe to share across rollout workers.

    Args:
        nodes (Sequence[Tuple[str, Any]]):
            ``(node_id, weight)`` pairs. Weights are parsed as exact rationals.
        edges (Sequence[Tuple[str, str, Any]]):
            ``(u, v, length)`` triples. Lengths are parsed as exact rationals.
    Raises:
        GraphFormatError: Empty graph, duplicate node id or self-loop.
        UnknownNodeError: Edge endpoint that is not a node.
        InvalidWeightError: Nonpositive weight or length.
        DuplicateEdgeError: Two edges on the same unordered pair.
        DisconnectedGraphError: The graph is not connected.
    """

    def __init__(
        self,
        nodes: Sequence[Tuple[str, Any]],
        edges: Sequence[Tuple[str, str, Any]],
    ):
        if len(nodes) == 0:
            raise GraphFormatError("a monitoring graph needs at least one node")

        weights_by_id: Dict[str, Fraction] = {}
        for node_id, weight in nodes:
            node_id = str(node_id)
            if node_id in weights_by_id:
                raise GraphFormatError("duplicate node id {}".format(node_id))
            try:
                weight = to_rational(weight)
            except ValueError as e:
                raise GraphFormatError(str(e)) from e
            if weight <= 0:
                raise InvalidWeightError(
                    "node {} has nonpositive weight {}".format(node_id, weight)
                )
            weights_by_id[node_id] = weight

        self.ids: Tuple[str, ...] = tuple(sorted(weights_by_id, key=_natural_key))
        self._index: Dict[str, int] = {n: i for i, n in enumerate(self.ids)}
        self.weights: Tuple[Fraction, ...] = tuple(weights_by_id[n] for n in self.ids)

        self._lengths: Dict[Tuple[int, int], Fraction] = {}
        for u_id, v_id, length in edges:
            u, v = self.index(str(u_id)), self.index(str(v_id))
            if u == v:
                raise GraphFormatError("self-loop on node {}".format(u_id))
            try:
                length = to_rational(length)
            except ValueError as e:
                raise GraphFormatError(str(e)) from e
            if length <= 0:
                raise InvalidWeightError(
                    "edge ({}, {}) has nonpositive length {}".format(u_id, v_id, length)
                )
            if (u, v) in self._lengths:
                raise DuplicateEdgeError("duplicate edge ({}, {})".format(u_id, v_id))
            self._lengths[(u, v)] = length
            self._lengths[(v, u)] = length

        self._nx = networkx.Graph()
        self._nx.add_nodes_from(range(len(self.ids)))
        self._nx.add_weighted_edges_from(
            ((u, v, l) for (u, v), l in self._lengths.items() if u < v), weight="length"
        )
        if not networkx.is_connected(self._nx):
            raise DisconnectedGraphError(
                "graph with {} nodes has {} components".format(
                    len(self.ids), networkx.number_connected_components(self._nx)
                )
            )

        self.neighbors: Tuple[Tuple[int, ...], ...] = tuple(
            tuple(sorted(self._nx.neighbors(v))) for v in range(len(self.ids))
        )
        lengths = dict(networkx.all_pairs_dijkstra_path_length(self._nx, weight="length"))
        self.dist: Tuple[Tuple[Fraction, ...], ...] = tuple(
            tuple(Fraction(lengths[u][v]) for v in range(len(self.ids)))
            for u in range(len(self.ids))
        )
        self._paths: Dict[Tuple[int, int], Tuple[int, ...]] = {}

    def __repr__(self) -> str:
        return "MonitorGraph(nodes={}, edges={})".format(
            len(self.ids), self.num_edges
        )

    @property
    def num_nodes(self) -> int:
        return len(self.ids)

    @property
    def num_edges(self) -> int:
        return len(self._lengths) // 2

    @property
    def edges(self) -> List[Tuple[int, int, Fraction]]:
        return sorted((u, v, l) for (u, v), l in self._lengths.items() if u < v)

    @property
    def w_max(self) -> Fraction:
        return max(self.weights)

    @property
    def w_min(self) -> Fraction:
        return min(self.weights)

    def index(self, node_id: Any) -> int:
        try:
            return self._index[str(node_id)]
        except KeyError:
            raise UnknownNodeError("unknown node {}".format(node_id)) from None

    def node_id(self, index: int) -> str:
        return self.ids[index]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._lengths

    def length(self, u: int, v: int) -> Fraction:
        try:
            return self._lengths[(u, v)]
        except KeyError:
            raise PointNotOnGraphError(
                "no edge between {} and {}".format(self.ids[u], self.ids[v])
            ) from None

    def node_path(self, a: int, b: int) -> Tuple[int, ...]:
        r"""Shortest node sequence from ``a`` to ``b``; among equal-length paths the
        lexicographically smallest index sequence."""
        key = (a, b)
        cached = self._paths.get(key)
        if cached is not None:
            return cached
        path = [a]
        u = a
        while u != b:
            remaining = self.dist[u][b]
            u = next(
                v
                for v in self.neighbors[u]
                if self._lengths[(u, v)] + self.dist[v][b] == remaining
            )
            path.append(u)
        self._paths[key] = tuple(path)
        return self._paths[key]

    def check_point(self, p: GraphPoint):
        if p.is_node:
            if not 0 <= p.node < self.num_nodes:
                raise PointNotOnGraphError("node index {} out of range".format(p.node))
            return
        if p.edge is None or p.edge not in self._lengths:
            raise PointNotOnGraphError("edge {} is not in the graph".format(p.edge))
        if not 0 < p.offset < self._lengths[p.edge]:
            raise PointNotOnGraphError(
                "offset {} not strictly inside edge {}".format(p.offset, p.edge)
            )

    def _anchors(self, p: GraphPoint) -> List[Tuple[int, Fraction]]:
        if p.is_node:
            return [(p.node, Fraction(0))]
        u, v = p.edge
        return [(u, p.offset), (v, self._lengths[p.edge] - p.offset)]

    @cached_property
    def diameter(self) -> Fraction:
        return diameter(self)

    @cached_property
    def tsp(self) -> TspTour:
        return tsp_tour(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nodes": [
                {"id": n, "weight": rational_to_str(w)}
                for n, w in zip(self.ids, self.weights)
            ],
            "edges": [
                {"u": self.ids[u], "v": self.ids[v], "length": rational_to_str(l)}
                for u, v, l in self.edges
            ],
        }


def graph_from_dict(data: Dict[str, Any]) -> MonitorGraph:
    r"""Builds a graph from the JSON object form ``{"nodes": [...], "edges": [...]}``."""
    if not isinstance(data, dict) or "nodes" not in data:
        raise GraphFormatError("graph object needs a 'nodes' list")
    unknown = set(data) - {"nodes", "edges", "name", "source"}
    if unknown:
        raise GraphFormatError("unknown graph keys: {}".format(sorted(unknown)))
    try:
        nodes = [(n["id"], n["weight"]) for n in data["nodes"]]
        edges = [(e["u"], e["v"], e["length"]) for e in data.get("edges", [])]
    except (KeyError, TypeError) as e:
        raise GraphFormatError("malformed graph entry: {}".format(e)) from e
    return MonitorGraph(nodes, edges)


def load_graph(path: str) -> MonitorGraph:
    r"""Loads and validates a graph file.

    Args:
        path (str):
            JSON file ``{"nodes": [{"id", "weight"}], "edges": [{"u", "v", "length"}]}``.
            Weights and lengths may be numbers or decimal strings.
    Returns:
        graph (MonitorGraph):
            Validated graph.
    """
    path = os.path.expanduser(path)
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise GraphFormatError("graph file not found: {}".format(path)) from e
    except json.JSONDecodeError as e:
        raise GraphFormatError("cannot parse {}: {}".format(path, e)) from e
    graph = graph_from_dict(data)
    patrolbench.logging.debug(
        "load_graph", "{} nodes={} edges={}".format(path, graph.num_nodes, graph.num_edges)
    )
    return graph


def save_graph(graph: MonitorGraph, path: str):
    with open(os.path.expanduser(path), "w") as f:
        json.dump(graph.to_dict(), f, indent=2)
        f.write("\n")


def shortest_path(
    graph: MonitorGraph, a: GraphPoint, b: GraphPoint
) -> Tuple[Fraction, List[GraphPoint]]:
    r"""Path-metric distance between two points and the canonical route between them.

    Among routes of equal length the one whose sequence of traversed nodes is
    lexicographically smallest wins; a direct run along a shared edge has the empty
    sequence and therefore wins any tie.

    Returns:
        distance (Fraction):
            ``d(a, b)``.
        path (List[GraphPoint]):
            Waypoints from ``a`` to ``b`` inclusive.
    """
    graph.check_point(a)
    graph.check_point(b)
    if a == b:
        return Fraction(0), [a]

    candidates: List[Tuple[Fraction, Tuple[int, ...]]] = []
    if not a.is_node and a.edge == b.edge:
        candidates.append((abs(a.offset - b.offset), ()))
    for x, cost_a in graph._anchors(a):
        for y, cost_b in graph._anchors(b):
            candidates.append(
                (cost_a + graph.dist[x][y] + cost_b, graph.node_path(x, y))
            )
    distance, nodes = min(candidates)

    waypoints = [a]
    for n in nodes:
        point = GraphPoint.at(n)
        if point != waypoints[-1]:
            waypoints.append(point)
    if waypoints[-1] != b:
        waypoints.append(b)
    return distance, waypoints


def node_diameter(graph: MonitorGraph) -> Fraction:
    return max(max(row) for row in graph.dist)


# Affine form cx*x + cy*y + c0 on the offset rectangle of an edge pair.
_Affine = Tuple[Fraction, Fraction, Fraction]


def _evaluate(forms: Sequence[_Affine], x: Fraction, y: Fraction) -> Fraction:
    return min(cx * x + cy * y + c0 for cx, cy, c0 in forms)


def _edge_pair_max(
    graph: MonitorGraph, e1: Tuple[int, int, Fraction], e2: Tuple[int, int, Fraction]
) -> Fraction:
    a, b, l1 = e1
    c, d, l2 = e2
    dist = graph.dist
    one = Fraction(1)
    forms: List[_Affine] = [
        (one, one, dist[a][c]),
        (one, -one, dist[a][d] + l2),
        (-one, one, l1 + dist[b][c]),
        (-one, -one, l1 + dist[b][d] + l2),
    ]
    # The distance is a concave piecewise-linear function of the two offsets, so its
    # maximum sits on a vertex of the arrangement of piece boundaries and rectangle sides.
    points = [(x, y) for x in (Fraction(0), l1) for y in (Fraction(0), l2)]
    for (cx1, cy1, k1), (cx2, cy2, k2) in combinations(forms, 2):
        if cy1 != cy2:
            for x in (Fraction(0), l1):
                y = ((cx2 - cx1) * x + k2 - k1) / (cy1 - cy2)
                if 0 <= y <= l2:
                    points.append((x, y))
        if cx1 != cx2:
            for y in (Fraction(0), l2):
                x = ((cy2 - cy1) * y + k2 - k1) / (cx1 - cx2)
                if 0 <= x <= l1:
                    points.append((x, y))
    for f1, f2, f3 in combinations(forms, 3):
        # f1 = f2 and f1 = f3
        a11, a12, r1 = f1[0] - f2[0], f1[1] - f2[1], f2[2] - f1[2]
        a21, a22, r2 = f1[0] - f3[0], f1[1] - f3[1], f3[2] - f1[2]
        det = a11 * a22 - a12 * a21
        if det == 0:
            continue
        x = (r1 * a22 - a12 * r2) / det
        y = (a11 * r2 - r1 * a21) / det
        if 0 <= x <= l1 and 0 <= y <= l2:
            points.append((x, y))
    return max(_evaluate(forms, x, y) for x, y in points)


def diameter(graph: MonitorGraph) -> Fraction:
    r"""Diameter of the geometric realization |G|, edge-interior points included.

    For a pair of distinct edges the maximum is found exactly by vertex enumeration;
    two points on the same edge (a, b) of length l are at most ``(d(a, b) + l) / 2`` apart.
    """
    edges = graph.edges
    if not edges:
        return Fraction(0)
    best = node_diameter(graph)
    for u, v, l in edges:
        best = max(best, (graph.dist[u][v] + l) / 2)
    for e1, e2 in combinations(edges, 2):
        best = max(best, _edge_pair_max(graph, e1, e2))
    return best


def _tour_length(graph: MonitorGraph, order: Sequence[int]) -> Fraction:
    if len(order) < 2:
        return Fraction(0)
    return sum(
        (graph.dist[order[i]][order[(i + 1) % len(order)]] for i in range(len(order))),
        Fraction(0),
    )


def tsp_tour(graph: MonitorGraph, nodes: Optional[Sequence[int]] = None) -> TspTour:
    r"""Closed tour through ``nodes`` (all nodes by default) in the shortest-path metric.

    Nearest neighbour from the smallest node index, then first-improvement 2-opt until
    no move shortens the tour. Ties are broken by node index, so the result is
    deterministic.

    Returns:
        tour (TspTour):
            ``order`` in the metric closure, ``walk`` expanded onto graph edges and
            closed (first node repeated at the end), and the exact ``length``.
    """
    remaining = sorted(set(range(graph.num_nodes) if nodes is None else nodes))
    if not remaining:
        raise UnknownNodeError("a tour needs at least one node")
    dist = graph.dist
    order = [remaining.pop(0)]
    while remaining:
        current = order[-1]
        nxt = min(remaining, key=lambda v: (dist[current][v], v))
        remaining.remove(nxt)
        order.append(nxt)

    m = len(order)
    improved = m > 3
    while improved:
        improved = False
        for i in range(m - 1):
            for j in range(i + 2, m):
                if i == 0 and j == m - 1:
                    continue
                a, b = order[i], order[i + 1]
                c, d = order[j], order[(j + 1) % m]
                if dist[a][c] + dist[b][d] < dist[a][b] + dist[c][d]:
                    order[i + 1 : j + 1] = reversed(order[i + 1 : j + 1])
                    improved = True

    walk = [order[0]]
    for i in range(m if m > 1 else 0):
        walk.extend(graph.node_path(order[i], order[(i + 1) % m])[1:])
    return TspTour(order=tuple(order), walk=tuple(walk), length=_tour_length(graph, order))


def laplacian_gpe(graph: MonitorGraph, d_gpe: int) -> GpeTable:
    r"""Positional encoding from the symmetric normalized Laplacian ``I - D^-1/2 W D^-1/2``.

    ``W`` is the 0/1 adjacency matrix. The eigenvector of the smallest eigenvalue is
    dropped and the next ``d_gpe`` are kept; each column's first nonzero coordinate is
    made positive.
    """
    n = graph.num_nodes
    if d_gpe < 1 or d_gpe > n - 1:
        raise EmbeddingDimensionError(
            "d_gpe={} but a {}-node graph has {} non-trivial eigenvectors".format(
                d_gpe, n, n - 1
            )
        )
    adjacency = np.zeros((n, n), dtype=np.float64)
    for u, v, _ in graph.edges:
        adjacency[u, v] = adjacency[v, u] = 1.0
    inv_sqrt = 1.0 / np.sqrt(adjacency.sum(axis=1))
    laplacian = np.eye(n) - inv_sqrt[:, None] * adjacency * inv_sqrt[None, :]
    eigenvalues, eigenvectors = np.linalg.eigh(laplacian)

    vectors = eigenvectors[:, 1 : d_gpe + 1].copy()
    for j in range(vectors.shape[1]):
        nonzero = np.flatnonzero(np.abs(vectors[:, j]) > 1e-12)
        if nonzero.size and vectors[nonzero[0], j] < 0:
            vectors[:, j] = -vectors[:, j]
    return GpeTable(
        vectors=vectors,
        eigenvalues=eigenvalues[1 : d_gpe + 1].copy(),
        spectrum=eigenvalues,
    )


def feasibility_bound(graph: MonitorGraph, k: int) -> Fraction:
    r"""Worst weighted latency of ``k`` robots evenly spaced on the tour: ``w_max * len / k``."""
    if k < 1:
        raise ValueError("at least one robot is needed")
    return graph.w_max * graph.tsp.length / k


def transient_threshold(graph: MonitorGraph, value: Fraction) -> Fraction:
    r"""Tail start above which the optimum no longer depends on where the robots start."""
    return graph.diameter + Fraction(value) / graph.w_min


def random_geometric_graph(
    n: int, radius: float, seed: int, random_weights: bool = False
) -> MonitorGraph:
    r"""Seeded random geometric graph on the unit square.

    Lengths are Euclidean distances rounded to hundredths (at least 1/100). Components
    are joined through their closest node pair until the graph is connected.
    """
    rng = np.random.default_rng(seed)
    points = rng.random((n, 2))

    def length(i: int, j: int) -> Fraction:
        raw = float(np.linalg.norm(points[i] - points[j]))
        return max(Fraction(round(raw * 100), 100), Fraction(1, 100))

    helper = networkx.Graph()
    helper.add_nodes_from(range(n))
    for i, j in combinations(range(n), 2):
        if np.linalg.norm(points[i] - points[j]) <= radius:
            helper.add_edge(i, j)
    while not networkx.is_connected(helper):
        components = sorted(
            (sorted(c) for c in networkx.connected_components(helper)), key=lambda c: c[0]
        )
        base, other = components[0], [v for c in components[1:] for v in c]
        i, j = min(
            ((i, j) for i in base for j in other),
            key=lambda ij: (np.linalg.norm(points[ij[0]] - points[ij[1]]), ij),
        )
        helper.add_edge(i, j)

    weights = rng.integers(1, 4, size=n) if random_weights else np.ones(n, dtype=int)
    return MonitorGraph(
        [(str(i + 1), int(weights[i])) for i in range(n)],
        [(str(i + 1), str(j + 1), length(i, j)) for i, j in sorted(helper.edges)],
    )
