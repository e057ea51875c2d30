"""Finite base graphs with edge involution, spanning trees and homology data.

A base graph is a finite connected multigraph where every edge comes in an
oriented pair (e, -e).  Only the positive half of each pair is declared; the
reversed edges are synthesized with the ``~`` suffix convention (edge ``e1``
has reverse ``e1~``).  A fixed spanning tree turns the cycle space into
integer coordinates: every positive non-tree edge closes one fundamental
circuit, and expressing incidence vectors in the basis of those circuits
yields the map ``theta`` used everywhere downstream (crystal construction,
cycle weights, rotation vectors).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DanglingEndpoint, DisconnectedGraph, DuplicateEdgeId

REVERSED_SUFFIX = "~"


def reversed_id(edge_id: str) -> str:
    """Identifier of the reversed edge (involution on id strings)."""
    if edge_id.endswith(REVERSED_SUFFIX):
        return edge_id[: -len(REVERSED_SUFFIX)]
    return edge_id + REVERSED_SUFFIX


@dataclass(frozen=True)
class OrientedEdge:
    id: str
    origin: str
    terminus: str
    reversed: str
    is_positive: bool


@dataclass(frozen=True)
class Path:
    """A finite sequence of concatenated directed edge ids."""

    edges: tuple[str, ...]

    def __len__(self):
        return len(self.edges)


class BaseGraph:
    """Finite connected graph with fixed-point-free edge involution."""

    def __init__(self, vertices, edges, orientation):
        self.vertices: tuple[str, ...] = tuple(sorted(vertices))
        self.edges: dict[str, OrientedEdge] = dict(edges)
        self.orientation: tuple[str, ...] = tuple(sorted(orientation))
        self._star: dict[str, tuple[str, ...]] = {}
        star: dict[str, list[str]] = {v: [] for v in self.vertices}
        for e in sorted(self.edges):
            star[self.edges[e].origin].append(e)
        self._star = {v: tuple(es) for v, es in star.items()}

    def edge(self, edge_id: str) -> OrientedEdge:
        return self.edges[edge_id]

    def origin(self, edge_id: str) -> str:
        return self.edges[edge_id].origin

    def terminus(self, edge_id: str) -> str:
        return self.edges[edge_id].terminus

    def reversed(self, edge_id: str) -> str:
        return self.edges[edge_id].reversed

    def star(self, vertex: str) -> tuple[str, ...]:
        """Directed edges with the given origin, in id order."""
        return self._star[vertex]

    def positive_id(self, edge_id: str) -> str:
        e = self.edges[edge_id]
        return edge_id if e.is_positive else e.reversed

    def is_valid_path(self, path: Path) -> bool:
        for a, b in zip(path.edges, path.edges[1:]):
            if self.terminus(a) != self.origin(b):
                return False
        return all(e in self.edges for e in path.edges)


def build_graph(spec: dict) -> BaseGraph:
    """Build a BaseGraph from ``{"vertices": [...], "edges": [{"id","from","to"}]}``.

    Reversed edges are implicit; connectivity is verified.
    """
    vertices = list(spec["vertices"])
    if len(set(vertices)) != len(vertices):
        raise DuplicateEdgeId("duplicate vertex id in spec")
    vset = set(vertices)
    edges: dict[str, OrientedEdge] = {}
    for item in spec.get("edges", []):
        eid, u, v = item["id"], item["from"], item["to"]
        rid = reversed_id(eid)
        if eid in edges or rid in edges or eid == rid:
            raise DuplicateEdgeId(f"edge id {eid!r} (or its reverse) already declared")
        if u not in vset or v not in vset:
            raise DanglingEndpoint(f"edge {eid!r} endpoint not in vertex list")
        edges[eid] = OrientedEdge(eid, u, v, rid, True)
        edges[rid] = OrientedEdge(rid, v, u, eid, False)
    g = BaseGraph(vertices, edges, [e for e, oe in edges.items() if oe.is_positive])
    _check_connected(g)
    return g


def load_graph(path: str) -> BaseGraph:
    with open(path) as fh:
        return build_graph(json.load(fh))


def _check_connected(g: BaseGraph):
    if not g.vertices:
        raise DisconnectedGraph("graph has no vertices")
    seen = {g.vertices[0]}
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for e in g.star(v):
            w = g.terminus(e)
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if len(seen) != len(g.vertices):
        missing = sorted(set(g.vertices) - seen)
        raise DisconnectedGraph(f"vertices unreachable from {g.vertices[0]!r}: {missing}")


def betti(g: BaseGraph) -> int:
    """Rank of the cycle space: |E0|/2 - |V0| + 1."""
    return len(g.orientation) - len(g.vertices) + 1


@dataclass(frozen=True)
class SpanningTree:
    root: str
    tree_edges: frozenset[str]  # closed under involution

    def contains(self, edge_id: str) -> bool:
        return edge_id in self.tree_edges


def spanning_tree(g: BaseGraph) -> SpanningTree:
    """Deterministic BFS tree from the smallest vertex id, edges tie-broken by id."""
    root = g.vertices[0]
    visited = {root}
    tree: set[str] = set()
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for e in g.star(v):
            w = g.terminus(e)
            if w not in visited:
                visited.add(w)
                tree.add(e)
                tree.add(g.reversed(e))
                queue.append(w)
    return SpanningTree(root, frozenset(tree))


@dataclass
class ThetaMap:
    """Integer cycle-space coordinates attached to every directed edge.

    ``theta[e]`` is a vector in Z^b: zero on tree edges, the j-th standard
    basis vector on the j-th positive non-tree edge, and odd under reversal.
    ``circuits[e]`` stores, for each basis edge, the fundamental circuit it
    closes through the tree (as a Path); its incidence vector is the basis
    element in the full edge-space coordinates.
    """

    tree: SpanningTree
    betti: int
    basis_edges: tuple[str, ...]
    theta: dict[str, np.ndarray]
    circuits: dict[str, Path] = field(default_factory=dict)

    def vec(self, edge_id: str) -> np.ndarray:
        return self.theta[edge_id]


def _tree_path(g: BaseGraph, t: SpanningTree, start: str, goal: str) -> Path:
    """Unique simple path inside the tree from start to goal."""
    if start == goal:
        return Path(())
    prev: dict[str, str] = {}
    queue = deque([start])
    seen = {start}
    while queue:
        v = queue.popleft()
        for e in g.star(v):
            if not t.contains(e):
                continue
            w = g.terminus(e)
            if w not in seen:
                seen.add(w)
                prev[w] = e
                if w == goal:
                    queue.clear()
                    break
                queue.append(w)
    edges = []
    v = goal
    while v != start:
        e = prev[v]
        edges.append(e)
        v = g.origin(e)
    return Path(tuple(reversed(edges)))


def theta_map(g: BaseGraph, t: SpanningTree) -> ThetaMap:
    basis = tuple(e for e in g.orientation if not t.contains(e))
    b = len(basis)
    theta = {}
    for e in g.edges:
        theta[e] = np.zeros(b, dtype=int)
    for j, e in enumerate(basis):
        vec = np.zeros(b, dtype=int)
        vec[j] = 1
        theta[e] = vec
        theta[g.reversed(e)] = -vec
    circuits = {}
    for e in basis:
        back = _tree_path(g, t, g.terminus(e), g.origin(e))
        circuits[e] = Path((e,) + back.edges)
    return ThetaMap(t, b, basis, theta, circuits)


def incidence_vector(p: Path, g: BaseGraph) -> np.ndarray:
    """Signed pass counts over the orientation: (#e passes) - (#(-e) passes)."""
    index = {e: i for i, e in enumerate(g.orientation)}
    out = np.zeros(len(g.orientation), dtype=int)
    for e in p.edges:
        oe = g.edges[e]
        if oe.is_positive:
            out[index[e]] += 1
        else:
            out[index[oe.reversed]] -= 1
    return out


def rotation_vector(p: Path, tm: ThetaMap) -> np.ndarray:
    """theta applied to the path's chain, in the fundamental-circuit basis."""
    out = np.zeros(tm.betti, dtype=int)
    for e in p.edges:
        out += tm.theta[e]
    return out
