"""The maximal topological crystal V0 x Z^b, generated on demand.

The crystal is never materialized: vertices are pairs (base vertex, h) with
h in Z^b, and the neighborhood of a vertex is produced from the base graph
and the theta map.  Moving along edge e updates h by theta(e); reversal of
the lifted edge (e, h) is (-e, h + theta(e)).  Breadth-first searches run on
this implicit graph under a node budget.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .base_graph import BaseGraph, Path, ThetaMap
from .errors import BudgetExceeded

DEFAULT_NODE_CAP = 10**6


def _t(arr) -> tuple[int, ...]:
    return tuple(int(x) for x in arr)


@dataclass(frozen=True)
class CrystalVertex:
    base: str
    h: tuple[int, ...]


@dataclass(frozen=True)
class CrystalEdge:
    base_edge: str
    h: tuple[int, ...]


@dataclass(frozen=True)
class LiftedPath:
    start: CrystalVertex
    edges: tuple[CrystalEdge, ...]


class Crystal:
    """Implicit view of the maximal crystal over (graph, theta map)."""

    def __init__(self, g: BaseGraph, tm: ThetaMap):
        self.g = g
        self.tm = tm
        self.b = tm.betti

    def origin(self, ce: CrystalEdge) -> CrystalVertex:
        return CrystalVertex(self.g.origin(ce.base_edge), ce.h)

    def terminus(self, ce: CrystalEdge) -> CrystalVertex:
        h = _t(np.asarray(ce.h) + self.tm.theta[ce.base_edge])
        return CrystalVertex(self.g.terminus(ce.base_edge), h)

    def reversed(self, ce: CrystalEdge) -> CrystalEdge:
        h = _t(np.asarray(ce.h) + self.tm.theta[ce.base_edge])
        return CrystalEdge(self.g.reversed(ce.base_edge), h)

    def neighbors(self, cv: CrystalVertex):
        h = np.asarray(cv.h)
        for e in self.g.star(cv.base):
            yield CrystalVertex(self.g.terminus(e), _t(h + self.tm.theta[e]))

    def lift_path(self, p0: Path, h, origin: str | None = None) -> LiftedPath:
        """The unique lift of p0 starting at (origin(p0), h).

        An empty path needs an explicit anchor vertex.
        """
        h = np.asarray(h, dtype=int)
        if not p0.edges:
            if origin is None:
                raise ValueError("cannot lift an empty path without an anchor vertex")
            return LiftedPath(CrystalVertex(origin, _t(h)), ())
        start = CrystalVertex(self.g.origin(p0.edges[0]), _t(h))
        edges = []
        cur = h.copy()
        for e in p0.edges:
            edges.append(CrystalEdge(e, _t(cur)))
            cur = cur + self.tm.theta[e]
        return LiftedPath(start, tuple(edges))

    def lift_terminus(self, p0: Path, h) -> CrystalVertex:
        """Terminus of the lift: (terminus(p0), h + theta([p0]))."""
        h = np.asarray(h, dtype=int)
        if not p0.edges:
            raise ValueError("empty path has no terminus without an anchor vertex")
        total = h + sum(self.tm.theta[e] for e in p0.edges)
        return CrystalVertex(self.g.terminus(p0.edges[-1]), _t(total))

    def graph_distance(self, a: CrystalVertex, b: CrystalVertex,
                       node_cap: int = DEFAULT_NODE_CAP) -> int:
        """Minimal number of crystal edges linking a to b (BFS)."""
        if a == b:
            return 0
        dist = {a: 0}
        queue = deque([a])
        while queue:
            v = queue.popleft()
            d = dist[v] + 1
            for w in self.neighbors(v):
                if w in dist:
                    continue
                if w == b:
                    return d
                dist[w] = d
                if len(dist) > node_cap:
                    raise BudgetExceeded(
                        f"BFS ball exceeded {node_cap} vertices before reaching {b}")
                queue.append(w)
        raise BudgetExceeded(f"{b} unreachable from {a}")  # cannot happen: connected


def lift_path(g: BaseGraph, tm: ThetaMap, p0: Path, h,
              origin: str | None = None) -> LiftedPath:
    return Crystal(g, tm).lift_path(p0, h, origin=origin)


def project(lp: LiftedPath) -> Path:
    """Forget the Z^b components."""
    return Path(tuple(ce.base_edge for ce in lp.edges))


def graph_distance(g: BaseGraph, tm: ThetaMap, a: CrystalVertex, b: CrystalVertex,
                   node_cap: int = DEFAULT_NODE_CAP) -> int:
    return Crystal(g, tm).graph_distance(a, b, node_cap=node_cap)


def metric_invariance_check(g: BaseGraph, tm: ThetaMap, x0: str, h, h_bar,
                            node_cap: int = DEFAULT_NODE_CAP) -> bool:
    """Distances between fibers over x0 depend only on the h difference."""
    c = Crystal(g, tm)
    h = np.asarray(h, dtype=int)
    h_bar = np.asarray(h_bar, dtype=int)
    d1 = c.graph_distance(CrystalVertex(x0, _t(h)), CrystalVertex(x0, _t(h_bar)),
                          node_cap=node_cap)
    zero = _t(np.zeros(tm.betti, dtype=int))
    d2 = c.graph_distance(CrystalVertex(x0, zero), CrystalVertex(x0, _t(h_bar - h)),
                          node_cap=node_cap)
    return d1 == d2


@dataclass
class StableNormEstimate:
    """Rescaled-distance estimate of the stable norm along a lattice direction.

    ``upper_sequence`` is the subadditive sequence d(0, 2^k h)/2^k, which
    decreases toward the norm; ``euclidean_lower`` is the a-priori lower
    bound |h|.  No extrapolation is attempted.
    """

    h: tuple[int, ...]
    n_max: int
    estimate: float
    upper_sequence: list[float]
    euclidean_lower: float


def stable_norm_estimate(g: BaseGraph, tm: ThetaMap, h, n_max: int,
                         base_vertex: str | None = None,
                         node_cap: int = DEFAULT_NODE_CAP) -> StableNormEstimate:
    """Estimate lim_n d(0, n h)/n from below-n_max rescaled distances."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    h = np.asarray(h, dtype=int)
    x0 = base_vertex if base_vertex is not None else g.vertices[0]
    c = Crystal(g, tm)
    zero = CrystalVertex(x0, _t(np.zeros(tm.betti, dtype=int)))
    if not h.any():
        return StableNormEstimate(_t(h), n_max, 0.0, [0.0], 0.0)

    def rescaled(n):
        return c.graph_distance(zero, CrystalVertex(x0, _t(n * h)), node_cap=node_cap) / n

    seq = []
    k = 0
    while 2**k <= n_max:
        seq.append(rescaled(2**k))
        k += 1
    return StableNormEstimate(_t(h), n_max, rescaled(n_max), seq,
                              float(np.linalg.norm(h)))
