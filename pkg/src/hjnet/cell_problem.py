"""Stationary cell problems on the base graph and the effective Hamiltonian.

For a cohomology vector p and a level a >= a0, every directed edge carries
the weight  w(e) = sigma(e, a) - <p, theta(e)>.  The cell problem at level a
is solvable exactly when every cycle has nonnegative weight and some cycle
weight vanishes; since each edge weight is strictly increasing in a, the
critical level

    effective_hamiltonian(p) = max(a0, inf{a >= a0 : all cycle weights >= 0})

is found by sign bisection on the minimum cycle mean.  The minimum cycle
mean (Karp) is a finite stand-in for the infimum of cycle weights: both have
the same sign, and they agree on single-edge circuits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .base_graph import BaseGraph, Path, ThetaMap
from .edge_calculus import EdgeProfiles
from .errors import BudgetExceeded

DEFAULT_BISECTION_TOL = 1e-8


@dataclass
class CellWeights:
    """Edge weights sigma(e, a) - <p, theta(e)> for every directed edge."""

    p: np.ndarray
    a: float
    weights: dict[str, float]

    @classmethod
    def build(cls, g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles, p, a: float):
        p = np.asarray(p, dtype=float)
        w = {e: float(profiles[e].sigma(a)) - float(p @ tm.theta[e]) for e in g.edges}
        return cls(p, float(a), w)

    def of_path(self, path: Path) -> float:
        return sum(self.weights[e] for e in path.edges)


def min_cycle_weight(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
                     p, a: float) -> float:
    """Minimum cycle mean of the weights sigma(e,a) - <p, theta(e)>.

    Negative iff some cycle has negative total weight, zero iff the minimum
    cycle weight is exactly zero; this sign is the solvability certificate
    for the cell problem at level a.
    """
    p = np.asarray(p, dtype=float)
    vindex = {v: i for i, v in enumerate(g.vertices)}
    n = len(g.vertices)
    edges = [(vindex[g.origin(e)], vindex[g.terminus(e)],
              float(profiles[e].sigma(a)) - float(p @ tm.theta[e]))
             for e in sorted(g.edges)]
    # Karp: D[k, v] = min weight of a k-edge walk from the source to v
    D = np.full((n + 1, n), np.inf)
    D[0, 0] = 0.0
    for k in range(1, n + 1):
        row = D[k]
        prev = D[k - 1]
        for o, t, w in edges:
            cand = prev[o] + w
            if cand < row[t]:
                row[t] = cand
    best = np.inf
    for v in range(n):
        if not np.isfinite(D[n, v]):
            continue
        ks = np.arange(n)
        finite = np.isfinite(D[ks, v])
        vals = (D[n, v] - D[ks[finite], v]) / (n - ks[finite])
        best = min(best, float(vals.max()))
    return best


def effective_hamiltonian(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
                          p, tol: float = DEFAULT_BISECTION_TOL) -> float:
    """Critical level of the p-twisted cell problem (Mather's alpha at p)."""
    p = np.asarray(p, dtype=float)
    a0 = profiles.a0

    def f(a):
        return min_cycle_weight(g, tm, profiles, p, a)

    if f(a0) >= 0.0:
        return a0
    offset = 1.0
    while f(a0 + offset) < 0.0:
        offset *= 2.0
        if offset > 1e12:
            raise BudgetExceeded("cycle weights never became nonnegative")
    return float(brentq(f, a0, a0 + offset, xtol=tol))


def convexity_probe(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
                    p1, p2, tol: float = 1e-7) -> bool:
    """Midpoint convexity check of the effective Hamiltonian."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    mid = effective_hamiltonian(g, tm, profiles, (p1 + p2) / 2)
    v1 = effective_hamiltonian(g, tm, profiles, p1)
    v2 = effective_hamiltonian(g, tm, profiles, p2)
    return mid <= (v1 + v2) / 2 + tol


def enumerate_circuits(g: BaseGraph, budget: int = 200_000) -> list[Path]:
    """All directed simple circuits, one representative per cyclic class.

    A circuit repeats no vertex except its endpoints.  The representative
    starts at the smallest vertex it visits, so rotations are deduplicated
    while the two directions of a circuit remain distinct.
    """
    out: list[Path] = []
    for v0 in g.vertices:
        stack: list[tuple[str, tuple[str, ...], frozenset[str]]] = [
            (v0, (), frozenset([v0]))]
        while stack:
            v, path_edges, visited = stack.pop()
            for e in g.star(v):
                w = g.terminus(e)
                if w == v0:
                    out.append(Path(path_edges + (e,)))
                    if len(out) > budget:
                        raise BudgetExceeded("too many circuits to enumerate")
                elif w not in visited and w > v0:
                    stack.append((w, path_edges + (e,), visited | {w}))
    return out
