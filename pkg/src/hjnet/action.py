"""Minimal action functionals on the base graph and its crystal.

A parametrized path traverses concatenated edges with nonnegative average
speeds (time = 1/speed on moving edges) and may pause in place on an edge at
cost -a_e per unit time.  The minimal total Lagrangian cost among such paths
linking x to y in total time T with rotation vector h is the discrete
minimal action.  Two computations are provided:

* ``min_action``: a dual lower bound.  For each level a >= a0 the cheapest
  lifted path from (x, 0) to (y, h) under the weights sigma(e, a) is found
  by label-correcting sweeps on the crystal restricted to a rotation box,
  and the bound  max_a [Psi_a(x,y,h) - a T]  is maximized on an adaptive
  geometric a-grid plus local refinement.  The clamp a >= a0 (instead of the
  per-path max of critical values) costs at most a T-independent additive
  constant, realized by bounded detours through the spanning tree; only
  T-normalized quantities enter the acceptance checks.

* ``min_action_exact_oracle``: exhaustive enumeration of path supports on
  tiny instances, each support evaluated with the pause-aware clamp (the
  largest critical value among edges incident to the visited vertices),
  which is the exact minimum over parametrizations including equilibrium
  pauses.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .base_graph import BaseGraph, Path, ThetaMap
from .crystal import CrystalVertex
from .edge_calculus import EdgeProfiles
from .errors import BudgetExceeded, Unreachable
from .mather import get_solver

logger = logging.getLogger(__name__)

DEFAULT_A_GRID = 64


@dataclass(frozen=True)
class ActionQuery:
    """Endpoints, horizon and caps for one minimal-action evaluation."""

    x: str
    y: str
    T: float
    h: tuple[int, ...]
    rotation_radius: int | None = None
    edge_cap: int | None = None
    a_grid: int = DEFAULT_A_GRID

    def radius(self) -> int:
        if self.rotation_radius is not None:
            return self.rotation_radius
        return int(max(abs(k) for k in self.h) if self.h else 0) + 2

    def cap(self, n_vertices: int) -> int:
        if self.edge_cap is not None:
            return self.edge_cap
        return 6 * (int(sum(abs(k) for k in self.h)) + n_vertices)


def _concave_max(f, lo: float, hi_hint: float = 1.0):
    """Max of a concave function on [lo, inf): doubling bracket + local search."""
    step = max(hi_hint, 1e-6)
    hi = lo + step
    while f(lo + step) > f(lo + 0.5 * step):
        step *= 2.0
        hi = lo + step
        if step > 1e14:
            raise BudgetExceeded("concave bracket expansion failed")
    res = minimize_scalar(lambda a: -f(a), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return max(float(-res.fun), float(f(lo)))


def path_action(profiles: EdgeProfiles, support: Path, T: float) -> float:
    """Minimal action of parametrized paths on a fixed nonempty support.

    Equals max over a >= max_i a_{e_i} of [sum_i sigma(e_i, a) - a T]; surplus
    time is implicitly paused on a support edge with the largest critical
    value.
    """
    if not support.edges:
        raise ValueError("support must be nonempty")
    if T <= 0:
        raise ValueError("T must be positive")
    a_hat = max(profiles[e].a_e for e in support.edges)

    def f(a):
        return sum(float(profiles[e].sigma(a)) for e in support.edges) - a * T

    return _concave_max(f, a_hat, hi_hint=max(1.0, (len(support.edges) / T) ** 2))


def _shift_slices(offset, n):
    """Source/destination slice pairs moving an array by an integer vector."""
    src, dst = [], []
    for t in offset:
        t = int(t)
        if t >= 0:
            src.append(slice(0, n - t))
            dst.append(slice(t, n))
        else:
            src.append(slice(-t, n))
            dst.append(slice(0, n + t))
    return tuple(src), tuple(dst)


class LiftedReach:
    """Cheapest walk weights sum sigma(e, a) on the crystal inside a box.

    Distances are stored as arrays of shape (n_a, n_vertices, (2r+1), ...,
    (2r+1)) with one box axis per homology dimension, batched over the level
    grid a_values.  ``reverse=True`` computes walks INTO the source instead
    (used by the rescaled-solution search, which minimizes over starting
    vertices).
    """

    def __init__(self, g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
                 source_vertex: str, source_h, center, radius: int,
                 a_values, cap: int, reverse: bool = False):
        self.g = g
        self.tm = tm
        self.radius = int(radius)
        self.center = np.asarray(center, dtype=int)
        self.a_values = np.atleast_1d(np.asarray(a_values, dtype=float))
        b = tm.betti
        n = 2 * self.radius + 1
        self.vindex = {v: i for i, v in enumerate(g.vertices)}
        shape = (self.a_values.size, len(g.vertices)) + (n,) * b
        self.dist = np.full(shape, np.inf)
        src_idx = tuple(np.asarray(source_h, dtype=int) - self.center + self.radius)
        if any(i < 0 or i >= n for i in src_idx):
            raise ValueError("source h outside the rotation box")
        self.dist[(slice(None), self.vindex[source_vertex]) + src_idx] = 0.0
        self.cap_bound = False
        self._sweep(profiles, cap, n, reverse)

    def _sweep(self, profiles, cap, n, reverse):
        sig = {e: profiles[e].sigma(self.a_values) for e in self.g.edges}
        w = {e: np.asarray(sig[e]).reshape((self.a_values.size,) + (1,) * self.tm.betti)
             for e in self.g.edges}
        steps = 0
        while steps < cap:
            improved = False
            for e in sorted(self.g.edges):
                if reverse:
                    # relax backward: walking edge e leads INTO the source side
                    u, v, off = self.g.terminus(e), self.g.origin(e), -self.tm.theta[e]
                else:
                    u, v, off = self.g.origin(e), self.g.terminus(e), self.tm.theta[e]
                src_sl, dst_sl = _shift_slices(off, n)
                cand = self.dist[(slice(None), self.vindex[u]) + src_sl] + w[e]
                target = self.dist[(slice(None), self.vindex[v]) + dst_sl]
                mask = cand < target - 1e-15
                if np.any(mask):
                    improved = True
                    np.minimum(target, cand, out=target)
            steps += 1
            if not improved:
                return
        self.cap_bound = True
        logger.warning("edge-count cap (%d) binding in lifted reach", cap)

    def at(self, vertex: str, h):
        """Distance profile over the a-grid for one crystal vertex."""
        idx = tuple(np.asarray(h, dtype=int) - self.center + self.radius)
        n = 2 * self.radius + 1
        if any(i < 0 or i >= n for i in idx):
            raise ValueError("queried h outside the rotation box")
        return self.dist[(slice(None), self.vindex[vertex]) + idx]


def _a_grid(a0: float, offset: float, n: int) -> np.ndarray:
    return np.concatenate([[a0], a0 + np.geomspace(1e-6, offset, n - 1)])


def min_action(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
               query: ActionQuery) -> float:
    """Dual minimal-action bound max_a [Psi_a(x, y, h) - a T]."""
    if query.T <= 0:
        raise ValueError("T must be positive")
    h = np.asarray(query.h, dtype=int)
    radius = query.radius()
    cap = query.cap(len(g.vertices))
    a0 = profiles.a0
    offset = max(1.0, 2.0 * ((np.abs(h).sum() + len(g.vertices)) / query.T) ** 2)

    def psi(a_values) -> np.ndarray:
        reach = LiftedReach(g, tm, profiles, query.x, np.zeros_like(h),
                            np.zeros_like(h), radius, a_values, cap)
        return reach.at(query.y, h)

    for _ in range(20):
        grid = _a_grid(a0, offset, query.a_grid)
        vals = psi(grid) - grid * query.T
        if not np.any(np.isfinite(vals)):
            raise Unreachable(
                f"no lifted path from ({query.x}, 0) to ({query.y}, {query.h}) "
                f"within radius {radius} and {cap} edges")
        i = int(np.argmax(vals))
        if i < query.a_grid - 1:
            break
        offset *= 2.0
    else:
        raise BudgetExceeded("a-grid upper end kept binding")

    best = float(vals[i])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda a: -(float(psi([a])[0]) - a * query.T),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-9})
        best = max(best, float(-res.fun))
    return best


def network_min_action(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
                       z1: CrystalVertex, z2: CrystalVertex, T: float,
                       **caps) -> float:
    """Minimal action between crystal vertices: only the h difference enters."""
    h = tuple(int(b) - int(a) for a, b in zip(z1.h, z2.h))
    return min_action(g, tm, profiles,
                      ActionQuery(z1.base, z2.base, T, h, **caps))


def _incident_critical(g: BaseGraph, profiles: EdgeProfiles, vertices) -> float:
    return max(profiles[e].a_e for v in vertices for e in g.star(v))


def min_action_exact_oracle(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
                            query: ActionQuery, path_budget: int = 500_000) -> float:
    """Exact minimal action on tiny instances by support enumeration.

    Each support is scored with the pause-aware clamp: surplus time pauses on
    the best edge incident to any visited vertex (equilibrium fluctuations
    reach it at zero cost within the support's own vertices).
    """
    if len(g.orientation) > 4:
        raise ValueError("exact oracle is intended for <= 4 positive edges")
    h = np.asarray(query.h, dtype=int)
    radius = query.radius()
    cap = query.cap(len(g.vertices))
    if cap > 12:
        raise ValueError("exact oracle is intended for edge caps <= 12")

    memo: dict[tuple, float] = {}  # value depends only on edge counts + clamp

    def support_value(edges: tuple[str, ...], visited: frozenset[str]) -> float:
        clamp = _incident_critical(g, profiles, visited)
        key = (clamp, tuple(sorted(edges)))
        if key in memo:
            return memo[key]
        if not edges:
            val = -clamp * query.T
        else:
            def f(a):
                return (sum(float(profiles[e].sigma(a)) for e in edges)
                        - a * query.T)

            val = _concave_max(f, clamp,
                               hi_hint=max(1.0, (len(edges) / query.T) ** 2))
        memo[key] = val
        return val

    best = np.inf
    count = 0
    stack = [(query.x, (), np.zeros_like(h), frozenset([query.x]))]
    while stack:
        v, edges, rot, visited = stack.pop()
        if v == query.y and np.array_equal(rot, h):
            best = min(best, support_value(edges, visited))
        if len(edges) == cap:
            continue
        remaining = cap - len(edges)
        for e in g.star(v):
            rot2 = rot + tm.theta[e]
            if np.max(np.abs(rot2), initial=0) > radius:
                continue
            if np.max(np.abs(h - rot2), initial=0) > remaining - 1:
                continue
            count += 1
            if count > path_budget:
                raise BudgetExceeded("support enumeration budget exhausted")
            stack.append((g.terminus(e), edges + (e,), rot2,
                          visited | {g.terminus(e)}))
    if not np.isfinite(best):
        raise Unreachable("no support reaches the requested endpoint within caps")
    return float(best)


@dataclass
class ScanRow:
    T: float
    h: tuple[int, ...]
    phi_over_T: float
    beta: float
    deviation: float


def asymptotics_scan(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
                     x: str, y: str, h_direction, T_list,
                     **caps) -> list[ScanRow]:
    """Deviations |Phi(x,y,T, floor(T dir))/T - beta(h/T)| along a T schedule."""
    solver = get_solver(g, tm, profiles)
    direction = np.asarray(h_direction, dtype=float)
    rows = []
    for T in T_list:
        h = tuple(int(k) for k in np.floor(T * direction))
        phi = min_action(g, tm, profiles, ActionQuery(x, y, float(T), h, **caps))
        bval = solver.beta(np.asarray(h, dtype=float) / T)
        rows.append(ScanRow(float(T), h, phi / T, bval, abs(phi / T - bval)))
    return rows
