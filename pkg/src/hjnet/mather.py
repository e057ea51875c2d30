"""Mather's alpha/beta functions on the base graph.

alpha coincides with the effective Hamiltonian.  For batched evaluation the
solver exploits the circuit characterization: alpha(p) is the largest root,
over directed simple circuits xi, of

    S_xi(a) = <p, theta(xi)>        with  S_xi(a) = sum_{e in xi} sigma(e, a),

clipped from below at a0 (each S_xi is strictly increasing, so the root is
found by inverse interpolation on a shared table, then polished by exact
root finding).  This agrees with the sign-bisection route of
``cell_problem.effective_hamiltonian``; the test suite pins the two routes
together.

beta is the Fenchel conjugate of alpha, computed by adaptive grid refinement
of the concave objective <p, h> - alpha(p) with automatic box expansion.
An independent oracle realizes beta directly as the minimal action of closed
measures: atomic measures on a finite speed grid turn the problem into a
linear program over edge/speed masses with conservation and rotation
constraints, solved by HiGHS and refined around the active speeds.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, linprog

from .base_graph import BaseGraph, ThetaMap, rotation_vector
from .cell_problem import enumerate_circuits
from .edge_calculus import EdgeProfiles
from .errors import BoxExpansionLimit, ConvergenceFailure

DEFAULT_SEARCH_BOX = 4.0
_MAX_BOX_EXPANSIONS = 40
_ALPHA_TABLE_SIZE = 12000


@dataclass
class ClosedFlow:
    """Per-directed-edge time fractions and fluxes of a closed measure."""

    time_fraction: dict[str, float]
    flux: dict[str, float]

    def mass(self) -> float:
        return sum(self.time_fraction.values())

    def rotation(self, tm: ThetaMap) -> np.ndarray:
        out = np.zeros(tm.betti)
        for e, f in self.flux.items():
            out = out + f * tm.theta[e]
        return out

    def conservation_residual(self, g: BaseGraph) -> float:
        net = {v: 0.0 for v in g.vertices}
        for e, f in self.flux.items():
            net[g.origin(e)] -= f
            net[g.terminus(e)] += f
        return max(abs(x) for x in net.values())


class MatherSolver:
    """Cached alpha/beta machinery for one (graph, theta, profiles) triple."""

    def __init__(self, g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles):
        self.g = g
        self.tm = tm
        self.profiles = profiles
        self.a0 = profiles.a0
        self.circuits = enumerate_circuits(g)
        self.circuit_theta = np.array(
            [rotation_vector(c, tm) for c in self.circuits], dtype=float)
        self._edge_list = sorted(g.edges)
        self._circuit_edge_count = np.array(
            [[c.edges.count(e) for e in self._edge_list] for c in self.circuits],
            dtype=float)
        self._table_lock = threading.Lock()
        self._tables = self._build_tables(self.a0 + 4.0)

    # ----- alpha -----

    def _build_tables(self, a_hi: float):
        span = a_hi - self.a0
        a = np.concatenate([[self.a0],
                            self.a0 + np.geomspace(max(1e-9, span * 1e-7), span,
                                                   _ALPHA_TABLE_SIZE)])
        sig = np.stack([self.profiles[e].sigma(a) for e in self._edge_list])
        return a, self._circuit_edge_count @ sig  # (n_a,), (n_circuits, n_a)

    def _covering_tables(self, r: np.ndarray):
        """A consistent (a_vals, S) snapshot bracketing every requested level."""
        a_vals, S = self._tables
        while np.any(r > S[:, -1][:, None] if r.ndim > 1 else r > S[:, -1]):
            with self._table_lock:
                a_vals, S = self._tables
                if not np.any(r > S[:, -1][:, None] if r.ndim > 1
                              else r > S[:, -1]):
                    break
                top = a_vals[-1]
                if top - self.a0 > 1e12:
                    raise ConvergenceFailure("circuit level tables grew unboundedly")
                self._tables = self._build_tables(self.a0 + 2 * (top - self.a0))
                a_vals, S = self._tables
        return a_vals, S

    def _circuit_sum(self, ci: int, a: float) -> float:
        counts = self._circuit_edge_count[ci]
        return float(sum(counts[j] * self.profiles[e].sigma(a)
                         for j, e in enumerate(self._edge_list) if counts[j]))

    def alpha_batch(self, P: np.ndarray) -> np.ndarray:
        """Interpolated effective Hamiltonian at each row of P (shape (m, b))."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if not self.circuits:
            return np.full(P.shape[0], self.a0)
        r = P @ self.circuit_theta.T  # (m, n_circuits)
        a_vals, S = self._covering_tables(r.T)
        out = np.full(P.shape[0], self.a0)
        for ci in range(len(self.circuits)):
            a_req = np.interp(r[:, ci], S[ci], a_vals)
            np.maximum(out, a_req, out=out)
        return out

    def alpha(self, p, polish: bool = True) -> float:
        """Effective Hamiltonian at a single p, exact up to root-finding."""
        p = np.asarray(p, dtype=float)
        if not self.circuits:
            return self.a0
        r = self.circuit_theta @ p
        a_vals, S = self._covering_tables(r)
        cand = np.full(len(self.circuits), self.a0)
        for ci in range(len(self.circuits)):
            cand[ci] = max(self.a0, float(np.interp(r[ci], S[ci], a_vals)))
        best = float(cand.max())
        if not polish:
            return best
        val = self.a0
        for ci in np.nonzero(cand >= best - 1e-3)[0]:
            if self._circuit_sum(ci, self.a0) >= r[ci]:
                continue
            hi = a_vals[-1]
            while self._circuit_sum(ci, hi) < r[ci]:
                hi = self.a0 + 2 * (hi - self.a0)
            root = brentq(lambda a: self._circuit_sum(ci, a) - r[ci],
                          self.a0, hi, xtol=1e-11)
            val = max(val, float(root))
        return val

    # ----- beta by conjugation -----

    def _refine_max(self, h: np.ndarray, center: np.ndarray, halfwidth: float,
                    levels: int, pts: int = 9):
        """Adaptive grid maximization of <p,h> - alpha(p); returns (p*, value)."""
        b = h.size
        best_p, best_val = center.copy(), -np.inf
        hw = halfwidth
        for _ in range(levels):
            axes = [np.linspace(center[i] - hw, center[i] + hw, pts) for i in range(b)]
            mesh = np.meshgrid(*axes, indexing="ij") if b else []
            P = (np.stack([m.ravel() for m in mesh], axis=1)
                 if b else np.zeros((1, 0)))
            vals = P @ h - self.alpha_batch(P)
            i = int(np.argmax(vals))
            if vals[i] > best_val:
                best_val = float(vals[i])
                best_p = P[i]
            center = P[i]
            hw /= 2.0
        return best_p, best_val

    def beta(self, h, search_box: float = DEFAULT_SEARCH_BOX,
             polish: bool = True, levels: int = 24,
             max_expansions: int = _MAX_BOX_EXPANSIONS) -> float:
        """sup over p of <p, h> - alpha(p), with automatic box expansion."""
        h = np.asarray(h, dtype=float)
        if h.size == 0:
            return -self.alpha(h)
        if search_box <= 0:
            raise ValueError("search_box must be positive")
        hw = float(search_box)
        for _ in range(max_expansions + 1):
            p_star, val = self._refine_max(h, np.zeros(h.size), hw, levels)
            if np.max(np.abs(p_star)) < hw * (1 - 1e-9):
                if polish:
                    val = float(p_star @ h - self.alpha(p_star))
                return val
            hw *= 2.0
        raise BoxExpansionLimit(
            f"conjugation maximizer still on the boundary at box {hw}")

    # ----- beta by closed-flow linear programming -----

    def _lagrangian_grid(self, speeds: np.ndarray) -> np.ndarray:
        """L(e, q) on a speed grid for every directed edge, batched over a."""
        a = self._tables[0]
        out = np.empty((len(self._edge_list), speeds.size))
        for j, e in enumerate(self._edge_list):
            prof = self.profiles[e]
            sig = prof.sigma(a)
            vals = speeds[:, None] * sig[None, :] - a[None, :]
            out[j] = vals.max(axis=1)
            out[j, speeds == 0.0] = -prof.a_e
        return out

    def _flow_lp(self, h: np.ndarray, speeds: np.ndarray):
        n_e, n_q = len(self._edge_list), speeds.size
        cost = self._lagrangian_grid(speeds).ravel()
        vindex = {v: i for i, v in enumerate(self.g.vertices)}
        n_v, b = len(self.g.vertices), self.tm.betti
        rows = 1 + n_v + b
        A = np.zeros((rows, n_e * n_q))
        rhs = np.zeros(rows)
        A[0] = 1.0
        rhs[0] = 1.0
        for j, e in enumerate(self._edge_list):
            sl = slice(j * n_q, (j + 1) * n_q)
            A[1 + vindex[self.g.origin(e)], sl] -= speeds
            A[1 + vindex[self.g.terminus(e)], sl] += speeds
            th = self.tm.theta[e]
            for k in range(b):
                if th[k]:
                    A[1 + n_v + k, sl] += th[k] * speeds
        rhs[1 + n_v:] = h
        res = linprog(cost, A_eq=A, b_eq=rhs, bounds=(0, None), method="highs")
        return res

    def flow_oracle(self, h, max_speed: float | None = None,
                    n_speeds: int = 201) -> tuple[float, ClosedFlow]:
        """Minimal action over closed flows with rotation vector h.

        Solves the atomic-measure relaxation on a speed grid (LP), expands
        the grid while the top speed is active, then refines once around the
        speeds the optimizer uses.
        """
        h = np.asarray(h, dtype=float)
        q_max = max_speed if max_speed is not None else 2.0 * (np.abs(h).sum() + 1.0)
        for _ in range(12):
            speeds = np.concatenate([[0.0], np.linspace(q_max / (n_speeds - 1),
                                                        q_max, n_speeds - 1)])
            res = self._flow_lp(h, speeds)
            if res.status == 2:  # infeasible: grid cannot carry the rotation
                q_max *= 2.0
                continue
            if not res.success:
                raise ConvergenceFailure(f"flow LP failed: {res.message}")
            w = res.x.reshape(len(self._edge_list), speeds.size)
            if w[:, -1].max() > 1e-9:
                q_max *= 2.0
                continue
            break
        else:
            raise ConvergenceFailure("speed grid expansion did not stabilize")

        # one refinement pass around the active speeds
        active = speeds[np.nonzero(w.sum(axis=0) > 1e-12)[0]]
        dq = speeds[1] - speeds[0]
        extra = [np.linspace(max(q - dq, 0.0), q + dq, 41) for q in active if q > 0]
        speeds2 = np.unique(np.concatenate([speeds] + extra))
        res2 = self._flow_lp(h, speeds2)
        if not res2.success:
            raise ConvergenceFailure(f"flow LP refinement failed: {res2.message}")
        w2 = res2.x.reshape(len(self._edge_list), speeds2.size)
        lam = {e: float(w2[j].sum()) for j, e in enumerate(self._edge_list)}
        flux = {e: float(w2[j] @ speeds2) for j, e in enumerate(self._edge_list)}
        return float(res2.fun), ClosedFlow(lam, flux)


_solver_memo: dict[tuple[int, int, int], tuple] = {}
_solver_lock = threading.Lock()


def get_solver(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles) -> MatherSolver:
    """Shared solver per (graph, theta, profiles); inputs are kept alive."""
    key = (id(g), id(tm), id(profiles))
    with _solver_lock:
        if key not in _solver_memo:
            _solver_memo[key] = (MatherSolver(g, tm, profiles), g, tm, profiles)
        return _solver_memo[key][0]


def beta(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles, h,
         search_box: float = DEFAULT_SEARCH_BOX) -> float:
    """Mather's beta function: minimal average action at rotation vector h."""
    return get_solver(g, tm, profiles).beta(h, search_box=search_box)


def beta_flow_oracle(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles, h) -> float:
    """Independent beta computation through the closed-flow relaxation."""
    if len(g.orientation) > 8:
        raise ValueError("flow oracle is intended for graphs with <= 8 positive edges")
    value, _ = get_solver(g, tm, profiles).flow_oracle(h)
    return value


def conjugate_pair_check(g: BaseGraph, tm: ThetaMap, profiles: EdgeProfiles,
                         p, h, tol: float = 1e-5) -> bool:
    """Whether <p,h> = alpha(p) + beta(h) within tol."""
    solver = get_solver(g, tm, profiles)
    p = np.asarray(p, dtype=float)
    h = np.asarray(h, dtype=float)
    gap = float(p @ h) - solver.alpha(p) - solver.beta(h)
    return abs(gap) <= tol
