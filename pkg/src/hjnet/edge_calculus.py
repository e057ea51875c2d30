"""Per-edge numeric kernels.

Each positive edge of the base graph carries a Hamiltonian H_e(s, rho),
continuous in the arc parameter s and strictly convex and superlinear in the
momentum rho, with the reversal compatibility H_{-e}(s, rho) = H_e(1-s, -rho).
From the model we derive, per directed edge:

  a_e        critical value: max over s of the fiberwise minimum of H_e
  sigma(a)   integral over s of the largest momentum on the level set {H_e = a},
             defined for a >= a_e; strictly increasing, concave, sublinear
  cH(rho)    discrete Hamiltonian: the inverse of sigma, on [b_e, inf) with
             b_e = sigma(a_e)
  cL(lam)    discrete Lagrangian: Fenchel conjugate of cH on speeds lam >= 0,
             computable as max_{a >= a_e} (lam * sigma(a) - a)

Two model families are supported: quadratic-in-momentum with trigonometric
polynomial drift/potential (closed-form level sets), and tabulated samples
with piecewise-linear convex interpolation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq, minimize_scalar

from .base_graph import BaseGraph
from .errors import DomainError, LevelBelowMinimum, NonConvexModel

DEFAULT_QUAD_SAMPLES = 257
_CRIT_GRID = 2049


@dataclass(frozen=True)
class TrigPoly:
    """c0 + sum_k (cos_k cos(2 pi k s) + sin_k sin(2 pi k s))."""

    const: float = 0.0
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.full_like(s, self.const, dtype=float)
        for k, c in enumerate(self.cos, start=1):
            out += c * np.cos(2 * np.pi * k * s)
        for k, c in enumerate(self.sin, start=1):
            out += c * np.sin(2 * np.pi * k * s)
        return out

    @property
    def is_zero(self):
        return self.const == 0 and not any(self.cos) and not any(self.sin)


class QuadraticEdgeModel:
    """H(s, rho) = kappa rho^2 / 2 + drift(s) rho + potential(s), kappa > 0."""

    def __init__(self, kappa=1.0, drift: TrigPoly | None = None,
                 potential: TrigPoly | None = None):
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        self.kappa = float(kappa)
        self.drift = drift if drift is not None else TrigPoly()
        self.potential = potential if potential is not None else TrigPoly()

    def value(self, s, rho):
        s = np.asarray(s, dtype=float)
        rho = np.asarray(rho, dtype=float)
        return self.kappa * rho**2 / 2 + self.drift(s) * rho + self.potential(s)

    def fiber_min(self, s):
        """min over rho of H(s, rho), at rho = -drift/kappa."""
        return self.potential(s) - self.drift(s) ** 2 / (2 * self.kappa)

    def _discriminant(self, s, a):
        b = self.drift(s)
        disc = b**2 + 2 * self.kappa * (np.asarray(a, dtype=float) - self.potential(s))
        bad = disc < -1e-9 * max(1.0, float(np.max(np.abs(a))))
        if np.any(bad):
            raise LevelBelowMinimum("level a below the fiberwise minimum of H")
        return b, np.maximum(disc, 0.0)

    def sigma_plus(self, s, a):
        """Largest root of H(s, .) = a."""
        b, disc = self._discriminant(s, a)
        return (-b + np.sqrt(disc)) / self.kappa

    def sigma_minus(self, s, a):
        b, disc = self._discriminant(s, a)
        return (-b - np.sqrt(disc)) / self.kappa

    def reversed(self):
        return ReversedEdgeModel(self)


class TabulatedEdgeModel:
    """Sampled H on an (s, rho) grid, convex piecewise-linear in rho.

    Rows are blended linearly in s; beyond the rho grid the end-segment
    slopes extrapolate linearly, so the end slopes must point outward.
    """

    def __init__(self, s_grid, rho_grid, values):
        self.s_grid = np.asarray(s_grid, dtype=float)
        self.rho_grid = np.asarray(rho_grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (self.s_grid.size, self.rho_grid.size):
            raise ValueError("values must have shape (len(s_grid), len(rho_grid))")
        if self.s_grid[0] != 0.0 or self.s_grid[-1] != 1.0 or np.any(np.diff(self.s_grid) <= 0):
            raise ValueError("s_grid must increase from 0 to 1")
        if np.any(np.diff(self.rho_grid) <= 0):
            raise ValueError("rho_grid must be strictly increasing")
        scale = max(1.0, float(np.max(np.abs(self.values))))
        slopes = np.diff(self.values, axis=1) / np.diff(self.rho_grid)
        if np.any(np.diff(slopes, axis=1) < -1e-9 * scale):
            raise NonConvexModel("tabulated samples are not convex in rho")
        if np.any(slopes[:, -1] <= 0) or np.any(slopes[:, 0] >= 0):
            raise NonConvexModel("end slopes must point outward (coercivity in rho)")

    def _columns(self, s):
        """Linear-in-s blend of sample rows; shape (len(s), len(rho_grid))."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.clip(np.searchsorted(self.s_grid, s, side="right") - 1, 0,
                      self.s_grid.size - 2)
        w = (s - self.s_grid[idx]) / (self.s_grid[idx + 1] - self.s_grid[idx])
        return (1 - w)[:, None] * self.values[idx] + w[:, None] * self.values[idx + 1]

    def value(self, s, rho):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        rho = np.broadcast_to(np.asarray(rho, dtype=float), s.shape)
        cols = self._columns(s)
        j = np.clip(np.searchsorted(self.rho_grid, rho) - 1, 0, self.rho_grid.size - 2)
        r0 = self.rho_grid[j]
        slope = (np.take_along_axis(cols, (j + 1)[:, None], 1)[:, 0]
                 - np.take_along_axis(cols, j[:, None], 1)[:, 0]) / (self.rho_grid[j + 1] - r0)
        base = np.take_along_axis(cols, j[:, None], 1)[:, 0]
        return base + slope * (rho - r0)

    def fiber_min(self, s):
        return self._columns(s).min(axis=1)

    def _crossing(self, cols, a, right: bool):
        """Level crossing of each convex PL column at level a (scalar)."""
        mins = cols.min(axis=1)
        if np.any(a < mins - 1e-9 * max(1.0, abs(a))):
            raise LevelBelowMinimum("level a below the fiberwise minimum of H")
        n = self.rho_grid.size
        if not right:  # mirror to reuse the right-branch logic
            cols = cols[:, ::-1]
        grid = self.rho_grid if right else -self.rho_grid[::-1]
        le = cols <= a + 1e-15
        # rightmost sample with value <= a; guaranteed >= argmin
        j = n - 1 - np.argmax(le[:, ::-1], axis=1)
        j = np.where(le.any(axis=1), j, np.argmin(cols, axis=1))
        rows = np.arange(cols.shape[0])
        out = np.empty(cols.shape[0])
        at_end = j == n - 1
        # interior crossing between j and j+1
        ji = np.where(at_end, n - 2, j)
        c0 = cols[rows, ji]
        c1 = cols[rows, ji + 1]
        denom = np.where(c1 > c0, c1 - c0, 1.0)
        out = grid[ji] + np.clip((a - c0) / denom, 0.0, None) * (grid[ji + 1] - grid[ji])
        # extrapolate past the last sample with the end slope
        slope_end = (cols[:, -1] - cols[:, -2]) / (grid[-1] - grid[-2])
        extrap = grid[-1] + (a - cols[:, -1]) / slope_end
        out = np.where(at_end, extrap, out)
        return out if right else -out

    def sigma_plus(self, s, a):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        a_arr = np.asarray(a, dtype=float)
        if a_arr.ndim == 0:
            res = self._crossing(self._columns(s_arr), float(a_arr), right=True)
            return res if np.ndim(s) else res[0]
        return np.stack([self._crossing(self._columns(s_arr), float(av), right=True)
                         for av in a_arr.ravel()]).reshape(a_arr.shape + s_arr.shape)

    def sigma_minus(self, s, a):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        a_arr = np.asarray(a, dtype=float)
        if a_arr.ndim == 0:
            res = self._crossing(self._columns(s_arr), float(a_arr), right=False)
            return res if np.ndim(s) else res[0]
        return np.stack([self._crossing(self._columns(s_arr), float(av), right=False)
                         for av in a_arr.ravel()]).reshape(a_arr.shape + s_arr.shape)

    def reversed(self):
        return ReversedEdgeModel(self)


class ReversedEdgeModel:
    """View of the base model through the reversal law H(s,rho) -> H(1-s,-rho)."""

    def __init__(self, base):
        self.base = base

    def value(self, s, rho):
        return self.base.value(1.0 - np.asarray(s, dtype=float),
                               -np.asarray(rho, dtype=float))

    def fiber_min(self, s):
        return self.base.fiber_min(1.0 - np.asarray(s, dtype=float))

    def sigma_plus(self, s, a):
        return -self.base.sigma_minus(1.0 - np.asarray(s, dtype=float), a)

    def sigma_minus(self, s, a):
        return -self.base.sigma_plus(1.0 - np.asarray(s, dtype=float), a)

    def reversed(self):
        return self.base


def critical_value(model) -> float:
    """max over s in [0,1] of the fiberwise minimum of H."""
    s = np.linspace(0.0, 1.0, _CRIT_GRID)
    vals = np.asarray(model.fiber_min(s))
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, _CRIT_GRID - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -float(model.fiber_min(np.array([t]))[0]),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def sigma_plus(model, a: float, s: float) -> float:
    """Largest momentum on the level set {H(s, .) = a}."""
    return float(np.asarray(model.sigma_plus(np.array([s]), a))[0])


def sigma(model, a, n_samples: int = DEFAULT_QUAD_SAMPLES):
    """Composite-Simpson integral over s of sigma_plus at level a."""
    s = np.linspace(0.0, 1.0, n_samples)
    a_arr = np.asarray(a, dtype=float)
    if a_arr.ndim == 0:
        return float(simpson(np.asarray(model.sigma_plus(s, float(a_arr))), x=s))
    vals = np.asarray(model.sigma_plus(s[None, :], a_arr.reshape(-1, 1)))
    return simpson(vals, x=s, axis=-1).reshape(a_arr.shape)


class EdgeProfile:
    """Cached numeric kernels for one directed edge."""

    def __init__(self, edge_id: str, model, n_quad: int = DEFAULT_QUAD_SAMPLES):
        self.edge_id = edge_id
        self.model = model
        self.n_quad = n_quad
        self._s = np.linspace(0.0, 1.0, n_quad)
        self.a_e = critical_value(model)
        fm = np.asarray(model.fiber_min(np.linspace(0, 1, 513)))
        self.fiber_min_is_constant = bool(fm.max() - fm.min() <= 1e-9)
        self.b_e = self.sigma(self.a_e)

    def sigma(self, a):
        """sigma(e, a) for scalar or array a (a >= a_e)."""
        a_arr = np.asarray(a, dtype=float)
        if np.any(a_arr < self.a_e - 1e-9):
            raise LevelBelowMinimum(
                f"sigma({self.edge_id}) evaluated below the critical value {self.a_e}")
        a_clip = np.maximum(a_arr, self.a_e)
        if a_arr.ndim == 0:
            vals = np.asarray(self.model.sigma_plus(self._s, float(a_clip)))
            return float(simpson(vals, x=self._s))
        vals = np.asarray(self.model.sigma_plus(self._s[None, :], a_clip.reshape(-1, 1)))
        return simpson(vals, x=self._s, axis=-1).reshape(a_arr.shape)

    def hamiltonian(self, rho: float) -> float:
        """Inverse of sigma: the a with sigma(e, a) = rho, for rho >= b_e."""
        if rho < self.b_e - 1e-9:
            raise DomainError(
                f"discrete Hamiltonian of {self.edge_id} undefined below b_e={self.b_e}")
        if rho <= self.b_e:
            return self.a_e
        step, hi = 1.0, self.a_e + 1.0
        while self.sigma(hi) < rho:
            step *= 2.0
            hi = self.a_e + step
            if step > 1e12:
                raise DomainError(f"sigma({self.edge_id}) never reaches {rho}")
        return float(brentq(lambda a: self.sigma(a) - rho, self.a_e, hi, xtol=1e-12))

    def _lag_objective(self, lam: float, a):
        return lam * self.sigma(a) - np.asarray(a, dtype=float)

    def lagrangian(self, lam: float) -> float:
        """Fenchel conjugate of the discrete Hamiltonian at speed lam >= 0.

        Computed as max_{a >= a_e} (lam sigma(e,a) - a), which by the inverse
        relation between sigma and the discrete Hamiltonian is the same
        maximization as over momenta rho >= b_e.
        """
        if lam < 0:
            raise DomainError("speeds are nonnegative")
        if lam == 0:
            return -self.a_e
        # expand until the concave objective is decreasing at the right end
        step = max(1.0, lam**2)
        hi = self.a_e + step
        while (self._lag_objective(lam, hi)
               > self._lag_objective(lam, self.a_e + 0.5 * step)):
            step *= 2.0
            hi = self.a_e + step
            if step > 1e14:
                raise DomainError("Fenchel bracket expansion failed")
        res = minimize_scalar(lambda a: -self._lag_objective(lam, a),
                              bounds=(self.a_e, hi), method="bounded",
                              options={"xatol": 1e-9})
        return max(float(-res.fun), float(self._lag_objective(lam, self.a_e)))

    def action(self, T: float) -> float:
        """Minimal Lagrangian action to traverse the edge in time T."""
        if T <= 0:
            raise DomainError("traversal time must be positive")
        return T * self.lagrangian(1.0 / T)


def discrete_hamiltonian(profile: EdgeProfile, rho: float) -> float:
    return profile.hamiltonian(rho)


def discrete_lagrangian(profile: EdgeProfile, lam: float) -> float:
    return profile.lagrangian(lam)


def edge_action(profile: EdgeProfile, T: float) -> float:
    return profile.action(T)


@dataclass
class EdgeProfiles:
    """Profiles for every directed edge of a base graph."""

    graph: BaseGraph
    profiles: dict[str, EdgeProfile]
    a0: float = field(init=False)

    def __post_init__(self):
        self.a0 = max(p.a_e for p in self.profiles.values())

    def __getitem__(self, edge_id: str) -> EdgeProfile:
        return self.profiles[edge_id]

    def sigma(self, edge_id: str, a):
        return self.profiles[edge_id].sigma(a)

    def lagrangian(self, edge_id: str, lam: float) -> float:
        return self.profiles[edge_id].lagrangian(lam)


def build_profiles(g: BaseGraph, models: dict[str, object],
                   n_quad: int = DEFAULT_QUAD_SAMPLES) -> EdgeProfiles:
    """Profiles for all directed edges from models on the positive ones."""
    missing = [e for e in g.orientation if e not in models]
    if missing:
        raise ValueError(f"no Hamiltonian model for positive edges {missing}")
    profiles = {}
    for e in g.orientation:
        profiles[e] = EdgeProfile(e, models[e], n_quad=n_quad)
        profiles[g.reversed(e)] = EdgeProfile(g.reversed(e), models[e].reversed(),
                                              n_quad=n_quad)
    return EdgeProfiles(g, profiles)


def flux_limiter(g: BaseGraph, profiles: EdgeProfiles, z: str) -> float:
    """Vertex constant: min over edges incident to z of -a_e."""
    star = g.star(z)
    if not star:
        raise ValueError(f"vertex {z!r} has no incident edges")
    return min(-profiles[e].a_e for e in star)


def _trig_from_json(obj) -> TrigPoly:
    if obj is None:
        return TrigPoly()
    return TrigPoly(const=float(obj.get("const", 0.0)),
                    cos=tuple(obj.get("cos", ())),
                    sin=tuple(obj.get("sin", ())))


def parse_models(entries, g: BaseGraph) -> dict[str, object]:
    """Models from a list of per-positive-edge JSON objects."""
    models: dict[str, object] = {}
    for item in entries:
        eid = item["edge"]
        if eid not in g.edges or not g.edges[eid].is_positive:
            raise ValueError(f"hamiltonian spec names unknown positive edge {eid!r}")
        family = item.get("family", "quadratic")
        if family == "quadratic":
            models[eid] = QuadraticEdgeModel(
                kappa=float(item.get("kappa", 1.0)),
                drift=_trig_from_json(item.get("drift")),
                potential=_trig_from_json(item.get("potential")))
        elif family == "tabulated":
            models[eid] = TabulatedEdgeModel(item["s_grid"], item["rho_grid"],
                                             item["values"])
        else:
            raise ValueError(f"unknown Hamiltonian family {family!r}")
    return models


def load_hamiltonians(path: str, g: BaseGraph,
                      n_quad: int = DEFAULT_QUAD_SAMPLES) -> EdgeProfiles:
    with open(path) as fh:
        entries = json.load(fh)
    return build_profiles(g, parse_models(entries, g), n_quad=n_quad)
