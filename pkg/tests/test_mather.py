import numpy as np
import pytest

from hjnet.edge_calculus import QuadraticEdgeModel, TrigPoly, build_profiles
from hjnet.errors import BoxExpansionLimit
from hjnet.mather import (MatherSolver, beta, beta_flow_oracle,
                          conjugate_pair_check, get_solver)


class TestBetaConjugation:
    def test_bouquet_closed_form(self, bouquet_free):
        g, tm, profs = bouquet_free
        assert beta(g, tm, profs, (1.0, 1.0)) == pytest.approx(2.0, abs=1e-6)
        assert beta(g, tm, profs, (4.0, 0.0)) == pytest.approx(8.0, abs=1e-6)
        rng = np.random.default_rng(2)
        for _ in range(10):
            h = rng.uniform(-2, 2, size=2)
            want = (abs(h[0]) + abs(h[1])) ** 2 / 2
            assert beta(g, tm, profs, h) == pytest.approx(want, abs=1e-5)

    def test_beta_zero_is_minus_a0(self, bouquet_free, honeycomb_cos):
        for g, tm, profs in (bouquet_free, honeycomb_cos):
            assert beta(g, tm, profs, np.zeros(2)) == pytest.approx(
                -profs.a0, abs=1e-8)

    def test_beta_convex(self, honeycomb_cos):
        g, tm, profs = honeycomb_cos
        solver = get_solver(g, tm, profs)
        rng = np.random.default_rng(14)
        for _ in range(10):
            h1, h2 = rng.uniform(-2, 2, size=(2, 2))
            mid = solver.beta((h1 + h2) / 2)
            assert mid <= (solver.beta(h1) + solver.beta(h2)) / 2 + 1e-6

    def test_beta_superlinear(self, bouquet_free):
        g, tm, profs = bouquet_free
        solver = get_solver(g, tm, profs)
        h = np.array([0.7, -0.4])
        ratios = [solver.beta(t * h) / t for t in (1, 2, 4, 8)]
        assert all(b > a for a, b in zip(ratios, ratios[1:]))

    def test_box_expansion_limit(self, bouquet_free):
        g, tm, profs = bouquet_free
        solver = get_solver(g, tm, profs)
        with pytest.raises(BoxExpansionLimit):
            solver.beta((4.0, 0.0), search_box=0.5, max_expansions=0)
        with pytest.raises(ValueError):
            solver.beta((1.0, 0.0), search_box=-1.0)


class TestFlowOracle:
    def test_bouquet_values(self, bouquet_free):
        g, tm, profs = bouquet_free
        assert beta_flow_oracle(g, tm, profs, (1.0, 0.0)) == pytest.approx(
            0.5, abs=1e-3)
        assert beta_flow_oracle(g, tm, profs, (0.0, 0.0)) == pytest.approx(
            0.0, abs=1e-6)

    def test_flow_is_closed(self, honeycomb_cos):
        g, tm, profs = honeycomb_cos
        solver = get_solver(g, tm, profs)
        val, flow = solver.flow_oracle((1.0, -1.0))
        assert flow.mass() == pytest.approx(1.0, abs=1e-8)
        assert flow.conservation_residual(g) < 1e-8
        assert np.allclose(flow.rotation(tm), (1.0, -1.0), atol=1e-8)

    def test_zero_rotation_pauses_on_critical_edge(self, honeycomb_cos):
        g, tm, profs = honeycomb_cos
        val, flow = get_solver(g, tm, profs).flow_oracle((0.0, 0.0))
        assert val == pytest.approx(-profs.a0, abs=1e-8)
        assert sum(flow.flux.values()) == pytest.approx(0.0, abs=1e-9)

    def test_agreement_with_conjugation(self, bouquet_free, honeycomb_cos):
        rng = np.random.default_rng(8)
        for g, tm, profs in (bouquet_free, honeycomb_cos):
            solver = get_solver(g, tm, profs)
            for _ in range(4):
                h = rng.uniform(-1.5, 1.5, size=2)
                assert solver.flow_oracle(h)[0] == pytest.approx(
                    solver.beta(h), abs=1e-3)

    def test_scaling_convexity(self, bouquet_free):
        g, tm, profs = bouquet_free
        solver = get_solver(g, tm, profs)
        v0 = solver.flow_oracle((0.0, 0.0))[0]
        v1 = solver.flow_oracle((1.0, 0.0))[0]
        v2 = solver.flow_oracle((2.0, 0.0))[0]
        assert v1 <= (v0 + v2) / 2 + 1e-6

    def test_rejects_large_graphs(self):
        spec = {"vertices": ["v"],
                "edges": [{"id": f"f{i}", "from": "v", "to": "v"}
                          for i in range(9)]}
        from hjnet import build_graph, spanning_tree, theta_map
        g = build_graph(spec)
        tm = theta_map(g, spanning_tree(g))
        profs = build_profiles(g, {e: QuadraticEdgeModel()
                                   for e in g.orientation})
        with pytest.raises(ValueError):
            beta_flow_oracle(g, tm, profs, (1.0,) * 9)


class TestConjugatePairs:
    def test_trivial_pair(self, bouquet_free):
        g, tm, profs = bouquet_free
        assert conjugate_pair_check(g, tm, profs, (0.0, 0.0), (0.0, 0.0))

    def test_bouquet_pairs(self, bouquet_free):
        g, tm, profs = bouquet_free
        assert conjugate_pair_check(g, tm, profs, (1.0, 0.0), (1.0, 0.0))
        assert not conjugate_pair_check(g, tm, profs, (1.0, 0.0), (0.0, 1.0))


def conjugate_of_beta(solver, p, box=12.0, levels=16):
    """Numerical biconjugation sup_h <p,h> - beta(h), refined on a grid."""
    p = np.asarray(p, dtype=float)
    center = np.zeros(p.size)
    hw = box
    best = -np.inf
    for _ in range(levels):
        axes = [np.linspace(center[i] - hw, center[i] + hw, 7)
                for i in range(p.size)]
        H = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.size)
        vals = np.array([H[j] @ p - solver.beta(H[j], polish=False, levels=16)
                         for j in range(len(H))])
        i = int(np.argmax(vals))
        best = max(best, float(vals[i]))
        center = H[i]
        hw /= 2.0
    return best


def test_duality_round_trip(bouquet_free, honeycomb_cos):
    rng = np.random.default_rng(77)
    for g, tm, profs in (bouquet_free, honeycomb_cos):
        solver = get_solver(g, tm, profs)
        for _ in range(2):
            p = rng.uniform(-1.5, 1.5, size=2)
            assert conjugate_of_beta(solver, p) == pytest.approx(
                solver.alpha(p), abs=1e-3)


def test_drifted_model_duality(honeycomb):
    """alpha/beta stay conjugate when reversal asymmetry is active."""
    g, tm = honeycomb
    profs = build_profiles(g, {
        "e0": QuadraticEdgeModel(drift=TrigPoly(const=0.4)),
        "e1": QuadraticEdgeModel(potential=TrigPoly(cos=(-0.3,))),
        "e2": QuadraticEdgeModel()})
    solver = MatherSolver(g, tm, profs)
    for h in [(1.0, 0.0), (-0.5, 0.8)]:
        assert solver.flow_oracle(h)[0] == pytest.approx(solver.beta(h), abs=1e-3)
