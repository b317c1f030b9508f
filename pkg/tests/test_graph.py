import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipolar_formation.errors import BadAngle, GraphError, InconsistentTriangle
from bipolar_formation.graph import (DesiredFormation, FormationGraph, henneberg_extend,
                                     leader_pair, validate_desired, validate_graph)
from bipolar_formation.presets import (SIX_AGENT_EDGES, random_formation, six_agent_desired, six_agent_graph)

LITERAL_SIX_AGENT_EDGES = ((2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (5, 2), (5, 4), (6, 3), (6, 5))
D = 1.875


class TestValidateGraph:
    def test_six_agent_graph_ok(self):
        rep = validate_graph(six_agent_graph())
        assert rep.ok, rep.violations
        assert len(SIX_AGENT_EDGES) == 2 * 6 - 3

    def test_literal_edge_set_fails_triangulation(self):
        # (6, 5) makes 5 and 3 the neighbours of 6, but 5 does not sense 3
        rep = validate_graph(FormationGraph(6, LITERAL_SIX_AGENT_EDGES))
        assert not rep.ok
        assert any("triangulation" in v and "6" in v for v in rep.violations)

    def test_leader_pair_ok(self):
        assert validate_graph(FormationGraph(2, ((2, 1),))).ok

    def test_missing_edge(self):
        rep = validate_graph(FormationGraph(3, ((2, 1), (3, 1))))
        assert any("out(3)=1≠2" in v for v in rep.violations)

    @pytest.mark.parametrize("edges, fragment", [
        (((2, 1), (1, 3), (3, 2)), "i < j"),
        (((2, 1), (1, 2)), "both directions"),
        (((2, 1), (3, 1), (3, 2), (2, 3)), "both directions"),
    ])
    def test_bad_edges(self, edges, fragment):
        rep = validate_graph(FormationGraph(3, edges))
        assert not rep.ok

    def test_report_raises(self):
        with pytest.raises(GraphError):
            validate_graph(FormationGraph(3, ((2, 1), (3, 1)))).raise_if_failed()

    def test_construction_order_places_neighbours_first(self):
        g = six_agent_graph()
        order = g.construction_order()
        for k, (i, j) in g.follower_neighbors.items():
            assert order.index(i) < order.index(k) and order.index(j) < order.index(k)


class TestValidateDesired:
    def test_six_agent_shape_ok(self):
        rep = validate_desired(six_agent_graph(), six_agent_desired())
        assert rep.ok, rep.violations
        d = six_agent_desired()
        assert set(d.d_star.values()) == {D}
        assert all(r == 0.0 for r in d.r_star.values())

    def test_law_of_cosines_violation(self):
        g = FormationGraph(3, ((2, 1), (3, 1), (3, 2)))
        d = DesiredFormation({(2, 1): 2.0, (3, 1): 1.0, (3, 2): 1.0}, {3: math.pi / 3}, {3: 0.0})
        rep = validate_desired(g, d)
        assert any("law of cosines" in v for v in rep.violations)

    def test_ratio_mismatch(self):
        g = FormationGraph(3, ((2, 1), (3, 1), (3, 2)))
        d = DesiredFormation({(2, 1): 1.0, (3, 1): 1.0, (3, 2): 1.0}, {3: math.pi / 3}, {3: 0.1})
        assert any("ratio mismatch" in v for v in validate_desired(g, d).violations)

    def test_collinear_target_warns(self):
        g = FormationGraph(3, ((2, 1), (3, 1), (3, 2)))
        d = DesiredFormation({(2, 1): 2.0, (3, 1): 1.0, (3, 2): 1.0}, {3: math.pi}, {3: 0.0})
        rep = validate_desired(g, d)
        assert rep.ok and rep.warnings

    def test_from_distances_matches_from_triangles(self):
        g = six_agent_graph()
        chir = {3: 1, 4: -1, 5: -1, 6: 1}
        d = DesiredFormation.from_distances(g, {e: D for e in g.edges}, chir)
        ref = six_agent_desired()
        for k in g.followers:
            assert d.alpha_star[k] == pytest.approx(ref.alpha_star[k], abs=1e-12)


class TestHennebergExtend:
    def test_builds_agent_four(self):
        g = FormationGraph(3, ((2, 1), (3, 1), (3, 2)))
        d = DesiredFormation.from_triangles(g, D, {3: (D, D, math.pi / 3)})
        g4, d4 = henneberg_extend(g, d, 2, 3, D, D, 5 * math.pi / 3)
        assert g4.n == 4 and (4, 2) in g4.edges and (4, 3) in g4.edges
        assert d4.alpha_star[4] == pytest.approx(six_agent_desired().alpha_star[4])
        assert validate_graph(g4).ok and validate_desired(g4, d4).ok

    def test_equal_sides_give_zero_ratio(self):
        g, d = leader_pair(1.0)
        _, d3 = henneberg_extend(g, d, 1, 2, 1.0, 1.0, math.pi / 3)
        assert d3.r_star[3] == 0.0

    @pytest.mark.parametrize("alpha", [0.0, 2 * math.pi, -1.0])
    def test_bad_angle(self, alpha):
        g, d = leader_pair(1.0)
        with pytest.raises(BadAngle):
            henneberg_extend(g, d, 1, 2, 1.0, 1.0, alpha)

    def test_inconsistent_triangle(self):
        g, d = leader_pair(2.0)
        with pytest.raises(InconsistentTriangle):
            henneberg_extend(g, d, 1, 2, 1.0, 1.0, math.pi / 3)

    def test_requires_existing_edge(self):
        g = FormationGraph(3, ((2, 1), (3, 1), (3, 2)))
        d = DesiredFormation.from_triangles(g, 1.0, {3: (1.0, 1.0, math.pi / 3)})
        g4, d4 = henneberg_extend(g, d, 1, 3, 1.0, 1.0, math.pi / 3)
        with pytest.raises(GraphError):
            henneberg_extend(g4, d4, 2, 4, 1.0, 1.0, math.pi / 3)

    @given(st.integers(2, 25), st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_extension_sequences_stay_valid(self, n, seed):
        g, d = random_formation(n, seed)
        assert validate_graph(g).ok
        assert validate_desired(g, d).ok
        assert len(g.edges) == 2 * n - 3
