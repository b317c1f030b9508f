import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipolar_formation import geometry, oracles
from bipolar_formation.errors import FocalSingularity, GraphError
from bipolar_formation.geometry import Vec2
from bipolar_formation.oracles import (EXACT_TOL, FD_TOL, basis_grid,
                                       check_angle_rate, check_basis_by_finite_difference,
                                       check_shape_condition_equivalence, check_transform_derivative,
                                       mk_value, random_rate_states, realized_bipolar,
                                       reconstruct_target_positions, reflect, rigid_motion,
                                       run_oracle_suite, sample_mk_positivity,
                                       strong_congruency_check)
from bipolar_formation.presets import random_formation, six_agent_desired, six_agent_graph


@pytest.fixture(scope="module")
def six_agent():
    return six_agent_graph(), six_agent_desired()


class TestCongruency:
    def test_target_matches(self, six_agent):
        g, d = six_agent
        pos = reconstruct_target_positions(g, d)
        assert strong_congruency_check(pos, d, g, EXACT_TOL)

    def test_mirror_rejected(self, six_agent):
        g, d = six_agent
        pos = reconstruct_target_positions(g, d)
        assert not strong_congruency_check(reflect(pos, pos[0], pos[1]), d, g, 1e-3)

    @given(st.floats(0, 2 * math.pi), st.floats(-50, 50), st.floats(-50, 50))
    def test_rigid_motion_accepted(self, theta, dx, dy):
        g, d = six_agent_graph(), six_agent_desired()
        pos = rigid_motion(reconstruct_target_positions(g, d), theta, (dx, dy))
        assert strong_congruency_check(pos, d, g, 1e-8)

    def test_scaled_rejected(self, six_agent):
        g, d = six_agent
        pos = [Vec2(1.01 * p.x, 1.01 * p.y) for p in reconstruct_target_positions(g, d)]
        assert not strong_congruency_check(pos, d, g, 1e-3)
        # scaling leaves the bipolar description alone
        for k, (r, a) in realized_bipolar(pos, g).items():
            assert r == pytest.approx(d.r_star[k], abs=1e-12)
            assert a == pytest.approx(d.alpha_star[k], abs=1e-12)

    def test_order_invariance(self, six_agent):
        g, d = six_agent
        a = reconstruct_target_positions(g, d)
        b = reconstruct_target_positions(g, d, order=[3, 4, 6, 5])
        assert max(math.hypot(p.x - q.x, p.y - q.y) for p, q in zip(a, b)) < 1e-12

    def test_bad_order(self, six_agent):
        g, d = six_agent
        with pytest.raises(GraphError):
            reconstruct_target_positions(g, d, order=[6, 3, 4, 5])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(3, 12), st.integers(0, 10_000))
    def test_random_formations_reconstruct(self, n, seed):
        g, d = random_formation(n, seed)
        pos = reconstruct_target_positions(g, d, p1=(1.0, -2.0), p2_dir=0.7)
        assert strong_congruency_check(pos, d, g, 1e-8)


class TestBasisOracle:
    def test_grid(self):
        grid = basis_grid(6, 1)
        assert len(grid) == 216
        assert max(check_basis_by_finite_difference(*p) for p in grid) < FD_TOL

    def test_near_focus_refused(self):
        with pytest.raises(FocalSingularity):
            check_basis_by_finite_difference(0.0, 1e-5, 1.0, Vec2(1, 0))


class TestRateOracle:
    def test_random_states(self):
        assert max(check_angle_rate(*s).deviation for s in random_rate_states(200, 4)) < FD_TOL

    def test_zero_velocity(self):
        rc = check_angle_rate((1, 0), (0, 1), (0, 0), (0, 0), (0, 0), (0, 0))
        assert rc.alpha_analytic == 0.0 and rc.r_analytic == 0.0

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_common_translation(self, vx, vy):
        v = (vx, vy)
        rc = check_angle_rate((1, 0), (0, 1), (0, 0), v, v, v)
        assert abs(rc.alpha_analytic) < 1e-15 and abs(rc.r_analytic) < 1e-15

    def test_rotation_about_k(self):
        # rotating i and j about k at unit rate keeps alpha and r fixed
        rc = check_angle_rate((1, 0), (0, 2), (0, 0), (0, 1), (-2, 0), (0, 0))
        assert rc.alpha_analytic == pytest.approx(0.0, abs=1e-15)
        assert rc.r_analytic == pytest.approx(0.0, abs=1e-15)


class TestPositivity:
    def test_sampled_min_positive(self):
        rep = sample_mk_positivity(5000, seed=3)
        assert rep.ok and rep.min_mk > 0

    def test_closed_form_example(self):
        # k at the top of an equilateral triangle: r = 0, alpha = pi/3, c = 1/2
        m = mk_value(Vec2(-0.5, 0), Vec2(0.5, 0), Vec2(0, math.sqrt(3) / 2))[0]
        assert m == pytest.approx((1 - 0.5) / 0.5, rel=1e-12)

    def test_collinear_limit_goes_to_zero(self):
        # equal distances (r = 0): m_k = 2 sin(alpha / 2) vanishes as the neighbours merge
        values = [mk_value(Vec2(1, 0), Vec2(math.cos(a), math.sin(a)), Vec2(0, 0))[0]
                  for a in (0.1, 0.01, 0.001)]
        assert values == pytest.approx([2 * math.sin(a / 2) for a in (0.1, 0.01, 0.001)], rel=1e-9)
        assert values[0] > values[1] > values[2] > 0

    def test_negative_control_catches_broken_basis(self, monkeypatch):
        real = geometry.bipolar_basis

        def flipped(r, alpha, z_ji):
            b = real(r, alpha, z_ji)
            return b._replace(r_hat=Vec2(-b.r_hat[0], -b.r_hat[1]))

        monkeypatch.setattr(oracles, "bipolar_basis", flipped)
        assert not sample_mk_positivity(200, seed=0).ok


class TestEquivalence:
    def test_six_agent(self, six_agent):
        rep = check_shape_condition_equivalence(*six_agent, samples=300, seed=2)
        assert rep.ok
        assert rep.target_residual < EXACT_TOL

    @settings(max_examples=10, deadline=None)
    @given(st.integers(3, 10), st.integers(0, 1000))
    def test_random_formations(self, n, seed):
        rep = check_shape_condition_equivalence(*random_formation(n, seed), samples=50, seed=seed)
        assert rep.ok


class TestTransformDerivative:
    def test_matches(self):
        assert check_transform_derivative(500, 9) < 1e-6


class TestSuite:
    @pytest.fixture(scope="class")
    @staticmethod
    def results():
        return run_oracle_suite(seed=0, samples=300)

    def test_all_pass(self, results):
        assert [r.name for r in results if not r.passed] == []

    def test_names(self, results):
        assert [r.name for r in results] == [
            "basis finite difference", "edge-angle / log-ratio rates", "m_k positivity",
            "distance <=> bipolar conditions", "target reconstruction", "transform derivative",
            "frame invariance"]

    def test_frame_invariance_reported_tight(self, results):
        assert results[-1].worst <= 1e-12
