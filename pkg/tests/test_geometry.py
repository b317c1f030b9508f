import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bipolar_formation.errors import Collocated, DegenerateTriangle, FocalSingularity, NotUnit
from bipolar_formation.geometry import (BipolarPoint, Vec2, bearing, bipolar_basis,
                                        bipolar_from_positions, bipolar_to_cartesian, edge_angle,
                                        log_ratio, place_from_bipolar, reconstruct_neighbor_bearing,
                                        rotate, rotate90, rotate90_cw, scale_factor)

coord = st.floats(-10.0, 10.0, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, allow_nan=False)


def unit(theta):
    return Vec2(math.cos(theta), math.sin(theta))


def close(a, b, tol=1e-12):
    return math.hypot(a[0] - b[0], a[1] - b[1]) <= tol


class TestBearing:
    def test_axis_aligned(self):
        assert bearing(Vec2(0, 0), Vec2(2, 0)) == Vec2(1.0, 0.0)

    def test_diagonal(self):
        s = 1 / math.sqrt(2)
        assert close(bearing(Vec2(1, 1), Vec2(0, 0)), (-s, -s))

    def test_collocated(self):
        with pytest.raises(Collocated):
            bearing(Vec2(0, 0), Vec2(0, 0))


class TestEdgeAngle:
    @pytest.mark.parametrize("z_ki, z_kj, expected", [
        ((1, 0), (0, 1), math.pi / 2),
        ((1, 0), (0, -1), 3 * math.pi / 2),
        ((1, 0), (1, 0), 0.0),
        ((1, 0), (-1, 0), math.pi),
    ])
    def test_examples(self, z_ki, z_kj, expected):
        assert edge_angle(Vec2(*z_ki), Vec2(*z_kj)) == pytest.approx(expected, abs=1e-15)

    def test_rejects_non_unit(self):
        with pytest.raises(NotUnit):
            edge_angle(Vec2(2, 0), Vec2(0, 1))

    def test_clamps_dot_product_overshoot(self):
        z = Vec2(0.6, 0.8)
        z_bumped = Vec2(0.6 * (1 + 1e-12), 0.8 * (1 + 1e-12))
        assert edge_angle(z, z_bumped) < 1e-5

    @given(angle, angle, angle)
    def test_rotation_invariant(self, a, b, theta):
        z_ki, z_kj = unit(a), unit(b)
        base = edge_angle(z_ki, z_kj)
        rotated = edge_angle(rotate(theta, z_ki), rotate(theta, z_kj))
        gap = abs(base - rotated) % (2 * math.pi)
        assert min(gap, 2 * math.pi - gap) < 1e-12

    @given(angle, st.floats(1e-3, 2 * math.pi - 1e-3))
    def test_counterclockwise_convention(self, a, da):
        assert edge_angle(unit(a), unit(a + da)) == pytest.approx(da, abs=1e-7)


class TestLogRatio:
    @pytest.mark.parametrize("a, b, expected", [(1, 1, 0.0), (2, 1, math.log(2)), (math.e, 1, 1.0)])
    def test_examples(self, a, b, expected):
        assert log_ratio(a, b) == pytest.approx(expected, rel=1e-15)

    def test_collocated(self):
        with pytest.raises(Collocated):
            log_ratio(0.0, 1.0)


class TestRotations:
    def test_quarter_turn(self):
        assert rotate90(Vec2(1, 0)) == Vec2(0, 1)

    def test_four_quarter_turns(self):
        v = Vec2(0.3, -1.7)
        assert rotate90(rotate90(rotate90(rotate90(v)))) == v

    def test_clockwise_inverts(self):
        v = Vec2(0.3, -1.7)
        assert rotate90_cw(rotate90(v)) == v

    def test_half_turn(self):
        assert close(rotate(math.pi, Vec2(1, 0)), (-1, 0), 1e-15)


class TestBipolarToCartesian:
    def test_midpoint(self):
        p = bipolar_to_cartesian(BipolarPoint(0.0, math.pi, 1.0))
        assert close(p, (0, 0), 1e-15)

    def test_on_bisector(self):
        p = bipolar_to_cartesian(BipolarPoint(0.0, math.pi / 2, 1.0))
        assert close(p, (0, 1), 1e-15)
        # distances to both foci are sqrt(2) and the foci subtend a right angle
        assert math.hypot(p.x + 1, p.y) == pytest.approx(math.sqrt(2))
        assert math.hypot(p.x - 1, p.y) == pytest.approx(math.sqrt(2))

    def test_focal_singularity(self):
        with pytest.raises(FocalSingularity):
            bipolar_to_cartesian(BipolarPoint(0.0, 0.0, 1.0))

    def test_scale_factor(self):
        assert scale_factor(0.0, math.pi / 2, 2.0) == pytest.approx(2.0)

    @given(coord, coord, coord, coord, coord, coord)
    @settings(max_examples=300)
    def test_round_trip(self, xi, yi, xj, yj, xk, yk):
        p_i, p_j, p_k = Vec2(xi, yi), Vec2(xj, yj), Vec2(xk, yk)
        sides = ((p_i - p_j).norm(), (p_i - p_k).norm(), (p_j - p_k).norm())
        assume(min(sides) > 0.05)
        bp = bipolar_from_positions(p_i, p_j, p_k)
        back = place_from_bipolar(p_i, p_j, bp.r, bp.alpha)
        scale = max(1.0, max(abs(v) for v in (xi, yi, xj, yj, xk, yk)))
        assert close(back, p_k, 1e-9 * scale)


class TestBipolarBasis:
    def test_bisector_example(self):
        z = unit(0.4)
        b = bipolar_basis(0.0, math.pi / 2, z)
        assert b.f1 == pytest.approx(0.0, abs=1e-15)
        assert b.f2 == pytest.approx(-1.0)
        assert close(b.r_hat, -z, 1e-15)
        assert close(b.alpha_hat, -rotate90_cw(z), 1e-15)

    def test_ln2_example(self):
        b = bipolar_basis(math.log(2), math.pi / 2, Vec2(1, 0))
        assert b.f1 == pytest.approx(-3 / 5, rel=1e-14)
        assert b.f2 == pytest.approx(-4 / 5, rel=1e-14)

    @given(st.floats(-3, 3), st.floats(0.01, 2 * math.pi - 0.01), angle)
    @settings(max_examples=500)
    def test_orthonormal(self, r, a, th):
        b = bipolar_basis(r, a, unit(th))
        assert b.f1 ** 2 + b.f2 ** 2 == pytest.approx(1.0, abs=1e-12)
        assert math.hypot(*b.r_hat) == pytest.approx(1.0, abs=1e-12)
        assert math.hypot(*b.alpha_hat) == pytest.approx(1.0, abs=1e-12)
        assert abs(b.r_hat[0] * b.alpha_hat[0] + b.r_hat[1] * b.alpha_hat[1]) < 1e-12
        # r_hat is alpha_hat turned a quarter counterclockwise
        assert close(b.r_hat, rotate90(b.alpha_hat), 1e-12)

    def test_orthonormal_dense_sample(self):
        rng = np.random.default_rng(3)
        for r, a, th in zip(rng.uniform(-3, 3, 10_000), rng.uniform(0.01, 6.27, 10_000),
                            rng.uniform(0, 6.3, 10_000)):
            b = bipolar_basis(float(r), float(a), unit(float(th)))
            assert abs(b.r_hat[0] * b.alpha_hat[0] + b.r_hat[1] * b.alpha_hat[1]) < 1e-12

    @given(st.floats(-2, 2), st.floats(0.05, 2 * math.pi - 0.05), angle)
    def test_frame_covariant(self, r, a, th):
        # rotating z_ji rotates the whole basis with it
        z = unit(0.3)
        b0 = bipolar_basis(r, a, z)
        b1 = bipolar_basis(r, a, rotate(th, z))
        assert close(rotate(th, b0.r_hat), b1.r_hat, 1e-12)
        assert close(rotate(th, b0.alpha_hat), b1.alpha_hat, 1e-12)


class TestReconstructNeighborBearing:
    def test_example(self):
        s = 1 / math.sqrt(2)
        z = reconstruct_neighbor_bearing(Vec2(1, 0), Vec2(0, 1), 1.0)
        assert close(z, (s, -s), 1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateTriangle):
            reconstruct_neighbor_bearing(Vec2(1, 0), Vec2(1, 0), 1.0)

    @given(coord, coord, coord, coord, coord, coord)
    @settings(max_examples=300)
    def test_matches_true_bearing(self, xi, yi, xj, yj, xk, yk):
        p_i, p_j, p_k = Vec2(xi, yi), Vec2(xj, yj), Vec2(xk, yk)
        assume(min((p_i - p_j).norm(), (p_i - p_k).norm(), (p_j - p_k).norm()) > 0.05)
        z = reconstruct_neighbor_bearing(bearing(p_k, p_i), bearing(p_k, p_j),
                                         (p_i - p_k).norm() / (p_j - p_k).norm())
        assert close(z, bearing(p_j, p_i), 1e-12 * max(1.0, (p_i - p_k).norm() / (p_i - p_j).norm()))
