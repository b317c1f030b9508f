"""Planar vectors, bearings, edge-angles and bipolar coordinates.

Conventions
-----------
* ``bearing(p_from, p_to)`` is the unit vector pointing from ``p_from`` to
  ``p_to``; for a sensing edge (j, i) this is z_ji, i.e. ``bearing(p_j, p_i)``.
* The edge-angle at agent k is measured counterclockwise from z_ki to z_kj
  and lives in [0, 2*pi).
* The virtual frame {C_k} of a follower has its origin at the midpoint of
  its two neighbours i < j, X axis pointing from i to j (so x_hat = -z_ji)
  and Y axis ``J @ x_hat``.  Neighbour i sits at (-c, 0), neighbour j at
  (+c, 0) with c half their separation.
"""
from __future__ import annotations

import math
from typing import NamedTuple

from .errors import Collocated, DegenerateTriangle, FocalSingularity, NotUnit

EPS_POS = 1e-9
EPS_DEN = 1e-12
UNIT_TOL = 1e-9
TWO_PI = 2.0 * math.pi


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def __mul__(self, s):
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def dot(self, other) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other) -> float:
        """z-component of the 3-D cross product (self, 0) x (other, 0)."""
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


def as_vec(v) -> Vec2:
    if isinstance(v, Vec2):
        return v
    x, y = v
    return Vec2(float(x), float(y))


def rotate90(v: Vec2) -> Vec2:
    """Counterclockwise quarter turn, ``J @ v``."""
    return Vec2(-v.y, v.x)


def rotate90_cw(v: Vec2) -> Vec2:
    """Clockwise quarter turn, ``J.T @ v``."""
    return Vec2(v.y, -v.x)


def rotate(theta: float, v: Vec2) -> Vec2:
    c = math.cos(theta)
    s = math.sin(theta)
    return Vec2(c * v.x - s * v.y, s * v.x + c * v.y)


def bearing(p_from: Vec2, p_to: Vec2) -> Vec2:
    dx = p_to[0] - p_from[0]
    dy = p_to[1] - p_from[1]
    d = math.hypot(dx, dy)
    if d <= EPS_POS:
        raise Collocated(f"points {tuple(p_from)} and {tuple(p_to)} are collocated")
    return Vec2(dx / d, dy / d)


def _check_unit(v, name):
    n = math.hypot(v[0], v[1])
    if abs(n - 1.0) > UNIT_TOL:
        raise NotUnit(f"{name} has norm {n!r}, expected 1")


def edge_angle(z_ki: Vec2, z_kj: Vec2) -> float:
    """Counterclockwise angle from ``z_ki`` to ``z_kj`` in [0, 2*pi).

    Same value as ``arccos(z_ki . z_kj)`` on the branch picked by the sign of
    ``(J z_ki) . z_kj``, computed with atan2 so it keeps full precision near 0
    and pi where arccos loses about half the digits.
    """
    _check_unit(z_ki, "z_ki")
    _check_unit(z_kj, "z_kj")
    c = z_ki[0] * z_kj[0] + z_ki[1] * z_kj[1]
    # (J z_ki)^T z_kj
    s = -z_ki[1] * z_kj[0] + z_ki[0] * z_kj[1]
    a = math.atan2(s, c)
    if a < 0.0:
        a += TWO_PI
        if a >= TWO_PI:
            return 0.0
    return a


def log_ratio(dist_ki: float, dist_kj: float) -> float:
    if dist_ki <= EPS_POS or dist_kj <= EPS_POS:
        raise Collocated(f"log-ratio of distances {dist_ki!r}, {dist_kj!r}")
    return math.log(dist_ki / dist_kj)


class BipolarPoint(NamedTuple):
    r: float
    alpha: float
    c: float


class BipolarBasis(NamedTuple):
    r_hat: Vec2
    alpha_hat: Vec2
    f1: float
    f2: float


def _half_terms(r, alpha):
    """(2 sinh^2(r/2), 2 sin^2(alpha/2)): cosh r - 1 and 1 - cos alpha without cancellation."""
    sh = math.sinh(0.5 * r)
    sa = math.sin(0.5 * alpha)
    return 2.0 * sh * sh, 2.0 * sa * sa


def _denominator(r, alpha):
    ch1, ca1 = _half_terms(r, alpha)
    den = ch1 + ca1
    if den <= EPS_DEN:
        raise FocalSingularity(f"cosh(r) - cos(alpha) = {den!r} at r={r!r}, alpha={alpha!r}")
    return den


def bipolar_to_cartesian(bp: BipolarPoint) -> Vec2:
    """Position in {C_k} of the point with bipolar coordinates ``bp``."""
    r, alpha, c = bp
    den = _denominator(r, alpha)
    return Vec2(c * math.sinh(r) / den, c * math.sin(alpha) / den)


def scale_factor(r: float, alpha: float, c: float) -> float:
    """Metric factor shared by both bipolar coordinates, c / (cosh r - cos alpha)."""
    return c / _denominator(r, alpha)


def bipolar_basis(r: float, alpha: float, z_ji: Vec2) -> BipolarBasis:
    """Unit directions of increasing r and alpha expressed in z_ji's frame.

    ``z_ji`` may be given in any frame; the basis comes back in that same
    frame, which is what makes the follower law implementable locally.
    """
    _check_unit(z_ji, "z_ji")
    ch1, ca1 = _half_terms(r, alpha)
    den = ch1 + ca1
    if den <= EPS_DEN:
        raise FocalSingularity(f"cosh(r) - cos(alpha) = {den!r} at r={r!r}, alpha={alpha!r}")
    f1 = -math.sinh(r) * math.sin(alpha) / den
    # cos(alpha) cosh(r) - 1, rearranged to avoid cancellation near the foci
    f2 = (ch1 * math.cos(alpha) - ca1) / den
    zx, zy = z_ji[0], z_ji[1]
    # J^T z_ji = (zy, -zx)
    alpha_hat = Vec2(-f1 * zx + f2 * zy, -f1 * zy - f2 * zx)
    r_hat = Vec2(f2 * zx + f1 * zy, f2 * zy - f1 * zx)
    return BipolarBasis(r_hat, alpha_hat, f1, f2)


def reconstruct_neighbor_bearing(z_ki: Vec2, z_kj: Vec2, ratio_kij: float) -> Vec2:
    """Bearing z_ji recovered from what agent k sees.

    ``ratio_kij * z_ki - z_kj`` is parallel to p_ji = p_i - p_j because
    p_ji = |p_ki| z_ki - |p_kj| z_kj.
    """
    zx = ratio_kij * z_ki[0] - z_kj[0]
    zy = ratio_kij * z_ki[1] - z_kj[1]
    n = math.hypot(zx, zy)
    if n <= EPS_POS:
        raise DegenerateTriangle("neighbours i and j appear collocated from agent k")
    return Vec2(zx / n, zy / n)


def ck_frame(p_i: Vec2, p_j: Vec2):
    """Origin, unit axes and half-separation of the virtual frame {C_k}."""
    z_ji = bearing(p_j, p_i)
    x_hat = -z_ji
    y_hat = rotate90_cw(z_ji)
    origin = Vec2(0.5 * (p_i[0] + p_j[0]), 0.5 * (p_i[1] + p_j[1]))
    c = 0.5 * math.hypot(p_i[0] - p_j[0], p_i[1] - p_j[1])
    return origin, x_hat, y_hat, c


def ck_to_global(p_i: Vec2, p_j: Vec2, q: Vec2) -> Vec2:
    origin, x_hat, y_hat, _ = ck_frame(p_i, p_j)
    return origin + x_hat * q[0] + y_hat * q[1]


def bipolar_from_positions(p_i: Vec2, p_j: Vec2, p_k: Vec2) -> BipolarPoint:
    """(r_k, alpha_kij, c_k) of agent k with respect to foci i and j."""
    p_i, p_j, p_k = as_vec(p_i), as_vec(p_j), as_vec(p_k)
    d_ki = (p_i - p_k).norm()
    d_kj = (p_j - p_k).norm()
    r = log_ratio(d_ki, d_kj)
    alpha = edge_angle(bearing(p_k, p_i), bearing(p_k, p_j))
    c = 0.5 * (p_i - p_j).norm()
    if c <= EPS_POS:
        raise Collocated("foci i and j are collocated")
    return BipolarPoint(r, alpha, c)


def place_from_bipolar(p_i: Vec2, p_j: Vec2, r: float, alpha: float) -> Vec2:
    """Global position of the point with bipolar coordinates (r, alpha) w.r.t. foci i, j."""
    p_i, p_j = as_vec(p_i), as_vec(p_j)
    origin, x_hat, y_hat, c = ck_frame(p_i, p_j)
    q = bipolar_to_cartesian(BipolarPoint(r, alpha, c))
    return origin + x_hat * q.x + y_hat * q.y
