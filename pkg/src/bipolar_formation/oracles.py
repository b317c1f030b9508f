"""Independent numerical checks of the formulas the controllers rely on.

Each oracle compares production code against something computed another
way (finite differences, brute-force distances, closed forms) and reports
the worst deviation it saw.  ``run_oracle_suite`` bundles them for the CLI
and the acceptance tests.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import FocalSingularity, GraphError
from .geometry import (TWO_PI, BipolarPoint, Vec2, bearing, bipolar_basis, bipolar_to_cartesian,
                       edge_angle, rotate)
from .graph import DesiredFormation, FormationGraph
from .ppc import PerformanceFunction, PpcChannel, transform, xi

FD_STEP = 1e-6
FD_TOL = 1e-5
EXACT_TOL = 1e-9


# ------------------------------------------------------------------ placement

def reconstruct_target_positions(graph: FormationGraph, desired: DesiredFormation, p1=(0.0, 0.0),
                                 p2_dir: float = 0.0, order: Optional[Sequence[int]] = None
                                 ) -> List[Vec2]:
    """Build the desired shape from its bipolar description.

    Agent 1 sits at ``p1`` and agent 2 is placed so that its bearing towards
    agent 1 points along ``p2_dir``.  Followers are placed in ``order`` (a
    topological order, default ascending) by building the virtual frame on
    their two neighbours and mapping ``(r*, alpha*)`` to Cartesian.
    """
    p1 = Vec2(float(p1[0]), float(p1[1]))
    d21 = desired.d_star[(2, 1)]
    pos: Dict[int, Vec2] = {1: p1}
    if graph.n >= 2:
        pos[2] = Vec2(p1.x + d21 * math.cos(p2_dir + math.pi), p1.y + d21 * math.sin(p2_dir + math.pi))
    nbrs = graph.follower_neighbors
    for k in (order if order is not None else graph.followers):
        if k in (1, 2):
            continue
        i, j = nbrs[k]
        if i not in pos or j not in pos:
            raise GraphError(f"order places follower {k} before its neighbours {i}, {j}")
        p_i, p_j = pos[i], pos[j]
        c = 0.5 * math.hypot(p_i.x - p_j.x, p_i.y - p_j.y)
        q = bipolar_to_cartesian(BipolarPoint(desired.r_star[k], desired.alpha_star[k], c))
        # {C_k}: origin at the midpoint, x from i towards j
        ex = Vec2((p_j.x - p_i.x) / (2 * c), (p_j.y - p_i.y) / (2 * c))
        ey = Vec2(-ex.y, ex.x)
        mid = Vec2(0.5 * (p_i.x + p_j.x), 0.5 * (p_i.y + p_j.y))
        pos[k] = Vec2(mid.x + q.x * ex.x + q.y * ey.x, mid.y + q.x * ex.y + q.y * ey.y)
    return [pos[k] for k in range(1, graph.n + 1)]


def distance_residuals(positions: Sequence[Vec2], desired: DesiredFormation) -> Dict[tuple, float]:
    """Signed ``|p_ji| - d*_ji`` per edge."""
    out = {}
    for (j, i), d in desired.d_star.items():
        pi, pj = positions[i - 1], positions[j - 1]
        out[(j, i)] = math.hypot(pi[0] - pj[0], pi[1] - pj[1]) - d
    return out


def _angle_gap(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def realized_bipolar(positions: Sequence[Vec2], graph: FormationGraph) -> Dict[int, Tuple[float, float]]:
    """Measured ``(r_k, alpha_k)`` of every follower."""
    out = {}
    for k, (i, j) in graph.follower_neighbors.items():
        pk, pi, pj = positions[k - 1], positions[i - 1], positions[j - 1]
        d_ki = math.hypot(pi[0] - pk[0], pi[1] - pk[1])
        d_kj = math.hypot(pj[0] - pk[0], pj[1] - pk[1])
        out[k] = (math.log(d_ki / d_kj), edge_angle(bearing(pk, pi), bearing(pk, pj)))
    return out


def strong_congruency_check(positions: Sequence[Vec2], desired: DesiredFormation,
                            graph: FormationGraph, tol: float = 1e-8) -> bool:
    """True iff every edge length and every follower edge-angle match within ``tol``.

    Matching angles as well as lengths rules out mirror images.
    """
    if any(abs(v) >= tol for v in distance_residuals(positions, desired).values()):
        return False
    for k, (_, alpha) in realized_bipolar(positions, graph).items():
        if _angle_gap(alpha, desired.alpha_star[k]) >= tol:
            return False
    return True


def reflect(positions: Sequence[Vec2], a: Vec2, b: Vec2) -> List[Vec2]:
    """Mirror ``positions`` across the line through ``a`` and ``b``."""
    ux, uy = b[0] - a[0], b[1] - a[1]
    n = math.hypot(ux, uy)
    ux, uy = ux / n, uy / n
    out = []
    for p in positions:
        dx, dy = p[0] - a[0], p[1] - a[1]
        s = dx * ux + dy * uy
        out.append(Vec2(a[0] + 2 * s * ux - dx, a[1] + 2 * s * uy - dy))
    return out


def rigid_motion(positions: Sequence[Vec2], theta: float, shift=(0.0, 0.0)) -> List[Vec2]:
    return [rotate(theta, Vec2(*p)) + Vec2(*shift) for p in positions]


# ------------------------------------------------------------------ basis

def _ck_axes(z_ji: Vec2):
    # x points from focus i to focus j (= -z_ji), y = J^T z_ji
    return Vec2(-z_ji[0], -z_ji[1]), Vec2(z_ji[1], -z_ji[0])


def check_basis_by_finite_difference(r: float, alpha: float, c: float, z_ji: Vec2,
                                     h: float = FD_STEP) -> float:
    """Max deviation between the analytic basis and ``(dp/dr, dp/dalpha) / q``.

    Both sides are unit vectors, so the deviation is absolute and relative at
    once.
    """
    den = math.cosh(r) - math.cos(alpha)
    if den <= 1e-6:
        raise FocalSingularity(f"too close to a focus: cosh r - cos alpha = {den!r}")
    q = c / den
    ex, ey = _ck_axes(z_ji)

    def to_global(v):
        return Vec2(v[0] * ex.x + v[1] * ey.x, v[0] * ex.y + v[1] * ey.y)

    def diff(dr, da):
        a = bipolar_to_cartesian(BipolarPoint(r + dr, alpha + da, c))
        b = bipolar_to_cartesian(BipolarPoint(r - dr, alpha - da, c))
        return to_global(Vec2((a.x - b.x) / (2 * h * q), (a.y - b.y) / (2 * h * q)))

    basis = bipolar_basis(r, alpha, z_ji)
    num_r, num_a = diff(h, 0.0), diff(0.0, h)
    dev_r = math.hypot(num_r.x - basis.r_hat[0], num_r.y - basis.r_hat[1])
    dev_a = math.hypot(num_a.x - basis.alpha_hat[0], num_a.y - basis.alpha_hat[1])
    return max(dev_r, dev_a)


def basis_grid(size: int = 10, seed: int = 0):
    """``size**3`` (r, alpha, c, z_ji) points away from the foci."""
    rng = np.random.default_rng(seed)
    out = []
    for r in np.linspace(-2.0, 2.0, size):
        for a in np.linspace(0.1, TWO_PI - 0.1, size):
            for c in np.linspace(0.2, 3.0, size):
                th = rng.uniform(0.0, TWO_PI)
                out.append((float(r), float(a), float(c), Vec2(math.cos(th), math.sin(th))))
    return out


# ------------------------------------------------------------------ rates

class RateCheck(NamedTuple):
    alpha_analytic: float
    alpha_numeric: float
    r_analytic: float
    r_numeric: float

    @property
    def deviation(self) -> float:
        return max(abs(self.alpha_analytic - self.alpha_numeric),
                   abs(self.r_analytic - self.r_numeric))


def _alpha_r(p_i, p_j, p_k):
    z_ki, z_kj = bearing(p_k, p_i), bearing(p_k, p_j)
    d_ki = math.hypot(p_i[0] - p_k[0], p_i[1] - p_k[1])
    d_kj = math.hypot(p_j[0] - p_k[0], p_j[1] - p_k[1])
    return edge_angle(z_ki, z_kj), math.log(d_ki / d_kj)


def check_angle_rate(p_i, p_j, p_k, v_i, v_j, v_k, h: float = FD_STEP) -> RateCheck:
    """Analytic edge-angle and log-ratio rates against central differences in time."""
    p_i, p_j, p_k = (Vec2(float(a), float(b)) for a, b in (p_i, p_j, p_k))
    v_i, v_j, v_k = (Vec2(float(a), float(b)) for a, b in (v_i, v_j, v_k))

    def rel(p_a, v_a):
        p = Vec2(p_a.x - p_k.x, p_a.y - p_k.y)
        v = Vec2(v_a.x - v_k.x, v_a.y - v_k.y)
        d = math.hypot(p.x, p.y)
        z = Vec2(p.x / d, p.y / d)
        # bearing-angle rate z^T J^T v / d and distance-log rate z^T v / d
        return (z.x * v.y - z.y * v.x) / d, (z.x * v.x + z.y * v.y) / d

    ang_i, len_i = rel(p_i, v_i)
    ang_j, len_j = rel(p_j, v_j)
    alpha_an = ang_j - ang_i
    r_an = len_i - len_j

    def at(s):
        return _alpha_r(p_i + v_i * s, p_j + v_j * s, p_k + v_k * s)

    (a_p, r_p), (a_m, r_m) = at(h), at(-h)
    da = (a_p - a_m + math.pi) % TWO_PI - math.pi
    return RateCheck(alpha_an, da / (2 * h), r_an, (r_p - r_m) / (2 * h))


def random_rate_states(count: int, seed: int, box: float = 5.0, min_dist: float = 0.1):
    rng = np.random.default_rng(seed)
    states = []
    while len(states) < count:
        p = rng.uniform(-box, box, size=(3, 2))
        if min(np.linalg.norm(p[0] - p[2]), np.linalg.norm(p[1] - p[2]),
               np.linalg.norm(p[0] - p[1])) < min_dist:
            continue
        v = rng.uniform(-1.0, 1.0, size=(3, 2))
        states.append((tuple(p[0]), tuple(p[1]), tuple(p[2]), tuple(v[0]), tuple(v[1]), tuple(v[2])))
    return states


# ------------------------------------------------------------------ positivity

class PositivitySample(NamedTuple):
    p_i: Vec2
    p_j: Vec2
    p_k: Vec2
    m_k: float
    alpha: float
    d_ki: float
    d_kj: float


def mk_value(p_i: Vec2, p_j: Vec2, p_k: Vec2):
    """``(m_k, eta, basis)`` with ``eta = z_kj/|p_kj| - z_ki/|p_ki|`` and ``m_k = eta . r_hat``."""
    z_ki, z_kj = bearing(p_k, p_i), bearing(p_k, p_j)
    d_ki = math.hypot(p_i[0] - p_k[0], p_i[1] - p_k[1])
    d_kj = math.hypot(p_j[0] - p_k[0], p_j[1] - p_k[1])
    eta = Vec2(z_kj.x / d_kj - z_ki.x / d_ki, z_kj.y / d_kj - z_ki.y / d_ki)
    r = math.log(d_ki / d_kj)
    alpha = edge_angle(z_ki, z_kj)
    basis = bipolar_basis(r, alpha, bearing(p_j, p_i))
    m = eta.x * basis.r_hat[0] + eta.y * basis.r_hat[1]
    return m, eta, basis, r, alpha


@dataclass
class PositivityReport:
    min_mk: float
    argmin: Optional[PositivitySample]
    max_closed_form_dev: float
    max_quadratic_dev: float
    samples: int

    @property
    def ok(self) -> bool:
        return self.min_mk > 0.0 and self.max_closed_form_dev < EXACT_TOL and self.max_quadratic_dev < 1e-10


def sample_mk_positivity(num_samples: int, seed: int = 0, angle_margin: float = 0.05,
                         dist_range: Tuple[float, float] = (0.1, 10.0)) -> PositivityReport:
    """Minimum of m_k over random margin-restricted triangles.

    Each sample also checks m_k against its closed form
    ``(cosh r - cos alpha) / c`` and verifies ``x^T (G B) x = m_k |x|^2`` for
    a random x, where ``G = [eta^T; eta^T J]`` and ``B = [r_hat | alpha_hat]``.
    Deviations are relative to ``m_k |x|^2``.
    """
    rng = np.random.default_rng(seed)
    d = rng.uniform(dist_range[0], dist_range[1], size=(num_samples, 2))
    alphas = rng.uniform(angle_margin, TWO_PI - angle_margin, size=num_samples)
    thetas = rng.uniform(0.0, TWO_PI, size=num_samples)
    base = rng.uniform(-5.0, 5.0, size=(num_samples, 2))
    xs = rng.normal(size=(num_samples, 2))
    min_mk, argmin, dev_cf, dev_q = math.inf, None, 0.0, 0.0
    for s in range(num_samples):
        d_ki, d_kj = float(d[s, 0]), float(d[s, 1])
        th, al = float(thetas[s]), float(alphas[s])
        p_k = Vec2(float(base[s, 0]), float(base[s, 1]))
        p_i = Vec2(p_k.x + d_ki * math.cos(th), p_k.y + d_ki * math.sin(th))
        p_j = Vec2(p_k.x + d_kj * math.cos(th + al), p_k.y + d_kj * math.sin(th + al))
        m, eta, basis, r, alpha = mk_value(p_i, p_j, p_k)
        c = 0.5 * math.hypot(p_i.x - p_j.x, p_i.y - p_j.y)
        closed = (math.cosh(r) - math.cos(alpha)) / c
        dev_cf = max(dev_cf, abs(m - closed) / closed)
        # G = [eta^T; eta^T J]; the second row is (J^T eta)^T
        jt_eta = Vec2(eta.y, -eta.x)
        rh, ah = basis.r_hat, basis.alpha_hat
        gb = ((eta.x * rh[0] + eta.y * rh[1], eta.x * ah[0] + eta.y * ah[1]),
              (jt_eta.x * rh[0] + jt_eta.y * rh[1], jt_eta.x * ah[0] + jt_eta.y * ah[1]))
        x0, x1 = float(xs[s, 0]), float(xs[s, 1])
        quad = x0 * (gb[0][0] * x0 + gb[0][1] * x1) + x1 * (gb[1][0] * x0 + gb[1][1] * x1)
        ref = m * (x0 * x0 + x1 * x1)
        dev_q = max(dev_q, abs(quad - ref) / max(abs(ref), 1e-300))
        if m < min_mk:
            min_mk = m
            argmin = PositivitySample(p_i, p_j, p_k, m, alpha, d_ki, d_kj)
    return PositivityReport(min_mk, argmin, dev_cf, dev_q, num_samples)


# ------------------------------------------------------------------ equivalence

@dataclass
class EquivalenceReport:
    """Distance residuals versus bipolar residuals on perturbed shapes.

    ``max_ratio_dist_over_bipolar`` bounds how large the distance error can
    be for a given bipolar error and vice versa; both finite and moderate
    means each set of conditions implies the other with proportional
    tolerances.
    """

    max_ratio_dist_over_bipolar: float
    max_ratio_bipolar_over_dist: float
    target_residual: float
    samples: int
    ratio_limit: float

    @property
    def ok(self) -> bool:
        return (self.target_residual < EXACT_TOL
                and self.max_ratio_dist_over_bipolar < self.ratio_limit
                and self.max_ratio_bipolar_over_dist < self.ratio_limit)


def _bipolar_residual(positions, graph, desired) -> float:
    p1, p2 = positions[0], positions[1]
    res = abs(math.hypot(p1[0] - p2[0], p1[1] - p2[1]) - desired.d_star[(2, 1)])
    for k, (r, a) in realized_bipolar(positions, graph).items():
        res = max(res, abs(r - desired.r_star[k]), _angle_gap(a, desired.alpha_star[k]))
    return res


def _distance_residual(positions, desired) -> float:
    return max(abs(v) for v in distance_residuals(positions, desired).values())


def check_shape_condition_equivalence(graph: FormationGraph, desired: DesiredFormation, samples: int = 1000,
                             seed: int = 0, ratio_limit: float = 1e3) -> EquivalenceReport:
    """Both residual kinds vanish together on ``samples`` near-target configurations."""
    rng = np.random.default_rng(seed)
    target = reconstruct_target_positions(graph, desired)
    target_res = max(_distance_residual(target, desired), _bipolar_residual(target, graph, desired))
    hi_db, hi_bd = 0.0, 0.0
    for _ in range(samples):
        eps = 10.0 ** rng.uniform(-7.0, -2.0)
        noise = rng.normal(size=(graph.n, 2)) * eps
        theta = rng.uniform(0.0, TWO_PI)
        moved = rigid_motion([Vec2(p.x + dx, p.y + dy) for p, (dx, dy) in zip(target, noise)],
                             theta, tuple(rng.uniform(-10.0, 10.0, size=2)))
        dres = _distance_residual(moved, desired)
        bres = _bipolar_residual(moved, graph, desired)
        hi_db = max(hi_db, dres / bres)
        hi_bd = max(hi_bd, bres / dres)
    return EquivalenceReport(hi_db, hi_bd, target_res, samples, ratio_limit)


# ------------------------------------------------------------------ ppc

def check_transform_derivative(samples: int = 1000, seed: int = 0, h: float = FD_STEP) -> float:
    """Max relative gap between ``rho * xi`` and a central difference of ``T``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        bl, bu = (float(v) for v in rng.uniform(0.2, 5.0, size=2))
        ch = PpcChannel(PerformanceFunction(0.5, 0.04), bl, bu)
        # stay a little away from the walls so the stencil stays inside
        e = float(rng.uniform(-0.95 * bl, 0.95 * bu))
        rho_t = float(rng.uniform(0.04, 1.0))
        num = (transform(ch, e + h) - transform(ch, e - h)) / (2 * h)
        ana = rho_t * xi(ch, e, rho_t)
        worst = max(worst, abs(num - ana) / abs(ana))
    return worst


# ------------------------------------------------------------------ suite

@dataclass
class OracleResult:
    name: str
    passed: bool
    worst: float
    threshold: str
    detail: str = ""
    seconds: float = 0.0


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def run_oracle_suite(seed: int = 0, samples: Optional[int] = None) -> List[OracleResult]:
    """Run every oracle; ``samples`` caps the per-oracle sample counts."""
    from .presets import six_agent_desired, six_agent_graph, six_agent_maneuver

    def n(default):
        return default if samples is None else max(1, min(default, samples))

    results = []
    graph, desired = six_agent_graph(), six_agent_desired()

    def basis():
        grid = basis_grid(10, seed)[: n(1000)]
        return max(check_basis_by_finite_difference(r, a, c, z) for r, a, c, z in grid), len(grid)

    (worst, count), dt_s = _timed(basis)
    results.append(OracleResult("basis finite difference", worst < FD_TOL, worst, f"< {FD_TOL:g}",
                                f"{count} grid points", dt_s))

    def rates():
        states = random_rate_states(n(1000), seed)
        return max(check_angle_rate(*s).deviation for s in states), len(states)

    (worst, count), dt_s = _timed(rates)
    results.append(OracleResult("edge-angle / log-ratio rates", worst < FD_TOL, worst, f"< {FD_TOL:g}",
                                f"{count} random states", dt_s))

    rep, dt_s = _timed(lambda: sample_mk_positivity(n(100_000), seed))
    results.append(OracleResult("m_k positivity", rep.ok, rep.min_mk, "min m_k > 0",
                                f"{rep.samples} samples; closed-form dev {rep.max_closed_form_dev:.2e}, "
                                f"quadratic-form dev {rep.max_quadratic_dev:.2e}", dt_s))

    eq, dt_s = _timed(lambda: check_shape_condition_equivalence(graph, desired, n(1000), seed))
    results.append(OracleResult("distance <=> bipolar conditions", eq.ok,
                                max(eq.max_ratio_dist_over_bipolar, eq.max_ratio_bipolar_over_dist),
                                f"ratios < {eq.ratio_limit:g}",
                                f"{eq.samples} perturbations; target residual {eq.target_residual:.1e}",
                                dt_s))

    def placement():
        pos = reconstruct_target_positions(graph, desired)
        worst = _distance_residual(pos, desired)
        ok = strong_congruency_check(pos, desired, graph, EXACT_TOL)
        mirrored = reflect(pos, pos[0], pos[1])
        ok = ok and not strong_congruency_check(mirrored, desired, graph, EXACT_TOL)
        return ok and worst < EXACT_TOL, worst

    (ok, worst), dt_s = _timed(placement)
    results.append(OracleResult("target reconstruction", ok, worst, f"< {EXACT_TOL:g}",
                                "six-agent target; mirror image rejected", dt_s))

    worst, dt_s = _timed(lambda: check_transform_derivative(n(1000), seed))
    results.append(OracleResult("transform derivative", worst < 1e-6, worst, "< 1e-06",
                                f"{n(1000)} samples", dt_s))

    def frames():
        sc = six_agent_maneuver(seed)
        law = sc.build_law()
        world = list(sc.initial_positions)
        rng = np.random.default_rng(seed)
        worst, count = 0.0, 0
        for agent in range(2, sc.n + 1):
            u0, _ = law.global_command(world, agent, 0.0, 0.0)
            for theta in rng.uniform(0.0, TWO_PI, size=n(20)):
                u1, _ = law.global_command(world, agent, float(theta), 0.0)
                scale = max(1.0, math.hypot(u0[0], u0[1]))
                worst = max(worst, math.hypot(u1[0] - u0[0], u1[1] - u0[1]) / scale)
                count += 1
        return worst, count

    (worst, count), dt_s = _timed(frames)
    results.append(OracleResult("frame invariance", worst <= 1e-12, worst, "<= 1e-12",
                                f"{count} agent/rotation pairs", dt_s))
    return results
