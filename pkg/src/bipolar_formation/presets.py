"""Ready-made scenarios and helpers that generate valid formations.

The six-agent maneuver follows the published set-up (edge set, desired
shape, leader input, disturbances, performance parameters).  Its initial
positions are not published; the values here are our own choice: the
target formation behind the leader, with every agent displaced by a few
tenths of a length unit so that every channel starts visibly off target.
"""
from __future__ import annotations

import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import FormationError, ScenarioError
from .geometry import Vec2, place_from_bipolar
from .graph import DesiredFormation, FormationGraph, henneberg_extend, leader_pair
from .ppc import PerformanceFunction
from .scenario import FrameSpec, ScenarioConfig
from .schedules import (KeyframeSchedule, References, VectorSchedule, maneuver_disturbances,
                        maneuver_references, maneuver_velocity)

SIX_AGENT_EDGES = ((2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (5, 2), (5, 4), (6, 3), (6, 4))
SIX_AGENT_D = 1.875
SIX_AGENT_ALPHA = {3: math.pi / 3, 4: 5 * math.pi / 3, 5: 5 * math.pi / 3, 6: math.pi / 3}

# Offsets added to the target formation (leader at the origin, heading +x).
SIX_AGENT_OFFSETS = (
    (0.0, 0.0),
    (-0.45, -0.55),
    (0.35, 0.30),
    (-0.30, 0.40),
    (0.40, -0.35),
    (-0.35, -0.30),
)


def six_agent_graph() -> FormationGraph:
    return FormationGraph(6, SIX_AGENT_EDGES)


def six_agent_desired() -> DesiredFormation:
    g = six_agent_graph()
    return DesiredFormation.from_triangles(
        g, SIX_AGENT_D, {k: (SIX_AGENT_D, SIX_AGENT_D, a) for k, a in SIX_AGENT_ALPHA.items()})


def target_positions(graph: FormationGraph, desired: DesiredFormation, p1=(0.0, 0.0),
                     heading: float = 0.0) -> List[Vec2]:
    """Place the desired shape with agent 2 at bearing ``heading`` towards agent 1."""
    p1 = Vec2(float(p1[0]), float(p1[1]))
    d = desired.d_star[(2, 1)]
    pos = {1: p1, 2: Vec2(p1.x - d * math.cos(heading), p1.y - d * math.sin(heading))}
    for k in graph.construction_order():
        if k in pos:
            continue
        i, j = graph.follower_neighbors[k]
        pos[k] = place_from_bipolar(pos[i], pos[j], desired.r_star[k], desired.alpha_star[k])
    return [pos[k] for k in range(1, graph.n + 1)]


def six_agent_maneuver(seed: int = 0) -> ScenarioConfig:
    graph, desired = six_agent_graph(), six_agent_desired()
    velocity = maneuver_velocity()
    target = target_positions(graph, desired)
    initial = [Vec2(p.x + dx, p.y + dy) for p, (dx, dy) in zip(target, SIX_AGENT_OFFSETS)]
    return ScenarioConfig(
        graph=graph,
        desired=desired,
        initial_positions=initial,
        horizon=40.0,
        dt=1e-3,
        leader_velocity=velocity,
        disturbances=maneuver_disturbances(),
        references=maneuver_references(velocity),
        orientation_frame=0.0,
        ppc={"d": PerformanceFunction(0.5, 0.03), "beta": PerformanceFunction(0.5, 0.04),
             "r": PerformanceFunction(0.5, 0.04), "alpha": PerformanceFunction(0.5, 0.04)},
        integrator="rk4",
        frames=FrameSpec("random"),
        seed=seed,
        name="six_agent_maneuver",
    )


def two_agents_static(seed: int = 0) -> ScenarioConfig:
    """Leader at rest, secondary leader already at the desired distance."""
    graph, desired = leader_pair(1.0)
    return ScenarioConfig(
        graph=graph,
        desired=desired,
        initial_positions=[Vec2(0.0, 0.0), Vec2(-1.0, 0.0)],
        horizon=2.0,
        dt=1e-3,
        references=References(KeyframeSchedule(((0.0, 1.0),))),
        seed=seed,
        name="two_agents_static",
    )


def random_formation(n: int, seed: int, d_range=(1.0, 2.0), side_range=(0.7, 1.4)):
    """Random triangulated formation grown one vertex at a time.

    Each new vertex is attached to a random existing edge; its two sides are
    drawn from ``side_range`` times that edge, which always closes a triangle
    and keeps the apex angle well inside (0, pi).  The side of the edge it
    lands on (chirality) is a coin flip.
    """
    if n < 2:
        raise ScenarioError("a formation needs at least two agents")
    rng = np.random.default_rng(seed)
    graph, desired = leader_pair(float(rng.uniform(*d_range)))
    while graph.n < n:
        j, i = graph.edges[int(rng.integers(len(graph.edges)))]
        d_ji = desired.d_star[(j, i)]
        d_ki, d_kj = (float(v) * d_ji for v in rng.uniform(*side_range, size=2))
        cos_a = (d_ki * d_ki + d_kj * d_kj - d_ji * d_ji) / (2.0 * d_ki * d_kj)
        alpha = math.acos(cos_a)
        if rng.random() < 0.5:
            alpha = 2.0 * math.pi - alpha
        graph, desired = henneberg_extend(graph, desired, i, j, d_ki, d_kj, alpha)
    return graph, desired


# Largest linearized decay rate times dt that keeps RK4 comfortably stable
# (the stability boundary on the negative real axis is about 2.785).
RK4_SAFE_RATE_DT = 1.5


def steady_state_rates(graph: FormationGraph, desired: DesiredFormation,
                       rho_r: float, rho_alpha: float, b_r: float = 1.0) -> Dict[str, float]:
    """Linearized closed-loop decay rate of every follower channel at the target.

    Near the target the r and alpha loops decouple; each decays at
    ``(1/b + 1/b_bar)^2 m_k^2 / rho^2`` with ``m_k = (cosh r - cos alpha) / c``
    the inverse bipolar scale factor.
    """
    out = {}
    for k, (i, j) in graph.follower_neighbors.items():
        r, a = desired.r_star[k], desired.alpha_star[k]
        m = (math.cosh(r) - math.cos(a)) / (0.5 * desired.d_star[(j, i)])
        out[f"r{k}"] = (2.0 / b_r) ** 2 * m * m / rho_r ** 2
        out[f"alpha{k}"] = (1.0 / a + 1.0 / (2.0 * math.pi - a)) ** 2 * m * m / rho_alpha ** 2
    return out


def stable_rho_inf(graph: FormationGraph, desired: DesiredFormation, dt: float,
                   floor: float = 0.04) -> Tuple[float, float]:
    """Smallest (rho_inf_r, rho_inf_alpha) >= ``floor`` keeping every rate below the RK4 limit."""
    base = steady_state_rates(graph, desired, 1.0, 1.0)
    lim = RK4_SAFE_RATE_DT / dt
    need_r = max((math.sqrt(v / lim) for k, v in base.items() if k.startswith("r")), default=0.0)
    need_a = max((math.sqrt(v / lim) for k, v in base.items() if k.startswith("alpha")), default=0.0)
    return max(floor, need_r), max(floor, need_a)


def stable_distance_bounds(d_star: float, dt: float, rho_inf: float = 0.04):
    """(rho_inf, b_lower, b_upper) for a constant-distance channel that RK4 resolves.

    The squared-distance loop decays at ``2 (1/b + 1/b_bar)^2 d^2 / rho^2``
    near its target; ``b_lower`` is pinned by non-collocation, so ``b_upper``
    (and if that is not enough, ``rho_inf``) absorbs the rest.
    """
    b_lower = 0.99 * d_star * d_star
    while True:
        g = rho_inf * math.sqrt(RK4_SAFE_RATE_DT / (2.0 * d_star * d_star * dt))
        slack = g - 1.0 / b_lower
        if slack > 0.0:
            return rho_inf, b_lower, max(1.0, 1.0 / slack)
        rho_inf *= 1.25


def random_henneberg(n: int = 10, seed: int = 7) -> ScenarioConfig:
    """Random formation at rest, started near its target shape.

    Performance floors and the distance channel's upper bound are raised
    where needed so that the steady-state loop gains stay within the
    integrator's stability range.
    """
    graph, desired = random_formation(n, seed)
    dt = 1e-3
    rho_r, rho_a = stable_rho_inf(graph, desired, dt)
    rho_d, b_lower, b_upper = stable_distance_bounds(desired.d_star[(2, 1)], dt)
    target = target_positions(graph, desired)
    rng = np.random.default_rng(seed + 1)
    scale = 0.1 * min(desired.d_star.values())
    initial = [Vec2(p.x + dx, p.y + dy)
               for p, (dx, dy) in zip(target, rng.uniform(-scale, scale, size=(n, 2)))]
    initial[0] = target[0]
    return ScenarioConfig(
        graph=graph,
        desired=desired,
        initial_positions=initial,
        horizon=10.0,
        dt=dt,
        ppc={"d": PerformanceFunction(0.5, rho_d), "beta": PerformanceFunction(0.5, 0.04),
             "r": PerformanceFunction(0.5, rho_r), "alpha": PerformanceFunction(0.5, rho_a)},
        bounds={"d": (b_lower, b_upper)},
        seed=seed,
        name=f"random_henneberg_n{n}_seed{seed}",
    )


PRESETS: Dict[str, Callable[..., ScenarioConfig]] = {
    "six_agent_maneuver": six_agent_maneuver,
    "two_agents_static": two_agents_static,
    "random_henneberg": random_henneberg,
}


def make_preset(name: str, **kwargs) -> ScenarioConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None
    return factory(**kwargs)


def sample_feasible_start(scenario: ScenarioConfig, spread: float, seed: int,
                          max_tries: int = 1000) -> List[Vec2]:
    """Random initial positions around the target that pass initial containment.

    Candidates are the target shape plus uniform noise in ``[-spread, spread]``
    per coordinate; the first candidate for which every channel's bounds can
    be selected is returned.
    """
    rng = np.random.default_rng(seed)
    target = target_positions(scenario.graph, scenario.desired,
                              heading=scenario.references.beta(0.0) + scenario.orientation_frame
                              if scenario.references.has_bearing else 0.0)
    saved = scenario.initial_positions
    try:
        for _ in range(max_tries):
            noise = rng.uniform(-spread, spread, size=(scenario.n, 2))
            cand = [Vec2(p.x + dx, p.y + dy) for p, (dx, dy) in zip(target, noise)]
            scenario.initial_positions = cand
            try:
                scenario.build_channels()
            except FormationError:
                continue
            return cand
    finally:
        scenario.initial_positions = saved
    raise ScenarioError(f"no feasible start found in {max_tries} tries")


def funnel_start_scenario(fraction: float = 0.5, e_d0: float = 2.0, horizon: float = 12.0,
                          dt: float = 1e-3, bearing: bool = True) -> ScenarioConfig:
    """Six-agent shape with a resting leader and every error starting at ``fraction`` of its band.

    The distance error starts at ``e_d0`` (the default upper-bound policy then
    puts it at exactly half its band); ratio errors start at
    ``+-fraction`` with unit bounds; each edge-angle error starts on the
    tighter side of its band.  No disturbances.
    """
    graph, desired = six_agent_graph(), six_agent_desired()
    d21 = desired.d_star[(2, 1)]
    beta0 = fraction * 0.99 * math.pi if bearing else 0.0
    dist = math.sqrt(d21 * d21 + e_d0)
    pos = {1: Vec2(0.0, 0.0)}
    # bearing of 2 -> 1 is beta0, so agent 2 sits opposite to it
    pos[2] = Vec2(-dist * math.cos(beta0), -dist * math.sin(beta0))
    for n_f, k in enumerate(graph.followers):
        i, j = graph.follower_neighbors[k]
        a_star = desired.alpha_star[k]
        lower, upper = a_star, 2.0 * math.pi - a_star
        e_a = fraction * upper if upper < lower else -fraction * lower
        e_r = fraction if n_f % 2 == 0 else -fraction
        pos[k] = place_from_bipolar(pos[i], pos[j], desired.r_star[k] + e_r, a_star + e_a)
    refs = References(KeyframeSchedule(((0.0, d21),)),
                      KeyframeSchedule(((0.0, 0.0),)) if bearing else None)
    perf = PerformanceFunction(0.5, 0.04)
    return ScenarioConfig(
        graph=graph,
        desired=desired,
        initial_positions=[pos[k] for k in range(1, graph.n + 1)],
        horizon=horizon,
        dt=dt,
        references=refs,
        ppc={"d": perf, "beta": perf, "r": perf, "alpha": perf},
        frames=FrameSpec("random"),
        seed=0,
        name="funnel_start",
    )
