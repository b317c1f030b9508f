"""What each agent is allowed to measure, expressed in its own frame.

Snapshots carry no global positions: a follower sees two unit bearings and
the ratio of the distances to its neighbours, the secondary leader sees the
bearing and distance to the leader.  Bearings are rotated into the agent's
local frame, whose orientation relative to the global frame is
``frame_rot`` (local -> global rotation angle).
"""
from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence

from .geometry import Vec2, bearing, rotate
from .graph import FormationGraph

WorldState = Sequence[Vec2]


class SecondarySnapshot(NamedTuple):
    z_21: Vec2
    dist_21: float
    d_star: float = float("nan")
    d_star_dot: float = 0.0
    beta_star: Optional[float] = None
    # local frame -> orientation-reference frame
    ref_rotation: float = 0.0


class FollowerSnapshot(NamedTuple):
    z_ki: Vec2
    z_kj: Vec2
    ratio: float


def to_local(v: Vec2, frame_rot: float) -> Vec2:
    if frame_rot == 0.0:
        return v
    return rotate(-frame_rot, v)


def to_global(v: Vec2, frame_rot: float) -> Vec2:
    if frame_rot == 0.0:
        return v
    return rotate(frame_rot, v)


def sense(world: WorldState, graph: FormationGraph, agent: int, frame_rot: float = 0.0,
          t: float = 0.0, references=None, orientation_frame: float = 0.0):
    """Snapshot of the quantities ``agent`` can measure at ``world``.

    ``references`` (optional) supplies ``d21(t)``, ``d21_dot(t)`` and
    ``beta(t)`` for the secondary leader; ``orientation_frame`` is the
    global rotation of the frame in which its bearing angle is defined.
    Returns ``None`` for the leader, which senses nothing.
    """
    if agent == 1:
        return None
    p_k = world[agent - 1]
    if agent == 2:
        p_1 = world[0]
        z = bearing(p_k, p_1)
        dist = math.hypot(p_1[0] - p_k[0], p_1[1] - p_k[1])
        if references is None:
            return SecondarySnapshot(to_local(z, frame_rot), dist,
                                     ref_rotation=frame_rot - orientation_frame)
        return SecondarySnapshot(
            to_local(z, frame_rot), dist,
            d_star=references.d21(t), d_star_dot=references.d21_dot(t),
            beta_star=references.beta(t) if references.has_bearing else None,
            ref_rotation=frame_rot - orientation_frame)
    i, j = graph.follower_neighbors[agent]
    p_i, p_j = world[i - 1], world[j - 1]
    z_ki = bearing(p_k, p_i)
    z_kj = bearing(p_k, p_j)
    d_ki = math.hypot(p_i[0] - p_k[0], p_i[1] - p_k[1])
    d_kj = math.hypot(p_j[0] - p_k[0], p_j[1] - p_k[1])
    return FollowerSnapshot(to_local(z_ki, frame_rot), to_local(z_kj, frame_rot), d_ki / d_kj)
