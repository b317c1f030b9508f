"""Decentralized control laws for leader, secondary leader and followers.

Every law consumes a sensing snapshot expressed in the agent's own frame and
returns a velocity command in that same frame.  Nothing here ever sees a
global position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from .errors import OutOfBounds
from .geometry import (Vec2, bipolar_basis, edge_angle, log_ratio,
                       reconstruct_neighbor_bearing, rotate)
from .graph import FormationGraph
from .ppc import PpcChannel
from .schedules import References, VectorSchedule
from .sensing import FollowerSnapshot, SecondarySnapshot, sense, to_global

ZERO = Vec2(0.0, 0.0)


class ChannelState(NamedTuple):
    """One channel's error shaping at a time instant (for logging)."""

    name: str
    e: float
    rho: float
    lower: float
    upper: float
    sigma: float


@dataclass(frozen=True)
class SecondaryChannels:
    distance: PpcChannel
    bearing: Optional[PpcChannel] = None


@dataclass(frozen=True)
class FollowerChannels:
    ratio: PpcChannel
    angle: PpcChannel


class FollowerTarget(NamedTuple):
    r_star: float
    alpha_star: float


def secondary_leader_errors(s: SecondarySnapshot, t: float = 0.0):
    """(e_d, e_beta); e_beta is None without a bearing reference."""
    e_d = s.dist_21 * s.dist_21 - s.d_star * s.d_star
    if s.beta_star is None:
        return e_d, None
    z = s.z_21 if s.ref_rotation == 0.0 else rotate(s.ref_rotation, s.z_21)
    # no wrapping: the bearing funnel keeps beta away from +-pi
    return e_d, math.atan2(z[1], z[0]) - s.beta_star


def follower_errors(s: FollowerSnapshot, desired: FollowerTarget):
    """(e_r, e_alpha) from the measured ratio and bearings."""
    r = math.log(s.ratio)
    alpha = edge_angle(s.z_ki, s.z_kj)
    return r - desired[0], alpha - desired[1]


def control_leader(schedule: VectorSchedule, t: float) -> Vec2:
    return schedule(t)


def _shape(ch: PpcChannel, e: float, t: float, name: str):
    """xi * sigma for channel ``ch``, plus its logging record."""
    try:
        rho_t, _, sigma, xi_v = ch.shaped(e, t)
    except OutOfBounds as exc:
        exc.channel = name
        exc.t = t
        raise
    return xi_v * sigma, ChannelState(name, e, rho_t, -ch.b_lower * rho_t, ch.b_upper * rho_t, sigma)


def secondary_command(s: SecondarySnapshot, channels: SecondaryChannels, t: float):
    """Command plus channel records for the secondary leader."""
    e_d, e_beta = secondary_leader_errors(s, t)
    g_d, rec_d = _shape(channels.distance, e_d, t, "d")
    k = g_d * s.dist_21
    ux, uy = k * s.z_21[0], k * s.z_21[1]
    records = [rec_d]
    if channels.bearing is not None and e_beta is not None:
        g_b, rec_b = _shape(channels.bearing, e_beta, t, "beta")
        # + g_b * J z_21
        ux -= g_b * s.z_21[1]
        uy += g_b * s.z_21[0]
        records.append(rec_b)
    return Vec2(ux, uy), records


def control_secondary(s: SecondarySnapshot, channels: SecondaryChannels, t: float) -> Vec2:
    return secondary_command(s, channels, t)[0]


def follower_command(s: FollowerSnapshot, channels: FollowerChannels, desired: FollowerTarget,
                     t: float):
    """Command plus channel records for a follower."""
    z_ji = reconstruct_neighbor_bearing(s.z_ki, s.z_kj, s.ratio)
    r = log_ratio(s.ratio, 1.0)
    alpha = edge_angle(s.z_ki, s.z_kj)
    g_r, rec_r = _shape(channels.ratio, r - desired[0], t, "r")
    g_a, rec_a = _shape(channels.angle, alpha - desired[1], t, "alpha")
    basis = bipolar_basis(r, alpha, z_ji)
    rh, ah = basis.r_hat, basis.alpha_hat
    u = Vec2(-g_r * rh[0] - g_a * ah[0], -g_r * rh[1] - g_a * ah[1])
    return u, [rec_r, rec_a]


def control_follower(s: FollowerSnapshot, channels: FollowerChannels, desired: FollowerTarget,
                     t: float) -> Vec2:
    return follower_command(s, channels, desired, t)[0]


@dataclass
class FormationLaw:
    """Everything the n agents need to compute their commands.

    ``channels[k]`` is a SecondaryChannels for k == 2 and FollowerChannels
    for followers; ``targets[k]`` the follower's (r*, alpha*).
    """

    graph: FormationGraph
    targets: Dict[int, FollowerTarget]
    channels: Dict[int, object]
    leader_velocity: VectorSchedule
    references: References
    orientation_frame: float = 0.0

    def command(self, agent: int, snapshot, t: float):
        """(local command, channel records) for ``agent``."""
        if agent == 1:
            return control_leader(self.leader_velocity, t), []
        if agent == 2:
            return secondary_command(snapshot, self.channels[2], t)
        return follower_command(snapshot, self.channels[agent], self.targets[agent], t)

    def global_command(self, world, agent: int, frame_rot: float, t: float):
        """Sense in a frame rotated by ``frame_rot``, act, rotate back to global."""
        snap = sense(world, self.graph, agent, frame_rot, t, self.references,
                     self.orientation_frame)
        u, records = self.command(agent, snap, t)
        if agent == 1:
            return u, records
        return to_global(u, frame_rot), records


def frame_invariance_check(world: Sequence[Vec2], law: FormationLaw, agent: int, theta: float,
                           t: float = 0.0, tol: float = 1e-12) -> bool:
    """True iff acting in a frame rotated by ``theta`` gives the same global command."""
    u0, _ = law.global_command(world, agent, 0.0, t)
    u1, _ = law.global_command(world, agent, theta, t)
    return math.hypot(u1[0] - u0[0], u1[1] - u0[1]) <= tol * max(1.0, math.hypot(u0[0], u0[1]))
