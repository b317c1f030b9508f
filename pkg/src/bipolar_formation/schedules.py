"""Closed-form time signals: sinusoid term sums and C^1 reference profiles.

All schedules serialize to plain dicts/lists so scenarios stay JSON.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .errors import ScenarioError
from .geometry import Vec2

_KINDS = ("const", "sin", "cos")


@dataclass(frozen=True)
class Term:
    """``amplitude * f(frequency * t + phase)`` with f in {1, sin, cos}."""

    kind: str = "sin"
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ScenarioError(f"unknown term kind {self.kind!r}")

    def __call__(self, t: float) -> float:
        if self.kind == "const":
            return self.amplitude
        arg = self.frequency * t + self.phase
        return self.amplitude * (math.sin(arg) if self.kind == "sin" else math.cos(arg))

    def derivative(self, t: float) -> float:
        if self.kind == "const":
            return 0.0
        arg = self.frequency * t + self.phase
        w = self.amplitude * self.frequency
        return w * math.cos(arg) if self.kind == "sin" else -w * math.sin(arg)

    def to_dict(self):
        return {"kind": self.kind, "amplitude": self.amplitude,
                "frequency": self.frequency, "phase": self.phase}

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("kind", "sin"), float(d.get("amplitude", 0.0)),
                   float(d.get("frequency", 0.0)), float(d.get("phase", 0.0)))


@dataclass(frozen=True)
class TermSum:
    terms: Tuple[Term, ...] = ()

    def __call__(self, t: float) -> float:
        total = 0.0
        for term in self.terms:
            total += term(t)
        return total

    def derivative(self, t: float) -> float:
        return sum(term.derivative(t) for term in self.terms) if self.terms else 0.0

    def to_list(self):
        return [term.to_dict() for term in self.terms]

    @classmethod
    def from_list(cls, items):
        return cls(tuple(Term.from_dict(d) for d in (items or ())))


@dataclass(frozen=True)
class VectorSchedule:
    """A planar signal; used for leader velocities and disturbances."""

    x: TermSum = field(default_factory=TermSum)
    y: TermSum = field(default_factory=TermSum)

    def __call__(self, t: float) -> Vec2:
        return Vec2(self.x(t), self.y(t))

    def derivative(self, t: float) -> Vec2:
        return Vec2(self.x.derivative(t), self.y.derivative(t))

    @property
    def is_zero(self) -> bool:
        return not self.x.terms and not self.y.terms

    def to_dict(self):
        return {"x": self.x.to_list(), "y": self.y.to_list()}

    @classmethod
    def from_dict(cls, d):
        if d is None:
            return cls()
        return cls(TermSum.from_list(d.get("x")), TermSum.from_list(d.get("y")))


DisturbanceSchedule = VectorSchedule


def disturbance(sched: VectorSchedule, t: float) -> Vec2:
    return sched(t)


def smoothstep(s: float) -> float:
    """Quintic 0 -> 1 blend with zero first and second derivatives at both ends."""
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def smoothstep_derivative(s: float) -> float:
    if s <= 0.0 or s >= 1.0:
        return 0.0
    return 30.0 * s * s * (1.0 - s) * (1.0 - s)


@dataclass(frozen=True)
class KeyframeSchedule:
    """Piecewise profile through ``(t, value)`` keyframes joined by smoothsteps.

    Constant before the first and after the last keyframe.
    """

    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(t), float(v)) for t, v in self.points)
        if not pts:
            raise ScenarioError("keyframe schedule needs at least one point")
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ScenarioError("keyframe times must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def _segment(self, t):
        pts = self.points
        if t <= pts[0][0]:
            return None, pts[0][1]
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if t < t1:
                return (t0, v0, t1, v1), None
        return None, pts[-1][1]

    def __call__(self, t: float) -> float:
        seg, const = self._segment(t)
        if seg is None:
            return const
        t0, v0, t1, v1 = seg
        return v0 + (v1 - v0) * smoothstep((t - t0) / (t1 - t0))

    def derivative(self, t: float) -> float:
        seg, _ = self._segment(t)
        if seg is None:
            return 0.0
        t0, v0, t1, v1 = seg
        return (v1 - v0) * smoothstep_derivative((t - t0) / (t1 - t0)) / (t1 - t0)

    def to_dict(self):
        return {"kind": "keyframes", "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class HeadingSchedule:
    """Blend from zero into ``heading(velocity(t)) + offset``.

    The blend weight is a smoothstep over ``[start, start + ramp]`` so the
    result is continuously differentiable.
    """

    velocity: VectorSchedule
    offset: float = 0.0
    start: float = 0.0
    ramp: float = 1.0

    def _heading(self, t):
        v = self.velocity(t)
        return math.atan2(v.y, v.x)

    def _heading_rate(self, t):
        v = self.velocity(t)
        dv = self.velocity.derivative(t)
        return (v.x * dv.y - v.y * dv.x) / (v.x * v.x + v.y * v.y)

    def __call__(self, t: float) -> float:
        w = smoothstep((t - self.start) / self.ramp)
        if w == 0.0:
            return 0.0
        return w * (self._heading(t) + self.offset)

    def derivative(self, t: float) -> float:
        s = (t - self.start) / self.ramp
        w = smoothstep(s)
        if w == 0.0:
            return 0.0
        dw = smoothstep_derivative(s) / self.ramp
        return dw * (self._heading(t) + self.offset) + w * self._heading_rate(t)

    def to_dict(self):
        return {"kind": "leader_heading", "offset": self.offset,
                "start": self.start, "ramp": self.ramp}


def reference_from_dict(d, leader_velocity: Optional[VectorSchedule] = None):
    if d is None:
        return None
    if isinstance(d, (int, float)):
        return KeyframeSchedule(((0.0, float(d)),))
    kind = d.get("kind", "keyframes")
    if kind == "constant":
        return KeyframeSchedule(((0.0, float(d["value"])),))
    if kind == "keyframes":
        return KeyframeSchedule(tuple(tuple(p) for p in d["points"]))
    if kind == "leader_heading":
        if leader_velocity is None:
            raise ScenarioError("leader_heading reference needs a leader velocity schedule")
        return HeadingSchedule(leader_velocity, float(d.get("offset", 0.0)),
                               float(d.get("start", 0.0)), float(d.get("ramp", 1.0)))
    raise ScenarioError(f"unknown reference kind {kind!r}")


@dataclass(frozen=True)
class References:
    """Secondary-leader references: desired distance and (optional) bearing angle."""

    d21_schedule: KeyframeSchedule
    beta_schedule: Optional[object] = None

    @property
    def has_bearing(self) -> bool:
        return self.beta_schedule is not None

    def d21(self, t: float) -> float:
        return self.d21_schedule(t)

    def d21_dot(self, t: float) -> float:
        return self.d21_schedule.derivative(t)

    def beta(self, t: float) -> float:
        return self.beta_schedule(t)

    def beta_dot(self, t: float) -> float:
        return self.beta_schedule.derivative(t)


def reference_d21(refs: References, t: float) -> float:
    return refs.d21(t)


def reference_beta(refs: References, t: float) -> float:
    return refs.beta(t)


def maneuver_velocity() -> VectorSchedule:
    """Leader input [1.25, (pi/4) cos(pi t / 6)]."""
    return VectorSchedule(
        TermSum((Term("const", 1.25),)),
        TermSum((Term("cos", math.pi / 4, math.pi / 6, 0.0),)),
    )


# Narrow-passage profile: hold 1.875 until t=16, shrink, hold, recover by t=26.
MANEUVER_D21_POINTS: Sequence[Tuple[float, float]] = (
    (16.0, 1.875), (19.0, 1.1), (23.0, 1.1), (26.0, 1.875))


def maneuver_references(velocity: Optional[VectorSchedule] = None) -> References:
    velocity = velocity or maneuver_velocity()
    return References(KeyframeSchedule(tuple(MANEUVER_D21_POINTS)),
                      HeadingSchedule(velocity, offset=-math.pi / 6, start=13.0, ramp=1.5))


def maneuver_disturbances() -> List[VectorSchedule]:
    """Per-agent disturbances, index 0 is agent 1 (undisturbed)."""
    pi = math.pi
    a = TermSum((Term("sin", 0.75, 4.0, pi / 5), Term("sin", 0.5, 2.0, 3 * pi / 4)))
    b = TermSum((Term("cos", 0.25, 3.0, pi / 3), Term("sin", 0.75, 2.0, -pi / 5)))
    d3x = TermSum((Term("sin", 0.75, 1.0, 0.0),))
    d3y = TermSum((Term("cos", 0.25, 1.0, pi / 6), Term("sin", 0.25, 2.0, pi / 4)))
    d4x = TermSum((Term("cos", 0.5, 5.0, pi / 8), Term("sin", 0.5, 1.0, pi / 5)))
    d5y = TermSum((Term("cos", 0.5, 1.0, 0.0),))
    d6x = TermSum((Term("sin", 0.5, 2.0, pi / 4),))
    return [
        VectorSchedule(),
        VectorSchedule(a, b),
        VectorSchedule(d3x, d3y),
        VectorSchedule(d4x, b),
        VectorSchedule(b, d5y),
        VectorSchedule(d6x, a),
    ]
