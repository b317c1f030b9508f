"""Prescribed-performance error shaping.

An error channel ``e(t)`` is kept inside the funnel
``-b_lower * rho(t) < e(t) < b_upper * rho(t)`` by driving the transformed
error ``sigma = T(e / rho)`` which diverges at both funnel walls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InfeasibleInitialError, OutOfBounds, PpcError

MARGIN = 0.99
GRID_DT = 0.01


@dataclass(frozen=True)
class PerformanceFunction:
    """rho(t) = (1 - rho_inf) exp(-l t) + rho_inf."""

    l: float
    rho_inf: float

    def __post_init__(self):
        if not self.l > 0.0:
            raise PpcError(f"decay rate l must be positive, got {self.l!r}")
        if not 0.0 < self.rho_inf <= 1.0:
            raise PpcError(f"rho_inf must lie in (0, 1], got {self.rho_inf!r}")

    def __call__(self, t: float) -> float:
        return (1.0 - self.rho_inf) * math.exp(-self.l * t) + self.rho_inf

    def derivative(self, t: float) -> float:
        return -self.l * (1.0 - self.rho_inf) * math.exp(-self.l * t)

    def time_to_reach(self, level: float) -> float:
        """First time rho(t) equals ``level`` (must lie in (rho_inf, 1])."""
        if not self.rho_inf < level <= 1.0:
            raise PpcError(f"rho never equals {level!r}")
        return math.log((1.0 - self.rho_inf) / (level - self.rho_inf)) / self.l


def rho(perf: PerformanceFunction, t: float, derivative: bool = False):
    """Value of the performance function, optionally with its time derivative."""
    if derivative:
        return perf(t), perf.derivative(t)
    return perf(t)


@dataclass(frozen=True)
class PpcChannel:
    perf: PerformanceFunction
    b_lower: float
    b_upper: float

    def __post_init__(self):
        if not (self.b_lower > 0.0 and self.b_upper > 0.0):
            raise PpcError(f"bounds must be positive, got ({self.b_lower!r}, {self.b_upper!r})")

    def bounds_at(self, t: float):
        r = self.perf(t)
        return -self.b_lower * r, self.b_upper * r

    def contains(self, e: float, t: float) -> bool:
        lo, hi = self.bounds_at(t)
        return lo < e < hi

    def shaped(self, e: float, t: float):
        """(rho, e_tilde, sigma, xi) for error ``e`` at time ``t``."""
        r = self.perf(t)
        et = e / r
        return r, et, transform(self, et), xi(self, et, r)


def modulated_error(e: float, rho_t: float) -> float:
    return e / rho_t


def _check_band(ch: PpcChannel, e_tilde: float):
    if not -ch.b_lower < e_tilde < ch.b_upper:
        raise OutOfBounds(
            f"modulated error {e_tilde!r} outside ({-ch.b_lower!r}, {ch.b_upper!r})",
            value=e_tilde)


def transform(ch: PpcChannel, e_tilde: float) -> float:
    """sigma = ln((bu*e + bu*bl) / (bu*bl - bl*e)), strictly increasing, T(0) = 0."""
    _check_band(ch, e_tilde)
    bl, bu = ch.b_lower, ch.b_upper
    num = bu * e_tilde + bu * bl
    den = bu * bl - bl * e_tilde
    if num <= 0.0 or den <= 0.0:
        raise OutOfBounds(f"modulated error {e_tilde!r} at a performance bound", value=e_tilde)
    return math.log(num / den)


def inverse_transform(ch: PpcChannel, sigma: float) -> float:
    """Map a transformed error back into (-b_lower, b_upper)."""
    bl, bu = ch.b_lower, ch.b_upper
    # bu(e + bl) = w bl (bu - e) with w = exp(sigma); written in the stable
    # logistic form for either sign of sigma.
    if sigma >= 0.0:
        w = math.exp(-sigma)
        return bl * bu * (1.0 - w) / (bu * w + bl)
    w = math.exp(sigma)
    return bl * bu * (w - 1.0) / (bu + bl * w)


def xi(ch: PpcChannel, e_tilde: float, rho_t: float) -> float:
    """(1/rho) dT/de_tilde, strictly positive inside the band."""
    _check_band(ch, e_tilde)
    return (1.0 / (e_tilde + ch.b_lower) - 1.0 / (e_tilde - ch.b_upper)) / rho_t


def _grid(horizon: float, dt: float = GRID_DT):
    steps = int(math.ceil(horizon / dt - 1e-9))
    return np.linspace(0.0, steps * dt, steps + 1)


def _sample(traj, ts):
    return np.array([traj(float(t)) for t in ts], dtype=float)


def _rho_grid(perf, ts):
    return (1.0 - perf.rho_inf) * np.exp(-perf.l * ts) + perf.rho_inf


def _contain(e0, b_lower, b_upper, perf, name):
    r0 = perf(0.0)
    if not -b_lower * r0 < e0 < b_upper * r0:
        raise InfeasibleInitialError(
            f"{name}: initial error {e0!r} outside ({-b_lower * r0!r}, {b_upper * r0!r})")


def select_bounds_distance(d_star_traj: Callable[[float], float], perf: PerformanceFunction,
                           e0: float, horizon: float = 0.0, b_upper: Optional[float] = None,
                           dt: float = GRID_DT) -> PpcChannel:
    """Bounds for the squared-distance error of the secondary leader.

    The lower wall keeps ``b_lower * rho(t) <= d*(t)^2`` on the reference
    grid so that the distance can never reach zero inside the funnel.
    """
    ts = _grid(horizon, dt)
    d = _sample(d_star_traj, ts)
    if not np.all(d > 0.0):
        raise PpcError("desired distance must stay positive")
    b_lower = MARGIN * float(np.min(d * d / _rho_grid(perf, ts)))
    if b_upper is None:
        b_upper = max(1.0, 2.0 * e0 / perf(0.0)) if e0 > 0.0 else 1.0
    _contain(e0, b_lower, b_upper, perf, "distance channel")
    return PpcChannel(perf, b_lower, float(b_upper))


def select_bounds_angle(alpha_star: float, perf: PerformanceFunction, e0: float) -> PpcChannel:
    """Funnel that keeps the edge-angle inside (0, 2*pi)."""
    if not 0.0 < alpha_star < 2.0 * math.pi:
        raise PpcError(f"desired angle {alpha_star!r} outside (0, 2pi)")
    b_lower = alpha_star
    b_upper = 2.0 * math.pi - alpha_star
    _contain(e0, b_lower, b_upper, perf, "angle channel")
    return PpcChannel(perf, b_lower, b_upper)


def select_bounds_ratio(perf: PerformanceFunction, e0: float) -> PpcChannel:
    b = max(1.0, 2.0 * abs(e0) / perf(0.0))
    _contain(e0, b, b, perf, "ratio channel")
    return PpcChannel(perf, b, b)


def select_bounds_bearing(beta_star_traj: Callable[[float], float], perf: PerformanceFunction,
                          e0: float, horizon: float = 0.0, dt: float = GRID_DT) -> PpcChannel:
    """Funnel that keeps the secondary leader's bearing angle inside (-pi, pi)."""
    ts = _grid(horizon, dt)
    beta = _sample(beta_star_traj, ts)
    if not np.all(np.abs(beta) < math.pi):
        raise PpcError("desired bearing angle must stay inside (-pi, pi)")
    rg = _rho_grid(perf, ts)
    b_lower = MARGIN * float(np.min((math.pi + beta) / rg))
    b_upper = MARGIN * float(np.min((math.pi - beta) / rg))
    _contain(e0, b_lower, b_upper, perf, "bearing channel")
    return PpcChannel(perf, b_lower, b_upper)
