"""Fixed-step closed-loop integration of ``p_dot = u + delta(t)`` with logging.

Every agent senses in its own (constant, arbitrarily rotated) frame, so the
integrator only ever sees global commands that came back out of a local
computation.  Time stamps are ``k * dt`` rather than accumulated sums, which
keeps logs bit-identical across runs and platforms with the same floats.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .controllers import FormationLaw
from .errors import Collocated, FormationError, OutOfBounds
from .geometry import Vec2, bearing, edge_angle
from .scenario import ScenarioConfig

log = logging.getLogger(__name__)

CHANNEL_FIELDS = ("e", "rho", "lower", "upper", "sigma")


def channel_names(scenario: ScenarioConfig) -> List[str]:
    """Logged channels in their fixed order: d, [beta], r3, alpha3, r4, ..."""
    names = ["d"]
    if scenario.references.has_bearing:
        names.append("beta")
    for k in scenario.graph.followers:
        names += [f"r{k}", f"alpha{k}"]
    return names


class Simulator:
    """Evaluates the closed-loop vector field and advances it by one step."""

    def __init__(self, scenario: ScenarioConfig, law: Optional[FormationLaw] = None,
                 frame_rotations: Optional[Sequence[float]] = None):
        self.scenario = scenario
        self.law = law if law is not None else scenario.build_law()
        self.frames = list(frame_rotations if frame_rotations is not None
                           else scenario.frame_rotations())
        self.disturbances = scenario.disturbances
        self.dt = scenario.dt
        self.n = scenario.n
        if scenario.integrator not in ("euler", "rk4"):
            raise FormationError(f"unknown integrator {scenario.integrator!r}")
        self._rk4 = scenario.integrator == "rk4"

    def evaluate(self, world: Sequence[Vec2], t: float):
        """(velocities, commands, channel records) at ``(world, t)``.

        Velocities include the disturbance; commands are the control inputs
        alone, both in global coordinates.
        """
        law = self.law
        vel, cmds, records = [], [], {}
        for a in range(1, self.n + 1):
            try:
                u, recs = law.global_command(world, a, self.frames[a - 1], t)
            except OutOfBounds as exc:
                exc.agent = a
                exc.t = t
                if exc.channel in ("r", "alpha"):
                    exc.channel = f"{exc.channel}{a}"
                raise
            for rec in recs:
                name = rec.name if a == 2 else f"{rec.name}{a}"
                records[name] = rec
            d = self.disturbances[a - 1](t)
            cmds.append(u)
            vel.append((u[0] + d[0], u[1] + d[1]))
        return vel, cmds, records

    def step(self, world: Sequence[Vec2], t: float):
        """Advance one step from ``t``.

        Returns ``(new_world, commands, records)`` where the last two come
        from the evaluation at the start of the step.
        """
        k1, cmds, records = self.evaluate(world, t)
        return self.advance(world, t, k1), cmds, records

    def advance(self, world: Sequence[Vec2], t: float, k1) -> List[Vec2]:
        """Finish a step from ``t`` given the stage-1 velocities ``k1``."""
        h = self.dt
        if not self._rk4:
            return [Vec2(p[0] + h * v[0], p[1] + h * v[1]) for p, v in zip(world, k1)]
        h2 = 0.5 * h
        w2 = [Vec2(p[0] + h2 * v[0], p[1] + h2 * v[1]) for p, v in zip(world, k1)]
        k2 = self.evaluate(w2, t + h2)[0]
        w3 = [Vec2(p[0] + h2 * v[0], p[1] + h2 * v[1]) for p, v in zip(world, k2)]
        k3 = self.evaluate(w3, t + h2)[0]
        w4 = [Vec2(p[0] + h * v[0], p[1] + h * v[1]) for p, v in zip(world, k3)]
        k4 = self.evaluate(w4, t + h)[0]
        h6 = h / 6.0
        new = [Vec2(p[0] + h6 * (a[0] + 2.0 * b[0] + 2.0 * c[0] + d[0]),
                    p[1] + h6 * (a[1] + 2.0 * b[1] + 2.0 * c[1] + d[1]))
               for p, a, b, c, d in zip(world, k1, k2, k3, k4)]
        return new


@dataclass
class TrajectoryLog:
    """Time-indexed record of one run.

    ``positions`` and ``commands`` have shape (rows, n, 2); ``channels[name]``
    is a (rows, 5) array with columns ``CHANNEL_FIELDS``.
    """

    times: np.ndarray
    positions: np.ndarray
    commands: np.ndarray
    channels: Dict[str, np.ndarray]
    edges: Tuple[Tuple[int, int], ...]
    follower_neighbors: Dict[int, Tuple[int, int]]

    def __len__(self):
        return len(self.times)

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    def channel(self, name: str, what: str = "e") -> np.ndarray:
        return self.channels[name][:, CHANNEL_FIELDS.index(what)]

    def edge_distances(self) -> Dict[Tuple[int, int], np.ndarray]:
        p = self.positions
        return {(j, i): np.hypot(*(p[:, i - 1] - p[:, j - 1]).T) for j, i in self.edges}

    def edge_angles(self) -> Dict[int, np.ndarray]:
        """Realized follower edge-angles alpha_kij per row."""
        p = self.positions
        out = {}
        for k, (i, j) in self.follower_neighbors.items():
            a = p[:, i - 1] - p[:, k - 1]
            b = p[:, j - 1] - p[:, k - 1]
            ang = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], (a * b).sum(axis=1))
            out[k] = np.mod(ang, 2.0 * math.pi)
        return out

    def in_band(self) -> Dict[str, np.ndarray]:
        """Per-channel boolean rows where lower < e < upper."""
        return {name: (c[:, 2] < c[:, 0]) & (c[:, 0] < c[:, 3]) for name, c in self.channels.items()}


@dataclass
class RunResult:
    log: TrajectoryLog
    summary: dict
    failure: Optional[FormationError] = None

    @property
    def ok(self) -> bool:
        return self.failure is None


class _Recorder:
    def __init__(self, names):
        self.names = names
        self.times, self.positions, self.commands = [], [], []
        self.rows = {name: [] for name in names}

    def add(self, t, world, cmds, records):
        self.times.append(t)
        self.positions.append([(p[0], p[1]) for p in world])
        self.commands.append([(u[0], u[1]) for u in cmds])
        for name in self.names:
            rec = records[name]
            self.rows[name].append((rec.e, rec.rho, rec.lower, rec.upper, rec.sigma))

    def build(self, scenario):
        n = scenario.n
        pos = np.array(self.positions, dtype=float).reshape(-1, n, 2)
        cmd = np.array(self.commands, dtype=float).reshape(-1, n, 2)
        ch = {name: np.array(rows, dtype=float).reshape(-1, len(CHANNEL_FIELDS))
              for name, rows in self.rows.items()}
        return TrajectoryLog(np.array(self.times, dtype=float), pos, cmd, ch,
                             tuple(scenario.graph.edges), dict(scenario.graph.follower_neighbors))


def simulate(scenario: ScenarioConfig, frame_rotations: Optional[Sequence[float]] = None
             ) -> RunResult:
    """Run ``scenario`` over its full horizon.

    In-run failures (a channel leaving its funnel, collocated agents) stop the
    integration; the log keeps every row recorded up to that point and the
    exception is returned in ``RunResult.failure``.
    """
    started = time.perf_counter()
    law = scenario.build_law()
    sim = Simulator(scenario, law, frame_rotations)
    names = channel_names(scenario)
    rec = _Recorder(names)
    world = list(scenario.initial_positions)
    dt, steps, every = scenario.dt, scenario.n_steps, scenario.log_every
    failure = None
    k = 0
    try:
        for k in range(steps):
            t = k * dt
            k1, cmds, records = sim.evaluate(world, t)
            # record before the later stages so a failing step keeps its start row
            if k % every == 0:
                rec.add(t, world, cmds, records)
            world = sim.advance(world, t, k1)
        k = steps
        _, cmds, records = sim.evaluate(world, steps * dt)
        rec.add(steps * dt, world, cmds, records)
    except (OutOfBounds, Collocated, FormationError) as exc:
        failure = exc
        log.warning("run %s stopped at step %d: %s", scenario.name, k, exc)
    elapsed = time.perf_counter() - started
    tlog = rec.build(scenario)
    summary = summarize(scenario, law, tlog, failure, elapsed)
    return RunResult(tlog, summary, failure)


def run(scenario: ScenarioConfig) -> Tuple[TrajectoryLog, dict]:
    result = simulate(scenario)
    return result.log, result.summary


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


def summarize(scenario: ScenarioConfig, law: FormationLaw, tlog: TrajectoryLog,
              failure: Optional[FormationError], elapsed: float) -> dict:
    """Run summary as a JSON-ready dict."""
    rows = len(tlog)
    tail_start = scenario.horizon * 0.9
    tail = tlog.times >= tail_start - 1e-12 if rows else np.zeros(0, bool)
    per_channel = {}
    violation = failure is not None and isinstance(failure, OutOfBounds)
    for name, c in tlog.channels.items():
        e, r, lo, hi = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
        if rows == 0:
            continue
        e_tilde = e / r
        # fraction of the funnel used on the side the error sits on
        frac = np.where(e >= 0.0, e / hi, e / lo)
        b_lower, b_upper = -lo[0] / r[0], hi[0] / r[0]
        perf_key = "d" if name == "d" else "beta" if name == "beta" else name.rstrip("0123456789")
        perf = scenario.ppc[perf_key]
        in_inf_band = (e > -b_lower * perf.rho_inf) & (e < b_upper * perf.rho_inf)
        violation = violation or bool(np.any(frac >= 1.0))
        per_channel[name] = {
            "max_abs_e_tilde": _finite(np.max(np.abs(e_tilde))),
            "max_band_fraction": _finite(np.max(frac)),
            "steady_state_max_abs_e": _finite(np.max(np.abs(e[tail]))) if tail.any() else None,
            "steady_state_band_occupancy": _finite(np.mean(in_inf_band[tail])) if tail.any() else None,
            "b_lower": _finite(b_lower),
            "b_upper": _finite(b_upper),
            "l": perf.l,
            "rho_inf": perf.rho_inf,
            "default_policy": name not in scenario.bounds,
        }
    dists = tlog.edge_distances()
    min_dist = min((float(np.min(d)) for d in dists.values() if len(d)), default=None)
    summary = {
        "name": scenario.name,
        "seed": scenario.seed,
        "completed": failure is None,
        "rows": rows,
        "t_final": float(tlog.times[-1]) if rows else None,
        "violation": violation,
        "failure": None if failure is None else {
            "type": type(failure).__name__,
            "message": str(failure),
            "channel": getattr(failure, "channel", None),
            "agent": getattr(failure, "agent", None),
            "t": getattr(failure, "t", None),
        },
        "min_neighbor_distance": min_dist,
        "wall_clock_seconds": elapsed,
        "channels": per_channel,
        "frame_rotations": scenario.frame_rotations(),
        "config": scenario.to_dict(),
    }
    return summary
