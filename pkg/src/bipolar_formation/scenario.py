"""Scenario configuration, JSON (de)serialization and controller setup.

Scenario JSON layout::

    {
      "name": "...",
      "n": 6,
      "edges": [[2, 1], [3, 1], ...],
      "desired": {"d_star": [[j, i, d], ...],
                  "alpha_star": [[k, alpha], ...],
                  "r_star": [[k, r], ...]},
      "initial_positions": [[x, y], ...],          # agent 1 first
      "horizon": 40.0, "dt": 0.001, "integrator": "rk4",
      "log_every": 1,
      "leader_velocity": {"x": [term, ...], "y": [term, ...]},
      "disturbances": {"2": {"x": [...], "y": [...]}, ...},
      "references": {"d21": {"kind": "keyframes", "points": [[t, v], ...]},
                     "beta": null | {"kind": "leader_heading", ...},
                     "orientation_frame": 0.0},
      "ppc": {"d": {"l": 0.5, "rho_inf": 0.03},
              "beta": {...}, "r": {...}, "alpha": {...},
              "bounds": {"d": [b_lower, b_upper], "alpha3": [...], ...}},
      "frames": {"mode": "random" | "fixed", "angles": [...]},
      "seed": 0
    }

A term is ``{"kind": "const"|"sin"|"cos", "amplitude", "frequency", "phase"}``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .controllers import FollowerChannels, FollowerTarget, FormationLaw, SecondaryChannels
from .errors import FormationError, ScenarioError
from .geometry import Vec2, bearing, edge_angle
from .graph import DesiredFormation, FormationGraph, validate_desired, validate_graph
from .ppc import (PerformanceFunction, PpcChannel, select_bounds_angle, select_bounds_bearing,
                  select_bounds_distance, select_bounds_ratio)
from .schedules import (KeyframeSchedule, References, VectorSchedule, reference_from_dict)

CHANNEL_KINDS = ("d", "beta", "r", "alpha")
INTEGRATORS = ("euler", "rk4")


@dataclass
class FrameSpec:
    mode: str = "random"
    angles: Optional[List[float]] = None

    def resolve(self, n: int, seed: int) -> List[float]:
        """Per-agent local-frame rotations (local -> global), constant over a run."""
        if self.mode == "fixed":
            angles = list(self.angles or [])
            if len(angles) != n:
                raise ScenarioError(f"frames.angles needs {n} entries, got {len(angles)}")
            return [float(a) for a in angles]
        if self.mode == "random":
            rng = np.random.default_rng(seed)
            return [float(a) for a in rng.uniform(0.0, 2.0 * math.pi, size=n)]
        if self.mode == "global":
            return [0.0] * n
        raise ScenarioError(f"unknown frames.mode {self.mode!r}")


@dataclass
class ScenarioConfig:
    graph: FormationGraph
    desired: DesiredFormation
    initial_positions: List[Vec2]
    horizon: float
    dt: float
    leader_velocity: VectorSchedule = field(default_factory=VectorSchedule)
    disturbances: List[VectorSchedule] = field(default_factory=list)
    references: Optional[References] = None
    orientation_frame: float = 0.0
    ppc: Dict[str, PerformanceFunction] = field(default_factory=dict)
    bounds: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    integrator: str = "rk4"
    frames: FrameSpec = field(default_factory=FrameSpec)
    seed: int = 0
    log_every: int = 1
    name: str = "scenario"

    def __post_init__(self):
        n = self.graph.n
        self.initial_positions = [Vec2(float(x), float(y)) for x, y in self.initial_positions]
        if not self.disturbances:
            self.disturbances = [VectorSchedule() for _ in range(n)]
        if self.references is None:
            self.references = References(KeyframeSchedule(((0.0, self.desired.d_star[(2, 1)]),)))
        for kind in CHANNEL_KINDS:
            self.ppc.setdefault(kind, PerformanceFunction(0.5, 0.04))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def frame_rotations(self) -> List[float]:
        return self.frames.resolve(self.n, self.seed)

    # ------------------------------------------------------------------ checks
    def validate(self) -> List[str]:
        """All problems found; empty when the scenario can run."""
        problems = []
        if not self.dt > 0.0:
            problems.append(f"dt={self.dt!r} must be positive")
        if not self.horizon > 0.0:
            problems.append(f"horizon={self.horizon!r} must be positive")
        if self.integrator not in INTEGRATORS:
            problems.append(f"integrator {self.integrator!r} not in {INTEGRATORS}")
        if self.log_every < 1:
            problems.append("log_every must be >= 1")
        g = validate_graph(self.graph)
        problems += g.violations
        if g.ok:
            problems += validate_desired(self.graph, self.desired).violations
        if len(self.initial_positions) != self.n:
            problems.append(f"{len(self.initial_positions)} initial positions for {self.n} agents")
        if len(self.disturbances) != self.n:
            problems.append(f"{len(self.disturbances)} disturbance schedules for {self.n} agents")
        if problems:
            return problems
        try:
            self.build_law()
        except FormationError as exc:
            problems.append(f"initial containment: {exc}")
        return problems

    # ------------------------------------------------------------------ setup
    def initial_errors(self) -> Dict[str, float]:
        """Frame-free initial errors keyed by channel name (d, beta, r3, alpha3, ...)."""
        p = self.initial_positions
        refs = self.references
        out = {}
        dist = math.hypot(p[0].x - p[1].x, p[0].y - p[1].y)
        out["d"] = dist * dist - refs.d21(0.0) ** 2
        if refs.has_bearing:
            z = bearing(p[1], p[0])
            c, s = math.cos(-self.orientation_frame), math.sin(-self.orientation_frame)
            out["beta"] = math.atan2(s * z.x + c * z.y, c * z.x - s * z.y) - refs.beta(0.0)
        for k, (i, j) in self.graph.follower_neighbors.items():
            d_ki = (p[i - 1] - p[k - 1]).norm()
            d_kj = (p[j - 1] - p[k - 1]).norm()
            out[f"r{k}"] = math.log(d_ki / d_kj) - self.desired.r_star[k]
            out[f"alpha{k}"] = (edge_angle(bearing(p[k - 1], p[i - 1]), bearing(p[k - 1], p[j - 1]))
                                - self.desired.alpha_star[k])
        return out

    def _override(self, name, perf):
        if name in self.bounds:
            bl, bu = self.bounds[name]
            return PpcChannel(perf, float(bl), float(bu))
        return None

    def build_channels(self) -> Dict[int, object]:
        """Select performance bounds for every agent from its initial errors."""
        e0 = self.initial_errors()
        refs = self.references
        ch: Dict[int, object] = {}
        perf_d = self.ppc["d"]
        d_ch = self._override("d", perf_d)
        if d_ch is None:
            d_ch = select_bounds_distance(refs.d21, perf_d, e0["d"], self.horizon)
        elif not d_ch.contains(e0["d"], 0.0):
            raise ScenarioError(f"distance channel: initial error {e0['d']!r} outside overridden bounds")
        b_ch = None
        if refs.has_bearing:
            perf_b = self.ppc["beta"]
            b_ch = self._override("beta", perf_b)
            if b_ch is None:
                b_ch = select_bounds_bearing(refs.beta, perf_b, e0["beta"], self.horizon)
            elif not b_ch.contains(e0["beta"], 0.0):
                raise ScenarioError("bearing channel: initial error outside overridden bounds")
        ch[2] = SecondaryChannels(d_ch, b_ch)
        for k in self.graph.followers:
            perf_r, perf_a = self.ppc["r"], self.ppc["alpha"]
            r_ch = self._override(f"r{k}", perf_r) or select_bounds_ratio(perf_r, e0[f"r{k}"])
            a_ch = (self._override(f"alpha{k}", perf_a)
                    or select_bounds_angle(self.desired.alpha_star[k], perf_a, e0[f"alpha{k}"]))
            for c, name in ((r_ch, f"r{k}"), (a_ch, f"alpha{k}")):
                if not c.contains(e0[name], 0.0):
                    raise ScenarioError(f"{name}: initial error {e0[name]!r} outside bounds")
            ch[k] = FollowerChannels(r_ch, a_ch)
        return ch

    def build_law(self) -> FormationLaw:
        targets = {k: FollowerTarget(self.desired.r_star[k], self.desired.alpha_star[k])
                   for k in self.graph.followers}
        return FormationLaw(self.graph, targets, self.build_channels(), self.leader_velocity,
                            self.references, self.orientation_frame)

    # ------------------------------------------------------------------ serialization
    def to_dict(self) -> dict:
        refs = self.references
        return {
            "name": self.name,
            "n": self.n,
            "edges": [list(e) for e in self.graph.edges],
            "desired": {
                "d_star": [[j, i, d] for (j, i), d in sorted(self.desired.d_star.items())],
                "alpha_star": [[k, a] for k, a in sorted(self.desired.alpha_star.items())],
                "r_star": [[k, r] for k, r in sorted(self.desired.r_star.items())],
            },
            "initial_positions": [[p.x, p.y] for p in self.initial_positions],
            "horizon": self.horizon,
            "dt": self.dt,
            "integrator": self.integrator,
            "log_every": self.log_every,
            "leader_velocity": self.leader_velocity.to_dict(),
            "disturbances": {str(k + 1): d.to_dict() for k, d in enumerate(self.disturbances)
                             if not d.is_zero},
            "references": {
                "d21": refs.d21_schedule.to_dict(),
                "beta": refs.beta_schedule.to_dict() if refs.has_bearing else None,
                "orientation_frame": self.orientation_frame,
            },
            "ppc": {
                **{k: {"l": p.l, "rho_inf": p.rho_inf} for k, p in self.ppc.items()},
                "bounds": {k: list(v) for k, v in self.bounds.items()},
            },
            "frames": {"mode": self.frames.mode, "angles": self.frames.angles},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        try:
            return cls._from_dict(d)
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc!r}") from exc

    @classmethod
    def _from_dict(cls, d: dict) -> "ScenarioConfig":
        n = int(d["n"])
        graph = FormationGraph(n, tuple(tuple(e) for e in d["edges"]))
        des = d["desired"]
        desired = DesiredFormation(
            {(int(j), int(i)): float(v) for j, i, v in des["d_star"]},
            {int(k): float(a) for k, a in des.get("alpha_star", [])},
            {int(k): float(r) for k, r in des.get("r_star", [])},
        )
        leader = VectorSchedule.from_dict(d.get("leader_velocity"))
        dist = d.get("disturbances") or {}
        disturbances = [VectorSchedule.from_dict(dist.get(str(k))) for k in range(1, n + 1)]
        refs_d = d.get("references") or {}
        d21 = reference_from_dict(refs_d.get("d21"), leader)
        if d21 is None:
            d21 = KeyframeSchedule(((0.0, desired.d_star[(2, 1)]),))
        beta = reference_from_dict(refs_d.get("beta"), leader)
        ppc_d = dict(d.get("ppc") or {})
        bounds = {k: tuple(v) for k, v in (ppc_d.pop("bounds", None) or {}).items()}
        ppc = {k: PerformanceFunction(float(v["l"]), float(v["rho_inf"])) for k, v in ppc_d.items()}
        frames_d = d.get("frames") or {}
        return cls(
            graph=graph,
            desired=desired,
            initial_positions=[Vec2(float(x), float(y)) for x, y in d["initial_positions"]],
            horizon=float(d["horizon"]),
            dt=float(d["dt"]),
            leader_velocity=leader,
            disturbances=disturbances,
            references=References(d21, beta),
            orientation_frame=float(refs_d.get("orientation_frame", 0.0)),
            ppc=ppc,
            bounds=bounds,
            integrator=d.get("integrator", "rk4"),
            frames=FrameSpec(frames_d.get("mode", "random"), frames_d.get("angles")),
            seed=int(d.get("seed", 0)),
            log_every=int(d.get("log_every", 1)),
            name=d.get("name", "scenario"),
        )


def load_scenario_dict(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_scenario(path) -> ScenarioConfig:
    try:
        return ScenarioConfig.from_dict(load_scenario_dict(path))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc


def save_scenario(scenario: ScenarioConfig, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")


def apply_overrides(d: dict, overrides: Sequence[str]) -> dict:
    """Apply ``key=value`` overrides (dotted keys address nested fields)."""
    d = copy.deepcopy(d)
    for item in overrides:
        if "=" not in item:
            raise ScenarioError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = d
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return d
