"""Directed triangulated sensing graphs and desired formations.

Vertices are 1-indexed.  An edge ``(j, i)`` means agent j senses agent i
(j follows i), and always has ``i < j``.  Agent 1 is the leader, agent 2 the
secondary leader and every agent k >= 3 follows exactly two lower-indexed
neighbours i < j that are themselves joined by the edge (j, i).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .errors import BadAngle, GraphError, InconsistentTriangle

Edge = Tuple[int, int]

TWO_PI = 2.0 * math.pi
COSINE_RTOL = 1e-9
RATIO_ATOL = 1e-12


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def raise_if_failed(self, exc=GraphError):
        if self.violations:
            raise exc("; ".join(self.violations))


@dataclass(frozen=True)
class FormationGraph:
    n: int
    edges: Tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(j), int(i)) for j, i in self.edges))

    def out_neighbors(self, k: int) -> Tuple[int, ...]:
        return tuple(sorted(i for j, i in self.edges if j == k))

    def out_degree(self, k: int) -> int:
        return sum(1 for j, _ in self.edges if j == k)

    @property
    def followers(self) -> range:
        return range(3, self.n + 1)

    @cached_property
    def follower_neighbors(self) -> Mapping[int, Tuple[int, int]]:
        """Ordered neighbour pair (i, j), i < j, of every follower k >= 3."""
        out = {}
        for k in self.followers:
            nb = self.out_neighbors(k)
            if len(nb) == 2:
                out[k] = (nb[0], nb[1])
        return MappingProxyType(out)

    def construction_order(self) -> List[int]:
        """Vertices in an order where every neighbour precedes its follower."""
        placed: List[int] = []
        remaining = set(range(1, self.n + 1))
        while remaining:
            ready = sorted(v for v in remaining
                           if all(i in placed for i in self.out_neighbors(v)))
            if not ready:
                raise GraphError("sensing graph contains a directed cycle")
            placed.append(ready[0])
            remaining.discard(ready[0])
        return placed


def validate_graph(graph: FormationGraph) -> ValidationReport:
    rep = ValidationReport()
    n = graph.n
    if n < 2:
        rep.violations.append(f"n={n} < 2")
        return rep
    seen = set()
    for e in graph.edges:
        j, i = e
        if not (1 <= i <= n and 1 <= j <= n):
            rep.violations.append(f"edge {e}: vertex outside 1..{n}")
            continue
        if i == j:
            rep.violations.append(f"edge {e}: self-loop")
            continue
        if e in seen:
            rep.violations.append(f"edge {e}: duplicated")
        if (i, j) in seen:
            rep.violations.append(f"edge {e}: present in both directions")
        seen.add(e)
        if not i < j:
            rep.violations.append(f"edge {e}: direction must be from higher to lower index")
    expected = {1: 0, 2: 1}
    for k in range(1, n + 1):
        want = expected.get(k, 2)
        got = graph.out_degree(k)
        if got != want:
            rep.violations.append(f"out({k})={got}≠{want}")
    if n >= 2 and (2, 1) not in seen:
        rep.violations.append("edge (2, 1) missing")
    for k, (i, j) in graph.follower_neighbors.items():
        if (j, i) not in seen:
            rep.violations.append(
                f"triangulation: follower {k} has neighbours ({i}, {j}) but edge ({j}, {i}) is missing")
    if len(graph.edges) != 2 * n - 3:
        rep.violations.append(f"|E|={len(graph.edges)}≠2n-3={2 * n - 3}")
    return rep


@dataclass(frozen=True)
class DesiredFormation:
    """Desired distances per edge plus edge-angle and log-ratio per follower."""

    d_star: Mapping[Edge, float]
    alpha_star: Mapping[int, float]
    r_star: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(self, "d_star",
                           {(int(j), int(i)): float(v) for (j, i), v in self.d_star.items()})
        object.__setattr__(self, "alpha_star",
                           {int(k): float(v) for k, v in self.alpha_star.items()})
        object.__setattr__(self, "r_star",
                           {int(k): float(v) for k, v in self.r_star.items()})

    @classmethod
    def from_triangles(cls, graph: FormationGraph, d21: float,
                       followers: Mapping[int, Tuple[float, float, float]]) -> "DesiredFormation":
        """Build from d*_21 and per-follower ``(d_ki, d_kj, alpha)``."""
        d_star = {(2, 1): float(d21)}
        alpha_star, r_star = {}, {}
        for k, (i, j) in graph.follower_neighbors.items():
            d_ki, d_kj, alpha = followers[k]
            d_star[(k, i)] = float(d_ki)
            d_star[(k, j)] = float(d_kj)
            alpha_star[k] = float(alpha)
            r_star[k] = math.log(d_ki / d_kj)
        return cls(d_star, alpha_star, r_star)

    @classmethod
    def from_distances(cls, graph: FormationGraph, d_star: Mapping[Edge, float],
                       chirality: Optional[Mapping[int, int]] = None) -> "DesiredFormation":
        """Derive edge-angles from a full distance set.

        Distances fix each follower only up to reflection; ``chirality[k]``
        picks the side (+1: alpha in (0, pi), -1: alpha in (pi, 2*pi)),
        defaulting to +1.
        """
        chirality = chirality or {}
        alpha_star, r_star = {}, {}
        for k, (i, j) in graph.follower_neighbors.items():
            a, b, c = d_star[(k, i)], d_star[(k, j)], d_star[(j, i)]
            cos_a = (a * a + b * b - c * c) / (2.0 * a * b)
            if abs(cos_a) > 1.0 + COSINE_RTOL:
                raise InconsistentTriangle(f"distances around follower {k} violate the triangle inequality")
            alpha = math.acos(min(1.0, max(-1.0, cos_a)))
            if chirality.get(k, 1) < 0:
                alpha = TWO_PI - alpha
            alpha_star[k] = alpha
            r_star[k] = math.log(a / b)
        return cls(dict(d_star), alpha_star, r_star)


def _law_of_cosines(d_ki, d_kj, alpha):
    return math.sqrt(max(0.0, d_ki * d_ki + d_kj * d_kj - 2.0 * d_ki * d_kj * math.cos(alpha)))


def validate_desired(graph: FormationGraph, desired: DesiredFormation) -> ValidationReport:
    rep = ValidationReport()
    for e in graph.edges:
        d = desired.d_star.get(e)
        if d is None:
            rep.violations.append(f"edge {e}: no desired distance")
        elif not (d > 0.0 and math.isfinite(d)):
            rep.violations.append(f"edge {e}: desired distance {d!r} must be positive")
    for k, (i, j) in graph.follower_neighbors.items():
        alpha = desired.alpha_star.get(k)
        r = desired.r_star.get(k)
        if alpha is None or r is None:
            rep.violations.append(f"follower {k}: missing desired angle or ratio")
            continue
        if not 0.0 < alpha < TWO_PI:
            rep.violations.append(f"follower {k}: desired angle {alpha!r} outside (0, 2pi)")
            continue
        if math.isclose(alpha, math.pi, rel_tol=0.0, abs_tol=1e-12):
            rep.warnings.append(f"follower {k}: desired angle is pi (collinear target)")
        d_ki = desired.d_star.get((k, i))
        d_kj = desired.d_star.get((k, j))
        d_ji = desired.d_star.get((j, i))
        if None in (d_ki, d_kj, d_ji) or min(d_ki, d_kj, d_ji) <= 0.0:
            continue
        if abs(r - math.log(d_ki / d_kj)) > RATIO_ATOL:
            rep.violations.append(
                f"follower {k}: ratio mismatch r*={r!r} but ln(d*_{k}{i}/d*_{k}{j})={math.log(d_ki / d_kj)!r}")
        implied = _law_of_cosines(d_ki, d_kj, alpha)
        if abs(implied - d_ji) > COSINE_RTOL * d_ji:
            rep.violations.append(
                f"follower {k}: law of cosines gives d*_{j}{i}={implied!r}, specified {d_ji!r}")
    return rep


def henneberg_extend(graph: FormationGraph, desired: DesiredFormation, i: int, j: int,
                     d_ki: float, d_kj: float, alpha: float):
    """Attach a new vertex k = n + 1 to the existing edge (j, i)."""
    if not 1 <= i < j <= graph.n:
        raise GraphError(f"need 1 <= i < j <= n, got i={i}, j={j}, n={graph.n}")
    if (j, i) not in graph.edges:
        raise GraphError(f"({j}, {i}) is not an edge; cannot triangulate on it")
    if not 0.0 < alpha < TWO_PI:
        raise BadAngle(f"alpha={alpha!r} outside (0, 2pi)")
    if d_ki <= 0.0 or d_kj <= 0.0:
        raise InconsistentTriangle("desired distances must be positive")
    d_ji = desired.d_star[(j, i)]
    implied = _law_of_cosines(d_ki, d_kj, alpha)
    if abs(implied - d_ji) > COSINE_RTOL * d_ji:
        raise InconsistentTriangle(f"law of cosines gives {implied!r}, existing d*_{j}{i}={d_ji!r}")
    k = graph.n + 1
    new_graph = FormationGraph(k, graph.edges + ((k, i), (k, j)))
    d_star = dict(desired.d_star)
    d_star[(k, i)] = float(d_ki)
    d_star[(k, j)] = float(d_kj)
    alpha_star = dict(desired.alpha_star)
    alpha_star[k] = float(alpha)
    r_star = dict(desired.r_star)
    r_star[k] = math.log(d_ki / d_kj)
    return new_graph, DesiredFormation(d_star, alpha_star, r_star)


def third_side(d_ki: float, d_kj: float, alpha: float) -> float:
    """Distance between the two neighbours implied by (d_ki, d_kj, alpha)."""
    return _law_of_cosines(d_ki, d_kj, alpha)


def leader_pair(d21: float):
    """The smallest valid formation: agents 1 and 2 at distance ``d21``."""
    return FormationGraph(2, ((2, 1),)), DesiredFormation({(2, 1): d21}, {}, {})


def edges_from_pairs(pairs: Iterable[Iterable[int]]) -> Tuple[Edge, ...]:
    return tuple((int(a), int(b)) for a, b in pairs)
