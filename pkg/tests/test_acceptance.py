"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line."""
import filecmp
import math
import time

import numpy as np
import pytest

from bipolar_formation.engine import simulate
from bipolar_formation.io import ERRORS_CSV, TRAJECTORY_CSV, write_outputs
from bipolar_formation.oracles import run_oracle_suite, strong_congruency_check
from bipolar_formation.geometry import Vec2
from bipolar_formation.presets import funnel_start_scenario, random_henneberg, six_agent_maneuver

HORIZON, DT = 40.0, 1e-3


@pytest.fixture(scope="module")
def maneuver_run():
    sc = six_agent_maneuver(seed=0)
    return sc, simulate(sc)


@pytest.fixture(scope="module")
def maneuver_run_other_frames():
    return simulate(six_agent_maneuver(seed=1))


class TestAcceptance:
    def test_scenario_runs_inside_funnels(self, maneuver_run, acceptance_line):
        sc, result = maneuver_run
        log = result.log
        assert sc.horizon == HORIZON and sc.dt == DT and sc.integrator == "rk4"
        inside = all(bool(np.all(band)) for band in log.in_band().values())
        rows_ok = len(log) == round(HORIZON / DT) + 1
        secs = result.summary["wall_clock_seconds"]
        worst = max(c["max_band_fraction"] for c in result.summary["channels"].values())
        ok = result.ok and inside and rows_ok and not result.summary["violation"] and secs < 30.0
        acceptance_line(1, ok, f"{len(log)} rows, {len(log.channels)} channels inside bounds at every "
                               f"step, worst band fraction {worst:.3f}, runtime {secs:.1f}s (< 30s)")
        assert ok

    def test_steady_state_shape(self, maneuver_run, acceptance_line):
        sc, result = maneuver_run
        log = result.log
        tail = log.times >= HORIZON - 2.0 - 1e-12
        # the distance reference is constant over the tail
        assert {sc.references.d21(t) for t in log.times[tail][::100]} == {sc.desired.d_star[(2, 1)]}
        ch = result.summary["channels"]["d"]
        d21 = sc.desired.d_star[(2, 1)]
        # relative distance slack allowed by e_d < b_upper * rho_inf, plus 5%
        band = math.sqrt(d21 * d21 + ch["b_upper"] * ch["rho_inf"]) / d21 - 1.0
        worst_rel = 0.0
        dists = log.edge_distances()
        edges_ok = True
        for edge, d_star in sc.desired.d_star.items():
            dev = float(np.max(np.abs(dists[edge][tail] - d_star)))
            worst_rel = max(worst_rel, dev / d_star)
            edges_ok = edges_ok and dev <= d_star * (band + 0.05)
        rows = np.flatnonzero(tail)
        congruent = all(strong_congruency_check([Vec2(*p) for p in log.positions[r]], sc.desired,
                                                sc.graph, 0.05) for r in rows[::50])
        ok = edges_ok and congruent
        acceptance_line(2, ok, f"final 2s worst relative edge error {worst_rel:.4f} "
                               f"(limit {band + 0.05:.4f}); strong congruency at tol 0.05: {congruent}")
        assert ok

    def test_no_collocation(self, maneuver_run, acceptance_line):
        _, result = maneuver_run
        dmin = result.summary["min_neighbor_distance"]
        ok = dmin > 0.1
        acceptance_line(3, ok, f"minimum neighbour distance {dmin:.4f} (> 0.1)")
        assert ok

    def test_local_frames_do_not_matter(self, maneuver_run, maneuver_run_other_frames, acceptance_line):
        sc, a = maneuver_run
        b = maneuver_run_other_frames
        assert a.summary["frame_rotations"] != b.summary["frame_rotations"]
        same_rows = len(a.log) == len(b.log)
        gap = float(np.max(np.abs(a.log.positions - b.log.positions))) if same_rows else math.inf
        ok = same_rows and gap <= 1e-9
        acceptance_line(4, ok, f"max position gap between frame seeds 0 and 1: {gap:.2e} (<= 1e-9)")
        assert ok

    def test_oracle_suite(self, acceptance_line):
        t0 = time.perf_counter()
        results = run_oracle_suite(seed=0)
        secs = time.perf_counter() - t0
        failed = [r.name for r in results if not r.passed]
        ok = not failed and secs < 60.0
        worst = "; ".join(f"{r.name} {r.worst:.2e}" for r in results)
        acceptance_line(5, ok, f"{len(results)} oracles, failed {failed or 'none'}, {secs:.1f}s (< 60s): {worst}")
        assert ok

    def test_errors_enter_steady_band_on_time(self, acceptance_line):
        sc = funnel_start_scenario(fraction=0.5)
        result = simulate(sc)
        assert result.ok
        log = result.log
        detail, ok = [], True
        for name in log.channels:
            e = log.channel(name)
            rho = log.channel(name, "rho")
            lo, hi = log.channel(name, "lower"), log.channel(name, "upper")
            b_lower, b_upper = -lo[0] / rho[0], hi[0] / rho[0]
            perf = sc.ppc[name.rstrip("0123456789")]
            # starts at half its band
            start = e[0] / hi[0] if e[0] >= 0 else e[0] / lo[0]
            assert start == pytest.approx(0.5, abs=1e-9), name
            deadline = perf.time_to_reach(2.0 * perf.rho_inf)
            inside = (e > -b_lower * perf.rho_inf) & (e < b_upper * perf.rho_inf)
            entry = float(log.times[np.argmax(inside)]) if inside.any() else math.inf
            ok = ok and entry <= deadline
            detail.append(f"{name} {entry:.2f}")
        acceptance_line(6, ok, f"entry times vs deadline {deadline:.3f}s: " + ", ".join(detail))
        assert ok

    def test_repeated_runs_byte_identical(self, maneuver_run, tmp_path, acceptance_line):
        sc, first = maneuver_run
        write_outputs(first, tmp_path / "a")
        write_outputs(simulate(six_agent_maneuver(seed=0)), tmp_path / "b")
        rh = random_henneberg()
        write_outputs(simulate(rh), tmp_path / "c")
        write_outputs(simulate(random_henneberg()), tmp_path / "d")
        same = all(filecmp.cmp(tmp_path / x / f, tmp_path / y / f, shallow=False)
                   for x, y in (("a", "b"), ("c", "d")) for f in (TRAJECTORY_CSV, ERRORS_CSV))
        acceptance_line(7, same, "trajectory.csv and errors.csv byte-identical across repeated runs "
                                 "of the six-agent and random ten-agent scenarios")
        assert same
