"""Command-line entry point: ``run``, ``verify`` and ``scaffold``.

Exit codes: 0 success, 1 invalid input or failed verification, 2 the run
stopped early because a channel left its funnel or agents collided (the
partial outputs are still written).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from .engine import simulate
from .errors import FormationError, ScenarioError
from .io import write_outputs
from .oracles import run_oracle_suite
from .presets import PRESETS, make_preset
from .scenario import ScenarioConfig, apply_overrides, load_scenario_dict, save_scenario

log = logging.getLogger("bipolar_formation")

EXIT_OK, EXIT_INVALID, EXIT_RUN_FAILED = 0, 1, 2


def _configure_logging():
    level = os.environ.get("BIPOLAR_FORM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_run(scenario_path, out_dir=None, overrides: Sequence[str] = (),
            snapshot_times: Optional[Sequence[float]] = None) -> int:
    try:
        raw = apply_overrides(load_scenario_dict(scenario_path), overrides)
        scenario = ScenarioConfig.from_dict(raw)
    except (OSError, ValueError, FormationError) as exc:
        print(f"error: cannot load {scenario_path}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    problems = scenario.validate()
    if problems:
        for p in problems:
            print(f"invalid scenario: {p}", file=sys.stderr)
        return EXIT_INVALID
    out_dir = Path(out_dir) if out_dir else Path("out") / scenario.name
    log.info("running %s (%d steps) into %s", scenario.name, scenario.n_steps, out_dir)
    result = simulate(scenario)
    files = write_outputs(result, out_dir, snapshot_times)
    s = result.summary
    print(f"{scenario.name}: {s['rows']} rows, t_final={s['t_final']}, "
          f"min neighbour distance={s['min_neighbor_distance']:.6g}, "
          f"wall clock={s['wall_clock_seconds']:.2f}s")
    print(f"wrote {', '.join(files)} to {out_dir}")
    if result.failure is not None:
        print(f"run stopped: {type(result.failure).__name__}: {result.failure}", file=sys.stderr)
        return EXIT_RUN_FAILED
    return EXIT_OK


def cmd_verify(seed: int = 0, samples: Optional[int] = None) -> int:
    t0 = time.perf_counter()
    results = run_oracle_suite(seed, samples)
    width = max(len(r.name) for r in results)
    print(f"{'oracle':<{width}}  result  {'worst':>12}  threshold          detail")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status:<6}  {r.worst:>12.4e}  {r.threshold:<17}  {r.detail}")
    ok = all(r.passed for r in results)
    print(f"{'all passed' if ok else 'FAILED'} in {time.perf_counter() - t0:.2f}s")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_scaffold(preset: str, out_path, n: Optional[int] = None, seed: Optional[int] = None) -> int:
    kwargs = {}
    if seed is not None:
        kwargs["seed"] = seed
    if n is not None:
        if preset != "random_henneberg":
            print("error: --n only applies to random_henneberg", file=sys.stderr)
            return EXIT_INVALID
        kwargs["n"] = n
    try:
        scenario = make_preset(preset, **kwargs)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    problems = scenario.validate()
    if problems:
        for p in problems:
            print(f"invalid preset: {p}", file=sys.stderr)
        return EXIT_INVALID
    save_scenario(scenario, out_path)
    print(f"wrote {preset} scenario to {out_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bipolar-form", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario file and write logs and plots")
    p.add_argument("scenario")
    p.add_argument("--out", default=None, help="output directory (default out/<name>)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a scenario field, e.g. dt=0.002 or frames.mode=fixed")
    p.add_argument("--snapshots", type=float, nargs="*", default=None,
                   help="times at which the formation is drawn in trajectories.svg")

    p = sub.add_parser("verify", help="run the numerical oracle suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None, help="cap on samples per oracle")

    p = sub.add_parser("scaffold", help="write a preset scenario file")
    p.add_argument("preset", help=f"one of: {', '.join(PRESETS)}")
    p.add_argument("out")
    p.add_argument("--n", type=int, default=None, help="agent count (random_henneberg)")
    p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, args.out, args.overrides, args.snapshots)
    if args.command == "verify":
        return cmd_verify(args.seed, args.samples)
    return cmd_scaffold(args.preset, args.out, args.n, args.seed)


if __name__ == "__main__":
    sys.exit(main())
