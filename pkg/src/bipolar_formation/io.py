"""Run outputs: CSV logs, JSON summary and dependency-free SVG plots.

Floats are written with ``repr`` (shortest round-trip form), so repeated
runs of the same scenario produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .engine import CHANNEL_FIELDS, TrajectoryLog

TRAJECTORY_CSV = "trajectory.csv"
ERRORS_CSV = "errors.csv"
SUMMARY_JSON = "summary.json"
PATHS_SVG = "trajectories.svg"


def _fmt(x) -> str:
    return repr(float(x))


def trajectory_columns(tlog: TrajectoryLog) -> List[str]:
    n = tlog.n
    cols = ["t"]
    cols += [f"{ax}{a}" for a in range(1, n + 1) for ax in ("x", "y")]
    cols += [f"u{ax}{a}" for a in range(1, n + 1) for ax in ("x", "y")]
    cols += [f"dist_{j}_{i}" for j, i in tlog.edges]
    cols += [f"angle_{k}" for k in sorted(tlog.follower_neighbors)]
    return cols


def error_columns(tlog: TrajectoryLog) -> List[str]:
    return ["t"] + [f"{f}_{name}" for name in tlog.channels for f in CHANNEL_FIELDS]


def write_trajectory_csv(tlog: TrajectoryLog, path) -> None:
    dists = tlog.edge_distances()
    angles = tlog.edge_angles()
    n = tlog.n
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_columns(tlog))
        for r in range(len(tlog)):
            row = [_fmt(tlog.times[r])]
            row += [_fmt(v) for v in tlog.positions[r].reshape(2 * n)]
            row += [_fmt(v) for v in tlog.commands[r].reshape(2 * n)]
            row += [_fmt(dists[e][r]) for e in tlog.edges]
            row += [_fmt(angles[k][r]) for k in sorted(angles)]
            w.writerow(row)


def write_errors_csv(tlog: TrajectoryLog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(error_columns(tlog))
        blocks = list(tlog.channels.values())
        for r in range(len(tlog)):
            row = [_fmt(tlog.times[r])]
            for b in blocks:
                row += [_fmt(v) for v in b[r]]
            w.writerow(row)


def write_summary(summary: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=False)
        fh.write("\n")


# ---------------------------------------------------------------------- SVG

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


class _Canvas:
    """Maps a data box onto a pixel box with y pointing up."""

    def __init__(self, xlim, ylim, width=640, height=360, pad=48, equal=False):
        x0, x1 = xlim
        y0, y1 = ylim
        if x1 <= x0:
            x1 = x0 + 1.0
        if y1 <= y0:
            y1 = y0 + 1.0
        self.w, self.h, self.pad = width, height, pad
        sx = (width - 2 * pad) / (x1 - x0)
        sy = (height - 2 * pad) / (y1 - y0)
        if equal:
            sx = sy = min(sx, sy)
        self.sx, self.sy, self.x0, self.y0 = sx, sy, x0, y0
        self.x1, self.y1 = x0 + (width - 2 * pad) / sx, y0 + (height - 2 * pad) / sy
        self.items: List[str] = []

    def px(self, x, y):
        return self.pad + (x - self.x0) * self.sx, self.h - self.pad - (y - self.y0) * self.sy

    def polyline(self, xs, ys, color, width=1.2, dash=None):
        pts = " ".join("%.2f,%.2f" % self.px(x, y) for x, y in zip(xs, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{extra} '
                          f'points="{pts}"/>')

    def circle(self, x, y, r, color):
        cx, cy = self.px(x, y)
        self.items.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r}" fill="{color}"/>')

    def text(self, x, y, s, size=11, anchor="start"):
        self.items.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" '
                          f'font-family="sans-serif" text-anchor="{anchor}">{escape(s)}</text>')

    def axes(self, title, xlabel, ylabel):
        p, w, h = self.pad, self.w, self.h
        self.items.append(f'<rect x="{p}" y="{p}" width="{w - 2 * p}" height="{h - 2 * p}" '
                          'fill="none" stroke="#333" stroke-width="0.8"/>')
        for frac in (0.0, 0.5, 1.0):
            xv = self.x0 + frac * (self.x1 - self.x0)
            yv = self.y0 + frac * (self.y1 - self.y0)
            self.text(self.px(xv, self.y0)[0], h - p + 14, f"{xv:.3g}", 10, "middle")
            self.text(p - 4, self.px(self.x0, yv)[1] + 4, f"{yv:.3g}", 10, "end")
        self.text(w / 2, 18, title, 13, "middle")
        self.text(w / 2, h - 8, xlabel, 11, "middle")
        self.text(12, h / 2, ylabel, 11, "start")

    def svg(self) -> str:
        body = "\n".join(self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">\n<rect width="100%" height="100%" fill="white"/>\n'
                f"{body}\n</svg>\n")


def _decimate(n_rows: int, max_points: int = 1500) -> np.ndarray:
    step = max(1, int(math.ceil(n_rows / max_points)))
    idx = np.arange(0, n_rows, step)
    if n_rows and idx[-1] != n_rows - 1:
        idx = np.append(idx, n_rows - 1)
    return idx


def trajectory_svg(tlog: TrajectoryLog, snapshot_times: Optional[Sequence[float]] = None) -> str:
    """Agent paths with the formation drawn at ``snapshot_times``."""
    p = tlog.positions
    xs, ys = p[:, :, 0], p[:, :, 1]
    cv = _Canvas((float(xs.min()) - 0.5, float(xs.max()) + 0.5),
                 (float(ys.min()) - 0.5, float(ys.max()) + 0.5), 800, 480, equal=True)
    cv.axes("agent paths and formation snapshots", "x", "y")
    idx = _decimate(len(tlog))
    for a in range(tlog.n):
        cv.polyline(xs[idx, a], ys[idx, a], _COLORS[a % len(_COLORS)])
    if snapshot_times is None:
        t_end = float(tlog.times[-1]) if len(tlog) else 0.0
        snapshot_times = np.linspace(0.0, t_end, 5)
    for ts in snapshot_times:
        r = int(np.searchsorted(tlog.times, ts - 1e-12))
        r = min(r, len(tlog) - 1)
        for j, i in tlog.edges:
            cv.polyline([xs[r, j - 1], xs[r, i - 1]], [ys[r, j - 1], ys[r, i - 1]], "#555", 0.8)
        for a in range(tlog.n):
            cv.circle(xs[r, a], ys[r, a], 3, _COLORS[a % len(_COLORS)])
    return cv.svg()


def channel_svg(tlog: TrajectoryLog, names: Sequence[str], title: str) -> str:
    """Errors of ``names`` against their performance bounds over time."""
    t = tlog.times
    idx = _decimate(len(tlog))
    lo = min(float(tlog.channel(n, "lower")[idx].min()) for n in names)
    hi = max(float(tlog.channel(n, "upper")[idx].max()) for n in names)
    # very wide funnels would flatten the errors; clip the view to the errors' scale
    e_abs = max(float(np.abs(tlog.channel(n, "e")).max()) for n in names)
    lim = 1.5 * max(e_abs, 1e-3)
    lo, hi = max(lo, -lim), min(hi, lim)
    cv = _Canvas((float(t[0]), float(t[-1])), (lo, hi))
    cv.axes(title, "t", "e")
    for c, name in enumerate(names):
        color = _COLORS[c % len(_COLORS)]
        cv.polyline(t[idx], np.clip(tlog.channel(name, "e")[idx], lo, hi), color)
        cv.polyline(t[idx], np.clip(tlog.channel(name, "lower")[idx], lo, hi), color, 0.8, "4,3")
        cv.polyline(t[idx], np.clip(tlog.channel(name, "upper")[idx], lo, hi), color, 0.8, "4,3")
        cv.text(cv.w - cv.pad + 4, cv.pad + 14 * (c + 1), name, 10)
    return cv.svg()


def channel_groups(tlog: TrajectoryLog) -> Dict[str, List[str]]:
    """SVG file name -> channels it shows (angles, ratios, distance/bearing)."""
    names = list(tlog.channels)
    groups = {
        "errors_alpha.svg": [n for n in names if n.startswith("alpha")],
        "errors_r.svg": [n for n in names if n.startswith("r") and n[1:].isdigit()],
        "errors_d_beta.svg": [n for n in names if n in ("d", "beta")],
    }
    return {k: v for k, v in groups.items() if v}


def write_plots(tlog: TrajectoryLog, out_dir, snapshot_times=None) -> List[str]:
    out_dir = Path(out_dir)
    written = []
    if len(tlog) == 0:
        return written
    (out_dir / PATHS_SVG).write_text(trajectory_svg(tlog, snapshot_times), encoding="utf-8")
    written.append(PATHS_SVG)
    titles = {"errors_alpha.svg": "edge-angle errors and bounds",
              "errors_r.svg": "log-ratio errors and bounds",
              "errors_d_beta.svg": "distance / bearing errors and bounds"}
    for fname, names in channel_groups(tlog).items():
        (out_dir / fname).write_text(channel_svg(tlog, names, titles[fname]), encoding="utf-8")
        written.append(fname)
    return written


def write_outputs(result, out_dir, snapshot_times=None) -> List[str]:
    """Write every artifact of a run into ``out_dir``; returns the file names."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(result.log, out_dir / TRAJECTORY_CSV)
    write_errors_csv(result.log, out_dir / ERRORS_CSV)
    write_summary(result.summary, out_dir / SUMMARY_JSON)
    return [TRAJECTORY_CSV, ERRORS_CSV, SUMMARY_JSON] + write_plots(result.log, out_dir, snapshot_times)
