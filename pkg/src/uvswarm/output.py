"""File formats written by the command-line tools."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .engine import Sink

TRAJECTORY_HEADER = ["step", "time", "agent_id", "x", "y", "z", "vx", "vy", "vz", "cmd_vx", "cmd_vy", "cmd_vz"]
METRICS_HEADER = ["step", "time", "min_pair", "avg_pair", "min_obstacle", "deviation_energy"]
SWEEP_HEADER = ["sigma_r", "sigma_az", "seed", "run_min_dist", "run_avg_dist", "faults"]


def fmt(x: float) -> str:
    """Nine significant digits; infinities print as ``inf``."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


class CsvSink(Sink):
    """Writes ``trajectories.csv`` and ``metrics.csv`` into ``out_dir``."""

    def __init__(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self._traj_file = open(out / "trajectories.csv", "w", newline="", encoding="utf-8")
        self._metrics_file = open(out / "metrics.csv", "w", newline="", encoding="utf-8")
        self._traj = csv.writer(self._traj_file, lineterminator="\n")
        self._metrics = csv.writer(self._metrics_file, lineterminator="\n")
        self._traj.writerow(TRAJECTORY_HEADER)
        self._metrics.writerow(METRICS_HEADER)

    def trajectory(self, step, time, agents) -> None:
        for a in agents:
            self._traj.writerow([step, fmt(time), a.id, *map(fmt, a.position), *map(fmt, a.velocity),
                                 *map(fmt, a.commanded_velocity)])

    def metrics(self, row) -> None:
        self._metrics.writerow([row.step, fmt(row.time), fmt(row.min_pair), fmt(row.avg_pair),
                                fmt(row.min_obstacle), fmt(row.deviation_energy)])

    def close(self) -> None:
        for f in (self._traj_file, self._metrics_file):
            if not f.closed:
                f.close()


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_sweep(out_dir, result) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in result.runs:
            w.writerow([fmt(r.sigma_r), fmt(r.sigma_az), r.seed, fmt(r.run_min_dist), fmt(r.run_avg_dist), r.faults])
    write_json(out / "sweep_summary.json", {"seeds": result.seeds, "levels": result.medians()})
