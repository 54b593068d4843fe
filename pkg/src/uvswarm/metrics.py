"""Swarm-quality measurements and the noise-versus-stability sweep.

The deviation energy follows the alpha-lattice literature: a quadratic
penalty on every proximity-graph edge whose length differs from the target
spacing, normalized by ``edges + 1``.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .world import Wall, cylinder_arrays

__all__ = [
    "StepMetrics",
    "SweepRun",
    "SweepResult",
    "pairwise_stats",
    "deviation_energy",
    "obstacle_clearances",
    "step_metrics",
    "stability_sweep",
]


def _as_points(positions) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(positions, dtype=np.float64).reshape(-1, 3))


def pairwise_stats(positions) -> tuple[float, float] | None:
    """``(min, mean)`` Euclidean distance over unordered pairs; None for fewer than two points."""
    pts = _as_points(positions)
    if pts.shape[0] < 2:
        return None
    return kernels.pairwise_min_mean(pts)


def deviation_energy(positions, target_distance: float, neighborhood_radius: float) -> float:
    if not target_distance > 0.0:
        raise ValueError(f"target_distance must be > 0, got {target_distance}")
    pts = _as_points(positions)
    if pts.shape[0] < 2:
        return 0.0
    return kernels.deviation_energy(pts, float(target_distance), float(neighborhood_radius))


def median_pairwise_distance(positions) -> float:
    pts = _as_points(positions)
    iu, ju = np.triu_indices(pts.shape[0], k=1)
    return float(np.median(np.linalg.norm(pts[ju] - pts[iu], axis=1)))


def obstacle_clearances(positions, obstacles) -> np.ndarray:
    """Per-point horizontal distance to the nearest obstacle surface (``inf`` without obstacles)."""
    pts = _as_points(positions)
    _, centers, radii = cylinder_arrays(obstacles)
    out = kernels.cylinder_clearance(pts, np.ascontiguousarray(centers), radii) if radii.size \
        else np.full(pts.shape[0], np.inf)
    walls = [ob for ob in obstacles if isinstance(ob, Wall)]
    if walls:
        for i, p in enumerate(pts):
            out[i] = min(out[i], min(w.distance(p) for w in walls))
    return out


@dataclass(frozen=True, eq=False)
class StepMetrics:
    step: int
    time: float
    min_neighbor: np.ndarray
    avg_neighbor: np.ndarray
    obstacle_distance: np.ndarray
    min_pair: float
    avg_pair: float
    deviation_energy: float
    max_pair: float = math.nan

    @property
    def min_obstacle(self) -> float:
        return float(self.obstacle_distance.min()) if self.obstacle_distance.size else math.inf


def step_metrics(step: int, time: float, positions, obstacles, target_distance: float,
                 neighborhood_radius: float) -> StepMetrics | None:
    pts = _as_points(positions)
    n = pts.shape[0]
    if n < 2:
        return None
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    off = dist[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    lo, avg = kernels.pairwise_min_mean(pts)
    return StepMetrics(
        step=step,
        time=time,
        min_neighbor=off.min(axis=1),
        avg_neighbor=off.mean(axis=1),
        obstacle_distance=obstacle_clearances(pts, obstacles),
        min_pair=lo,
        avg_pair=avg,
        deviation_energy=kernels.deviation_energy(pts, target_distance, neighborhood_radius),
        max_pair=float(off.max()),
    )


# -- sweep --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRun:
    sigma_r: float
    sigma_az: float
    seed: int
    run_min_dist: float
    run_avg_dist: float
    faults: int


@dataclass
class SweepResult:
    levels: list
    seeds: list
    runs: list = field(default_factory=list)

    def level_runs(self, level: tuple) -> list:
        return [r for r in self.runs if (r.sigma_r, r.sigma_az) == tuple(level)]

    def medians(self) -> list[dict]:
        out = []
        for level in self.levels:
            runs = self.level_runs(level)
            out.append({
                "sigma_r": level[0],
                "sigma_az": level[1],
                "seeds": len(runs),
                "median_run_min_dist": statistics.median(r.run_min_dist for r in runs),
                "median_run_avg_dist": statistics.median(r.run_avg_dist for r in runs),
                "faulted_runs": sum(1 for r in runs if r.faults),
            })
        return out


def _sweep_one(task) -> SweepRun:
    from .engine import run

    base, sigma_r, sigma_az, seed = task
    noise = type(base.noise)(sigma_r, sigma_az, sigma_az, base.noise.dropout_prob)
    summary = run(base.with_updates(noise=noise, seed=seed))
    return SweepRun(sigma_r, sigma_az, seed, summary.min_pair, summary.avg_pair, len(summary.faults))


def stability_sweep(base_config, sigma_levels, seeds, workers: int = 1) -> SweepResult:
    """Run ``base_config`` at every (noise level, seed) pair.

    Elevation noise tracks azimuth noise. Results are ordered by level, then
    seed, regardless of ``workers``.
    """
    levels = [(float(r), float(a)) for r, a in sigma_levels]
    seeds = [int(s) for s in seeds]
    if len(levels) < 2 or len(seeds) < 2:
        raise ValueError("a sweep needs at least two noise levels and two seeds")
    tasks = [(base_config, r, a, s) for r, a in levels for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_sweep_one, tasks))
    else:
        runs = [_sweep_one(t) for t in tasks]
    return SweepResult(levels, seeds, runs)
