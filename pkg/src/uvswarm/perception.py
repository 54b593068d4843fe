"""Simulated relative-localization sensor.

Each observer sees its neighbours in its own body frame, gated by range,
field of view, optional occlusion and random dropout. Errors are added
independently to range, azimuth and elevation.

The batch functions work on every observer at once. Agents are indexed by
ascending id, and rows select the observers being evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MIN_RANGE, NoiseModel, SwarmParams, rot_z
from .world import AgentState, segment_hits_sphere


@dataclass(frozen=True, eq=False)
class NeighborObservation:
    neighbor_id: int
    rel_position: np.ndarray
    rel_velocity: np.ndarray
    time_since_last: float
    step: int


@dataclass(frozen=True, eq=False)
class MemoryEntry:
    rel_position: np.ndarray
    time: float
    step: int


@dataclass(frozen=True, eq=False)
class ObservationMemory:
    """Last detection per (observer, neighbour) pair and each observer's last command.

    Rows and columns follow ``ids``. ``seen_step`` is -1 for pairs never
    detected. Updates return a new memory; instances are never mutated.
    """

    ids: tuple
    rel: np.ndarray
    seen_step: np.ndarray
    last_command: np.ndarray
    update_rate: float

    @classmethod
    def empty(cls, ids, update_rate: float) -> "ObservationMemory":
        ids = tuple(sorted(int(i) for i in ids))
        n = len(ids)
        return cls(ids, np.zeros((n, n, 3)), np.full((n, n), -1, dtype=np.int64), np.zeros((n, 3)),
                   float(update_rate))

    def index(self, agent_id: int) -> int:
        return self.ids.index(agent_id)

    def lookup(self, observer: int, neighbor: int, now: float, horizon: float) -> MemoryEntry | None:
        i, j = self.index(observer), self.index(neighbor)
        seen = int(self.seen_step[i, j])
        if seen < 0:
            return None
        t = seen / self.update_rate
        if now - t > horizon + 1e-12:
            return None
        return MemoryEntry(self.rel[i, j].copy(), t, seen)

    def previous_command(self, observer: int) -> np.ndarray:
        return self.last_command[self.index(observer)].copy()

    def updated(self, rows, seen: np.ndarray, rel: np.ndarray, step: int,
                commands: np.ndarray) -> "ObservationMemory":
        """Record detections ``seen`` (r, n) with vectors ``rel`` (r, n, 3) made at ``step``."""
        rows = np.asarray(rows, dtype=np.int64)
        new_rel = self.rel.copy()
        new_seen = self.seen_step.copy()
        new_cmd = self.last_command.copy()
        block_rel = new_rel[rows]
        block_seen = new_seen[rows]
        block_rel[seen] = rel[seen]
        block_seen[seen] = step
        new_rel[rows] = block_rel
        new_seen[rows] = block_seen
        new_cmd[rows] = commands
        return ObservationMemory(self.ids, new_rel, new_seen, new_cmd, self.update_rate)


def observer_rng(seed: int, observer_id: int, step: int) -> np.random.Generator:
    """Independent stream keyed by (seed, observer, step); evaluation order is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence([seed, observer_id, step]))


def apply_noise(rel: np.ndarray, noise: NoiseModel, normals: np.ndarray | None) -> np.ndarray:
    """Perturb body-frame vectors (m, 3) in spherical coordinates.

    ``normals`` holds standard normal draws (m, 3) for range, azimuth and
    elevation; it may be None when the noise model is all-zero. The result
    has range clamped at ``MIN_RANGE``.
    """
    rel = np.asarray(rel, dtype=np.float64).reshape(-1, 3)
    r = np.sqrt(rel[:, 0] * rel[:, 0] + rel[:, 1] * rel[:, 1] + rel[:, 2] * rel[:, 2])
    if noise.is_zero:
        out = rel.copy()
        for i in np.flatnonzero(r < MIN_RANGE):
            out[i] = rel[i] * (MIN_RANGE / r[i]) if r[i] > 0.0 else (MIN_RANGE, 0.0, 0.0)
        return out
    az = np.arctan2(rel[:, 1], rel[:, 0])
    safe = np.where(r > 0.0, r, 1.0)
    el = np.arcsin(np.clip(rel[:, 2] / safe, -1.0, 1.0))
    r_n = np.maximum(r + noise.sigma_r * normals[:, 0], MIN_RANGE)
    az_n = az + noise.sigma_az * normals[:, 1]
    el_n = el + noise.sigma_el * normals[:, 2]
    ce = np.cos(el_n)
    return np.column_stack([r_n * ce * np.cos(az_n), r_n * ce * np.sin(az_n), r_n * np.sin(el_n)])


def check_occlusion(observer_pos, target_pos, others, obstacles, agent_radius: float = 0.4) -> bool:
    """True when the sight line is blocked by another agent's sphere or an obstacle.

    ``others`` should exclude the observer and the target themselves.
    """
    for other in others:
        pos = other.position if isinstance(other, AgentState) else other
        if segment_hits_sphere(observer_pos, target_pos, pos, agent_radius):
            return True
    return any(ob.blocks(observer_pos, target_pos) for ob in obstacles)


def needs_draws(noise: NoiseModel) -> bool:
    return not noise.is_zero or noise.dropout_prob > 0.0


def _fov_mask(rel: np.ndarray, fov_h: float, fov_v: float) -> np.ndarray | None:
    if fov_h >= 2.0 * math.pi and fov_v >= math.pi:
        return None
    mask = np.ones(rel.shape[:-1], dtype=bool)
    if fov_h < 2.0 * math.pi:
        mask &= np.abs(np.arctan2(rel[..., 1], rel[..., 0])) <= fov_h / 2.0
    if fov_v < math.pi:
        horiz = np.hypot(rel[..., 0], rel[..., 1])
        mask &= np.abs(np.arctan2(rel[..., 2], horiz)) <= fov_v / 2.0
    return mask


def detect_batch(rows, positions: np.ndarray, headings: np.ndarray, params: SwarmParams,
                 noise: NoiseModel, rngs=None, config=None) -> tuple[np.ndarray, np.ndarray]:
    """Detections of all agents by the observers in ``rows``.

    ``positions`` (n, 3) and ``headings`` (n,) are in ascending-id order.
    ``rngs`` has one generator per row and may be None only when
    :func:`needs_draws` is false. Each row draws dropout uniforms and then
    normals (n - 1, 3) for the other agents in id order, whether or not they
    pass the gates.

    Returns ``seen`` (r, n) and noisy body-frame vectors (r, n, 3), zero
    where not seen.
    """
    rows = np.asarray(rows, dtype=np.int64)
    n = positions.shape[0]
    r = rows.shape[0]
    delta = positions[None, :, :] - positions[rows][:, None, :]
    rel = delta
    for i, row in enumerate(rows):
        if headings[row] != 0.0:
            rel = rel.copy() if rel is delta else rel
            rel[i] = delta[i] @ rot_z(headings[row])
    d2 = rel[..., 0] * rel[..., 0] + rel[..., 1] * rel[..., 1] + rel[..., 2] * rel[..., 2]
    seen = d2 <= params.observation_radius ** 2
    seen[np.arange(r), rows] = False

    fov_h = config.fov_horizontal if config is not None else 2.0 * math.pi
    fov_v = config.fov_vertical if config is not None else math.pi
    fov = _fov_mask(rel, fov_h, fov_v)
    if fov is not None:
        seen &= fov

    normals = None
    if needs_draws(noise):
        normals = np.zeros((r, n, 3))
        drops = np.ones((r, n))
        for i, row in enumerate(rows):
            others = np.arange(n) != row
            drops[i, others] = rngs[i].random(n - 1)
            normals[i, others] = rngs[i].standard_normal((n - 1, 3))
        if noise.dropout_prob > 0.0:
            seen &= drops >= noise.dropout_prob

    if config is not None and config.occlusion_enabled:
        for i, row in enumerate(rows):
            for j in np.flatnonzero(seen[i]):
                blockers = np.delete(positions, [row, j], axis=0)
                if check_occlusion(positions[row], positions[j], blockers, config.obstacles,
                                   params.agent_radius):
                    seen[i, j] = False

    out = np.zeros_like(rel)
    if normals is None and not (d2[seen] < MIN_RANGE ** 2).any():
        out[seen] = rel[seen]
    else:
        out[seen] = apply_noise(rel[seen], noise, None if normals is None else normals[seen])
    return seen, out


def detect_neighbors(observer: AgentState, others, params: SwarmParams, noise: NoiseModel,
                     rng: np.random.Generator | None, config=None) -> list[tuple[int, np.ndarray]]:
    """Noisy body-frame detections ``(id, vector)`` of the agents ``observer`` can see.

    Random draws are consumed for every other agent in id order, whether or
    not it passes the gates, so one agent's visibility never shifts another's
    noise sample. ``rng`` may be None only when the noise model is all-zero
    with no dropout.
    """
    everyone = sorted([observer] + [a for a in others if a.id != observer.id], key=lambda a: a.id)
    if len(everyone) < 2:
        return []
    row = next(i for i, a in enumerate(everyone) if a.id == observer.id)
    positions = np.array([a.position for a in everyone], dtype=np.float64)
    headings = np.array([a.heading for a in everyone], dtype=np.float64)
    seen, rel = detect_batch([row], positions, headings, params, noise, [rng], config)
    return [(everyone[j].id, rel[0, j]) for j in np.flatnonzero(seen[0])]


def estimate_relative_velocity(current: np.ndarray, entry: MemoryEntry | None, dt: float,
                               v_prev: np.ndarray) -> np.ndarray:
    """Finite-difference relative velocity minus the observer's previous command.

    Returns zeros on a first detection (``entry`` is None).
    """
    if entry is None:
        return np.zeros(3)
    if not dt > 0.0:
        raise AssertionError(f"non-positive detection interval {dt}")
    return (np.asarray(current) - entry.rel_position) / dt - np.asarray(v_prev)


def observe(observer: AgentState, detections, memory: ObservationMemory, now: float, step: int,
            params: SwarmParams) -> list[NeighborObservation]:
    """Turn raw detections into observations with velocity estimates (memory is read-only)."""
    v_prev = memory.previous_command(observer.id)
    out = []
    for nid, rel in detections:
        entry = memory.lookup(observer.id, nid, now, params.memory_horizon)
        dt = params.dt if entry is None else (step - entry.step) / params.update_rate
        vel = estimate_relative_velocity(rel, entry, dt, v_prev)
        out.append(NeighborObservation(nid, rel, vel, dt, step))
    return out


def estimate_velocities(rows, seen: np.ndarray, rel: np.ndarray, memory: ObservationMemory, step: int,
                        params: SwarmParams) -> np.ndarray:
    """Batch form of :func:`observe`: velocity estimates (r, n, 3), zero where not applicable."""
    rows = np.asarray(rows, dtype=np.int64)
    last = memory.seen_step[rows]
    age = step - last
    lam = params.update_rate
    valid = seen & (last >= 0) & (age / lam <= params.memory_horizon + 1e-12)
    vs = np.zeros_like(rel)
    if valid.any():
        if (age[valid] <= 0).any():
            raise AssertionError("non-positive detection interval")
        dt = age[valid] / lam
        v_prev = np.broadcast_to(memory.last_command[rows][:, None, :], rel.shape)[valid]
        vs[valid] = (rel[valid] - memory.rel[rows][valid]) / dt[:, None] - v_prev
    return vs
