"""Decentralized control law.

All inputs and outputs are in the body frame of the acting agent. The
steering "force" is a displacement per perception tick; multiplying by the
update rate turns it into a velocity before the speed bound is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import MIN_RANGE, SwarmParams, world_to_body


def kappa(x, r: float) -> float:
    """Nonlinear repulsion weight: zero at and beyond ``r``, growing as ``|x|`` shrinks.

    A zero vector is weighted as if it were ``MIN_RANGE`` away.
    """
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        norm = MIN_RANGE
    if norm >= r:
        return 0.0
    sn, sr = math.sqrt(norm), math.sqrt(r)
    if norm < 0.25 * r:
        return 1.0 / sn - 1.0 / sr
    # rewritten near r to avoid cancellation
    return (r - norm) / (sn * sr * (sn + sr))


def equilibrium_distance(observation_radius: float, gain_separation: float = 1.0) -> float:
    """Distance at which a lone, static neighbour exerts zero baseline force."""
    return 1.0 / (1.0 / gain_separation + 1.0 / math.sqrt(observation_radius)) ** 2


def _stack(rows) -> np.ndarray:
    return np.ascontiguousarray(np.array(rows, dtype=np.float64).reshape(-1, 3))


@dataclass(frozen=True, eq=False)
class ForceBreakdown:
    baseline: np.ndarray
    navigation: np.ndarray
    total: np.ndarray
    velocity: np.ndarray
    setpoint: np.ndarray


def baseline_force(observations, params: SwarmParams) -> np.ndarray:
    """Mean cohesion + alignment - separation over the observed neighbours."""
    if not observations:
        return np.zeros(3)
    xs = _stack([o.rel_position for o in observations])
    vs = _stack([o.rel_velocity for o in observations])
    f = kernels.baseline_sum(xs, vs, params.update_rate, params.observation_radius, params.gain_separation)
    return params.gain_baseline * f


def goal_attraction(agent_pos, goal, heading: float, params: SwarmParams,
                    goal_tolerance: float = 1.5) -> np.ndarray:
    """Constant-speed pull towards ``goal``, tapering linearly inside ``goal_tolerance``."""
    if goal is None:
        return np.zeros(3)
    delta = np.asarray(goal, dtype=np.float64) - np.asarray(agent_pos, dtype=np.float64)
    dist = math.sqrt(delta @ delta)
    if dist == 0.0:
        return np.zeros(3)
    speed = params.nav_speed * min(1.0, dist / goal_tolerance)
    return world_to_body(speed * delta / dist, heading)


def navigation_force(virtual_particles, v_nav, params: SwarmParams) -> np.ndarray:
    v_nav = np.asarray(v_nav, dtype=np.float64)
    out = v_nav / params.update_rate
    if virtual_particles:
        xs = _stack([p.rel_position for p in virtual_particles])
        vs = _stack([p.rel_velocity for p in virtual_particles])
        out = out + params.gain_navigation * kernels.particle_sum(xs, vs, params.update_rate,
                                                                  params.obstacle_radius)
    return out


def total_force(f_b, f_n) -> np.ndarray:
    return np.asarray(f_b, dtype=np.float64) + np.asarray(f_n, dtype=np.float64)


def bound_velocity(f, params: SwarmParams) -> np.ndarray:
    """Velocity along ``f`` with magnitude ``min(v_m, update_rate * |f|)``."""
    f = np.asarray(f, dtype=np.float64)
    norm = math.sqrt(f @ f)
    if norm == 0.0:
        return np.zeros(3)
    return min(params.max_speed, params.update_rate * norm) * (f / norm)


def bound_velocities(f: np.ndarray, params: SwarmParams) -> np.ndarray:
    """Row-wise :func:`bound_velocity` for an (r, 3) array."""
    norm = np.sqrt(f[:, 0] * f[:, 0] + f[:, 1] * f[:, 1] + f[:, 2] * f[:, 2])
    out = np.zeros_like(f)
    nz = norm > 0.0
    if nz.any():
        speed = np.minimum(params.max_speed, params.update_rate * norm[nz])
        out[nz] = speed[:, None] * (f[nz] / norm[nz][:, None])
    return out


def command_from_arrays(xs: np.ndarray, vs: np.ndarray, particle_xs: np.ndarray,
                        particle_vs: np.ndarray, v_nav: np.ndarray | None,
                        params: SwarmParams) -> ForceBreakdown:
    """Control law on stacked (m, 3) neighbour and (p, 3) particle arrays."""
    lam = params.update_rate
    if xs.shape[0]:
        f_b = params.gain_baseline * kernels.baseline_sum(xs, vs, lam, params.observation_radius,
                                                          params.gain_separation)
    else:
        f_b = np.zeros(3)
    f_n = np.zeros(3) if v_nav is None else v_nav / lam
    if particle_xs.shape[0]:
        f_n = f_n + params.gain_navigation * kernels.particle_sum(particle_xs, particle_vs, lam,
                                                                  params.obstacle_radius)
    f = f_b + f_n
    v = bound_velocity(f, params)
    return ForceBreakdown(f_b, f_n, f, v, v / lam)


def compute_step(observations, virtual_particles, v_nav, params: SwarmParams) -> ForceBreakdown:
    """Compose the full control law for one agent and one tick.

    ``v_nav`` is the body-frame goal attraction (see :func:`goal_attraction`),
    or None for no goal.
    """
    xs = _stack([o.rel_position for o in observations])
    vs = _stack([o.rel_velocity for o in observations])
    pxs = _stack([p.rel_position for p in virtual_particles])
    pvs = _stack([p.rel_velocity for p in virtual_particles])
    if v_nav is not None:
        v_nav = np.asarray(v_nav, dtype=np.float64)
    return command_from_arrays(xs, vs, pxs, pvs, v_nav, params)
