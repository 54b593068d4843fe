"""Obstacle-to-virtual-particle transforms.

A detected obstacle is replaced by one dimensionless particle whose relative
position and velocity feed the same repulsion rule used for neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import SwarmParams, world_to_body
from .world import AgentState, Cylinder, Wall, cylinder_arrays


class ObstacleContact(Exception):
    """The agent is on or inside an obstacle, so no particle can be formed."""

    def __init__(self, message: str, source: int | None = None):
        super().__init__(message)
        self.source = source


@dataclass(frozen=True, eq=False)
class VirtualParticle:
    rel_position: np.ndarray
    rel_velocity: np.ndarray
    source: int = -1


def circle_virtual_particle(center, radius: float, own_velocity, source: int = -1) -> VirtualParticle:
    """Particle for a circular obstacle with body-frame centre ``center``.

    Sits on the circle at the point nearest the agent and carries the
    tangential part of the agent's own velocity, scaled by ``radius/|c|``.
    """
    c = np.asarray(center, dtype=np.float64)
    v = np.asarray(own_velocity, dtype=np.float64)
    dist = float(np.linalg.norm(c))
    if dist <= radius:
        raise ObstacleContact(f"agent inside circular obstacle (|c|={dist:.6g} <= r={radius:.6g})", source)
    ratio = radius / dist
    mu = c / dist
    return VirtualParticle((1.0 - ratio) * c, ratio * (v - (mu @ v) * mu), source)


def line_virtual_particle(normal, observed_points, own_velocity, source: int = -1) -> VirtualParticle:
    n = np.asarray(normal, dtype=np.float64)
    pts = np.asarray(observed_points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise ValueError("a linear obstacle needs at least one observed point")
    # argmin keeps the first index on ties
    p_hat = pts[int(np.argmin(np.linalg.norm(pts, axis=1)))]
    dist = float(np.linalg.norm(p_hat))
    if dist == 0.0:
        raise ObstacleContact("agent touching a linear obstacle", source)
    proj = np.eye(3) - np.outer(n, n)
    return VirtualParticle(p_hat - proj @ p_hat, (proj @ np.asarray(own_velocity, dtype=np.float64)) / dist,
                           source)


def collect_virtual_particles(agent: AgentState, obstacles, params: SwarmParams,
                              own_velocity=None) -> list[VirtualParticle]:
    """One particle per obstacle whose surface lies within ``obstacle_radius``.

    ``own_velocity`` is the agent's body-frame swarming velocity; it defaults
    to the agent's last command. Particles come back ordered by obstacle
    index. Raises :class:`ObstacleContact` for the first obstacle the agent is
    touching or inside.
    """
    if not obstacles:
        return []
    v = agent.commanded_velocity if own_velocity is None else np.asarray(own_velocity, dtype=np.float64)
    ro = params.obstacle_radius
    p = agent.position
    found: dict[int, VirtualParticle] = {}

    idx, centers, radii = cylinder_arrays(obstacles)
    if idx.size:
        delta = centers - p
        delta[:, 2] = 0.0
        horiz = np.sqrt(delta[:, 0] ** 2 + delta[:, 1] ** 2)
        inside = horiz <= radii
        if inside.any():
            k = int(idx[np.argmax(inside)])
            raise ObstacleContact(f"agent {agent.id} inside obstacle {k}", k)
        near = horiz - radii <= ro
        if near.any():
            rel = delta[near]
            if agent.heading != 0.0:
                rel = np.array([world_to_body(r, agent.heading) for r in rel])
            xs, vs = kernels.cylinder_particles(np.ascontiguousarray(rel), radii[near], v)
            for row, k in enumerate(idx[near]):
                found[int(k)] = VirtualParticle(xs[row], vs[row], int(k))

    for k, ob in enumerate(obstacles):
        if not isinstance(ob, Wall):
            continue
        nearest = ob.nearest_point(p)
        if float(np.hypot(nearest[0] - p[0], nearest[1] - p[1])) > ro:
            continue
        pts = [nearest]
        for end in (ob.endpoint_a, ob.endpoint_b):
            e = np.array([end[0], end[1], p[2]])
            if float(np.hypot(e[0] - p[0], e[1] - p[1])) <= ro:
                pts.append(e)
        body = [world_to_body(q - p, agent.heading) for q in pts]
        try:
            found[k] = line_virtual_particle(world_to_body(ob.normal, agent.heading), body, v, k)
        except ObstacleContact as exc:
            raise ObstacleContact(f"agent {agent.id} touching obstacle {k}", k) from exc

    return [found[k] for k in sorted(found)]


__all__ = [
    "Cylinder",
    "ObstacleContact",
    "VirtualParticle",
    "circle_virtual_particle",
    "line_virtual_particle",
    "collect_virtual_particles",
]
