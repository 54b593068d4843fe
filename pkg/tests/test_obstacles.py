import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from uvswarm.core import SwarmParams, rot_z
from uvswarm.flocking import navigation_force
from uvswarm.obstacles import (ObstacleContact, circle_virtual_particle, collect_virtual_particles,
                               line_virtual_particle)
from uvswarm.world import AgentState, Cylinder, Wall

vectors = st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3).map(np.array)


def agent(pos, heading=0.0, cmd=(0.0, 0.0, 0.0)):
    return AgentState(0, np.array(pos, float), heading=heading, commanded_velocity=np.array(cmd, float))


def test_circle_examples():
    radial = circle_virtual_particle([5, 0, 0], 1.0, [1, 0, 0])
    assert np.array_equal(radial.rel_position, [4.0, 0, 0])
    assert np.array_equal(radial.rel_velocity, [0.0, 0, 0])
    side = circle_virtual_particle([5, 0, 0], 1.0, [0, 1, 0])
    assert side.rel_velocity == pytest.approx([0, 0.2, 0], abs=1e-15)


def test_circle_surface_limit():
    for eps in (1e-3, 1e-6, 1e-9):
        p = circle_virtual_particle([0, 3, 0], 3 - eps, [0, 0, 0])
        assert np.linalg.norm(p.rel_position) == pytest.approx(eps, rel=1e-6)


@pytest.mark.parametrize("dist", [0.5, 1.0])
def test_circle_contact_raises(dist):
    with pytest.raises(ObstacleContact):
        circle_virtual_particle([dist, 0, 0], 1.0, [0, 0, 0])


def test_line_examples():
    p = line_virtual_particle([1, 0, 0], [[3, 0, 0], [3, 2, 0]], [0, 2, 0])
    assert np.array_equal(p.rel_position, [3.0, 0, 0])
    assert p.rel_velocity == pytest.approx([0, 2 / 3, 0], abs=1e-15)
    assert np.array_equal(line_virtual_particle([1, 0, 0], [[3, 0, 0]], [5, 0, 0]).rel_velocity, np.zeros(3))


def test_line_tie_breaks_on_first_point():
    p = line_virtual_particle([1, 0, 0], [[3, 1, 0], [3, -1, 0]], [1, 1, 0])
    assert np.array_equal(p.rel_position, [3.0, 0, 0])
    assert p.rel_velocity == pytest.approx([0, 1 / math.sqrt(10), 0])


def test_line_errors():
    with pytest.raises(ObstacleContact):
        line_virtual_particle([1, 0, 0], [[0, 0, 0]], [1, 0, 0])
    with pytest.raises(ValueError):
        line_virtual_particle([1, 0, 0], [], [1, 0, 0])


@given(st.floats(0.1, 5.0), st.floats(1.0001, 4.0), st.floats(-math.pi, math.pi), st.floats(-1, 1), vectors)
def test_circle_invariants(radius, ratio, az, z, v):
    c = np.array([math.cos(az), math.sin(az), 0.0]) * radius * ratio
    c[2] = z
    dist = np.linalg.norm(c)
    if dist <= radius * 1.0001:
        return
    p = circle_virtual_particle(c, radius, v)
    mu = c / dist
    assert np.linalg.norm(p.rel_position) + radius == pytest.approx(dist, rel=1e-9)
    assert abs(p.rel_velocity @ mu) <= 1e-9 * max(1.0, np.linalg.norm(v))
    assert np.linalg.norm(p.rel_velocity) <= (radius / dist) * np.linalg.norm(v) * (1 + 1e-12) + 1e-15
    want_x, want_v = oracles.circle_particle(c, radius, v)
    assert p.rel_position == pytest.approx(want_x, rel=1e-9, abs=1e-12)
    assert p.rel_velocity == pytest.approx(want_v, rel=1e-9, abs=1e-9)


@given(st.floats(-math.pi, math.pi), st.lists(vectors, min_size=1, max_size=4), vectors)
def test_line_invariants(theta, points, v):
    n = np.array([math.cos(theta), math.sin(theta), 0.0])
    if min(np.linalg.norm(p) for p in points) < 1e-3:
        return
    p = line_virtual_particle(n, points, v)
    t = np.array([-n[1], n[0], 0.0])
    assert abs(p.rel_position @ t) <= 1e-9 * np.linalg.norm(p.rel_position) + 1e-12
    assert abs(p.rel_position[2]) <= 1e-12
    assert abs(p.rel_velocity @ n) <= 1e-9 * max(1.0, np.linalg.norm(p.rel_velocity))
    want_x, want_v = oracles.line_particle(n, points, v)
    assert p.rel_position == pytest.approx(want_x, rel=1e-9, abs=1e-12)
    assert p.rel_velocity == pytest.approx(want_v, rel=1e-9, abs=1e-12)


def test_collect_empty_and_out_of_range():
    p = SwarmParams(obstacle_radius=1.0)
    assert collect_virtual_particles(agent([0, 0, 5]), [], p) == []
    assert collect_virtual_particles(agent([0, 0, 5]), [Cylinder(np.array([5.0, 0, 0]), 1.0)], p) == []


def test_collect_three_obstacles():
    p = SwarmParams(obstacle_radius=2.0)
    obstacles = [Cylinder(np.array([3.0, 0, 0]), 1.5), Wall.from_endpoints([-5, -1.5], [5, -1.5]),
                 Cylinder(np.array([-2.5, 1.0, 0]), 1.0), Cylinder(np.array([20.0, 0, 0]), 1.0)]
    parts = collect_virtual_particles(agent([0, 0, 5], cmd=[0.5, 0, 0]), obstacles, p)
    assert [q.source for q in parts] == [0, 1, 2]
    assert parts[0].rel_position == pytest.approx([1.5, 0, 0])
    assert parts[1].rel_position == pytest.approx([0, -1.5, 0])
    assert parts[1].rel_velocity == pytest.approx([0.5 / 1.5, 0, 0])


def test_collect_includes_surface_at_radius():
    p = SwarmParams(obstacle_radius=1.0)
    parts = collect_virtual_particles(agent([0, 0, 2]), [Cylinder(np.array([2.0, 0, 0]), 1.0)], p)
    assert len(parts) == 1
    assert parts[0].rel_position == pytest.approx([1.0, 0, 0])


def test_collect_inside_raises_with_source():
    obstacles = [Cylinder(np.array([9.0, 0, 0]), 1.0), Cylinder(np.array([0.2, 0, 0]), 1.0)]
    with pytest.raises(ObstacleContact) as err:
        collect_virtual_particles(agent([0, 0, 2]), obstacles, SwarmParams())
    assert err.value.source == 1


def test_collect_short_wall_projects_nearest_endpoint():
    p = SwarmParams(obstacle_radius=2.0)
    wall = Wall.from_endpoints([1.0, 1.0], [1.0, 3.0])
    parts = collect_virtual_particles(agent([0, 0, 5], cmd=[0, 1, 0]), [wall], p)
    assert len(parts) == 1
    assert parts[0].rel_position == pytest.approx([1.0, 0, 0], abs=1e-15)
    assert parts[0].rel_velocity == pytest.approx([0, 1 / math.sqrt(2), 0])


@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi), st.integers(0, 10_000))
def test_frame_equivariance(theta, heading, seed):
    """Rotating the world about the agent rotates the world-frame particles with it."""
    rng = np.random.default_rng(seed)
    p = SwarmParams(obstacle_radius=2.0)
    pos = np.array([0.0, 0.0, 3.0])
    cmd = rng.normal(size=3)
    c = rng.uniform(-3, 3, 2)
    c *= (1.5 + rng.uniform(0, 0.4)) / np.linalg.norm(c)
    a, b = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
    obstacles = [Cylinder(np.array([c[0], c[1], 0.0]), 0.5), Wall.from_endpoints(a, b)]
    if any(ob.distance(pos) < 0.05 for ob in obstacles):
        return
    R = rot_z(theta)
    turned = [Cylinder(R @ obstacles[0].center, 0.5), Wall.from_endpoints((R @ [*a, 0])[:2], (R @ [*b, 0])[:2])]
    base = collect_virtual_particles(agent(pos, heading, cmd), obstacles, p)
    rot = collect_virtual_particles(agent(pos, heading + theta, cmd), turned, p)
    assert [q.source for q in base] == [q.source for q in rot]
    for q, r in zip(base, rot):
        # a body frame turned with the world sees identical body-frame particles
        assert r.rel_position == pytest.approx(q.rel_position, abs=1e-9)
        assert r.rel_velocity == pytest.approx(q.rel_velocity, abs=1e-9)


@given(st.floats(0.05, 0.99), st.floats(-math.pi, math.pi), vectors)
def test_particle_repels(frac, az, v):
    p = SwarmParams(obstacle_radius=2.0)
    c = np.array([math.cos(az), math.sin(az), 0.0]) * (1.0 + 2.0 * frac)
    q = circle_virtual_particle(c, 1.0, np.zeros(3))
    assert navigation_force([q], np.zeros(3), p) @ q.rel_position < 0
