import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from uvswarm.core import NoiseModel, SwarmParams
from uvswarm.perception import (MemoryEntry, ObservationMemory, apply_noise, check_occlusion, detect_batch,
                                detect_neighbors, estimate_relative_velocity, estimate_velocities, observe,
                                observer_rng)
from uvswarm.world import AgentState, Cylinder, ScenarioConfig, Wall

P = SwarmParams()
ZERO = NoiseModel.zero()


def agent(i, x, y=0.0, z=0.0, heading=0.0):
    return AgentState(i, np.array([x, y, z], dtype=float), heading=heading)


def test_zero_noise_reports_exact_vector():
    out = detect_neighbors(agent(0, 1, 1, 1), [agent(1, 5, 1, 1)], P, ZERO, None)
    assert len(out) == 1
    assert out[0][0] == 1
    assert np.array_equal(out[0][1], np.array([4.0, 0.0, 0.0]))


def test_out_of_range_neighbor_excluded():
    assert detect_neighbors(agent(0, 0), [agent(1, 12)], P, ZERO, None) == []


def test_range_gate_is_closed():
    out = detect_neighbors(agent(0, 0), [agent(1, 10)], P, ZERO, None)
    assert [nid for nid, _ in out] == [1]


def test_body_frame_rotation():
    obs = agent(0, 0, heading=math.pi / 2)
    out = detect_neighbors(obs, [agent(1, 0, 3)], P, ZERO, None)
    assert out[0][1] == pytest.approx([3.0, 0.0, 0.0], abs=1e-12)


def test_observer_is_never_its_own_neighbor():
    a = agent(0, 0)
    assert detect_neighbors(a, [a, agent(1, 2)], P, ZERO, None)[0][0] == 1


def test_fov_gating():
    cfg = ScenarioConfig(agents=(agent(0, 0), agent(1, 3), agent(2, -3)), fov_horizontal=math.pi, noise=ZERO)
    out = detect_neighbors(cfg.agents[0], cfg.agents[1:], P, ZERO, None, cfg)
    assert [nid for nid, _ in out] == [1]
    cfg = ScenarioConfig(agents=(agent(0, 0), agent(1, 3), agent(2, 0, 0, 4)), fov_vertical=math.pi / 2, noise=ZERO)
    out = detect_neighbors(cfg.agents[0], cfg.agents[1:], P, ZERO, None, cfg)
    assert [nid for nid, _ in out] == [1]


def test_occlusion_in_detection():
    agents = (agent(0, 0), agent(1, 5), agent(2, 10))
    cfg = ScenarioConfig(agents=agents, occlusion_enabled=True, noise=ZERO)
    out = detect_neighbors(agents[0], agents[1:], P, ZERO, None, cfg)
    assert [nid for nid, _ in out] == [1]


def test_dropout_all_and_none():
    others = [agent(i, 2.0 * i) for i in range(1, 4)]
    drop_all = NoiseModel(0.0, 0.0, 0.0, 1.0)
    assert detect_neighbors(agent(0, 0), others, P, drop_all, observer_rng(0, 0, 0)) == []
    keep_all = NoiseModel(0.0, 0.0, 0.0, 0.0)
    assert len(detect_neighbors(agent(0, 0), others, P, keep_all, observer_rng(0, 0, 0))) == 3


def test_draws_do_not_depend_on_visibility():
    """A neighbour's noise sample is the same whether or not another neighbour is in range."""
    noise = NoiseModel()
    near = [agent(1, 3), agent(2, 0, 4)]
    far = [agent(1, 30), agent(2, 0, 4)]
    a = dict(detect_neighbors(agent(0, 0), near, P, noise, observer_rng(9, 0, 5)))
    b = dict(detect_neighbors(agent(0, 0), far, P, noise, observer_rng(9, 0, 5)))
    assert 1 not in b
    assert np.array_equal(a[2], b[2])


def test_noisy_range_is_clamped():
    rel = np.array([[0.1, 0.0, 0.0]] * 50)
    normals = np.full((50, 3), -10.0)
    out = apply_noise(rel, NoiseModel(), normals)
    assert np.allclose(np.linalg.norm(out, axis=1), 0.05)
    tiny = apply_noise(np.array([[0.0, 0.0, 0.0], [0.01, 0, 0]]), ZERO, None)
    assert np.allclose(np.linalg.norm(tiny, axis=1), 0.05)


def test_noise_statistics_unbiased():
    n = 100_000
    rng = observer_rng(1, 2, 3)
    rel = np.tile([6.0, 0.0, 0.0], (n, 1))
    noise = NoiseModel()
    out = apply_noise(rel, noise, rng.standard_normal((n, 3)))
    r_err = np.linalg.norm(out, axis=1) - 6.0
    az_err = np.arctan2(out[:, 1], out[:, 0])
    assert abs(r_err.mean()) < 3 * noise.sigma_r / math.sqrt(n)
    assert abs(az_err.mean()) < 3 * noise.sigma_az / math.sqrt(n)


@given(st.floats(1.0, 10.0), st.floats(0.5, 1.0))
def test_gating_monotone_in_radius(radius, shrink):
    rng = np.random.default_rng(int(radius * 1000))
    others = [agent(i, *rng.uniform(-9, 9, 3)) for i in range(1, 12)]
    big = SwarmParams(observation_radius=radius, collision_radius=0.1)
    small = SwarmParams(observation_radius=radius * shrink, collision_radius=0.05)
    seen_big = {nid for nid, _ in detect_neighbors(agent(0, 0), others, big, ZERO, None)}
    seen_small = {nid for nid, _ in detect_neighbors(agent(0, 0), others, small, ZERO, None)}
    assert seen_small <= seen_big


def test_zero_noise_fidelity_random():
    rng = np.random.default_rng(4)
    pos = rng.uniform(-8, 8, (8, 3))
    agents = [agent(i, *p) for i, p in enumerate(pos)]
    for obs in agents:
        out = dict(detect_neighbors(obs, agents, P, ZERO, None))
        for other in agents:
            if other.id == obs.id:
                continue
            delta = other.position - obs.position
            if np.linalg.norm(delta) <= 10.0:
                assert np.array_equal(out[other.id], delta)
            else:
                assert other.id not in out


@pytest.mark.parametrize("current, previous, dt, v_prev, expected", [
    ((2, 0, 0), (1, 0, 0), 0.1, (5, 0, 0), (5, 0, 0)),
    ((1, 2, 3), (1, 2, 3), 0.1, (0, 0, 0), (0, 0, 0)),
])
def test_relative_velocity_examples(current, previous, dt, v_prev, expected):
    entry = MemoryEntry(np.array(previous, float), 0.0, 0)
    out = estimate_relative_velocity(np.array(current, float), entry, dt, np.array(v_prev, float))
    assert out == pytest.approx(expected, abs=1e-12)


def test_first_detection_has_zero_velocity():
    assert np.array_equal(estimate_relative_velocity(np.ones(3), None, 0.1, np.ones(3)), np.zeros(3))


def test_nonpositive_interval_is_fatal():
    entry = MemoryEntry(np.zeros(3), 0.0, 0)
    with pytest.raises(AssertionError):
        estimate_relative_velocity(np.ones(3), entry, 0.0, np.zeros(3))


def test_occlusion_examples():
    assert check_occlusion(np.zeros(3), np.array([10.0, 0, 0]), [np.array([5.0, 0, 0])], [])
    assert not check_occlusion(np.zeros(3), np.array([10.0, 0, 0]), [], [])
    cyl = Cylinder(np.array([5.0, 0.0, 0.0]), 1.0)
    assert check_occlusion(np.zeros(3), np.array([10.0, 0, 0]), [], [cyl])
    wall = Wall.from_endpoints([5, -1], [5, 1])
    assert check_occlusion(np.zeros(3), np.array([10.0, 0, 0]), [], [wall])


def test_occlusion_agrees_with_sampling_oracle():
    rng = np.random.default_rng(8)
    for _ in range(300):
        p, q, c = rng.uniform(-5, 5, (3, 3))
        want = oracles.segment_passes_sphere(p, q, c, 0.4)
        dist_to_line = min(np.linalg.norm(p + t * (q - p) - c) for t in np.linspace(0, 1, 2001))
        if abs(dist_to_line - 0.4) < 1e-3:
            continue
        assert check_occlusion(p, q, [c], [], 0.4) == want


def test_memory_horizon_and_velocity_estimate():
    mem = ObservationMemory.empty([0, 1], 10.0)
    seen = np.array([[False, True]])
    first = np.array([[[0, 0, 0], [3.0, 0, 0]]])
    mem = mem.updated([0], seen, first, 4, np.array([[0.5, 0, 0]]))
    assert mem.lookup(0, 1, 0.5, 1.0).step == 4
    assert mem.lookup(0, 1, 1.41, 1.0) is None
    assert mem.lookup(1, 0, 0.5, 1.0) is None

    now = np.array([[[0, 0, 0], [3.2, 0, 0]]])
    vs = estimate_velocities([0], seen, now, mem, 6, P)
    assert vs[0, 1] == pytest.approx([0.2 / 0.2 - 0.5, 0, 0])
    stale = estimate_velocities([0], seen, now, mem, 15, P)
    assert np.array_equal(stale, np.zeros_like(stale))


def test_batch_velocity_matches_per_neighbor_observe():
    rng = np.random.default_rng(2)
    ids = [0, 1, 2, 3]
    mem = ObservationMemory.empty(ids, 10.0)
    seen = rng.random((4, 4)) < 0.8
    np.fill_diagonal(seen, False)
    mem = mem.updated(np.arange(4), seen, rng.normal(size=(4, 4, 3)), 3, rng.normal(size=(4, 3)))
    rel = rng.normal(size=(4, 4, 3))
    batch = estimate_velocities(np.arange(4), seen, rel, mem, 5, P)
    for i in range(4):
        detections = [(j, rel[i, j]) for j in range(4) if seen[i, j]]
        for ob in observe(AgentState(i, np.zeros(3)), detections, mem, 0.5, 5, P):
            assert ob.rel_velocity == pytest.approx(batch[i, ob.neighbor_id], abs=1e-12)


def test_memory_updates_are_copies():
    mem = ObservationMemory.empty([0, 1], 10.0)
    new = mem.updated([0], np.array([[False, True]]), np.ones((1, 2, 3)), 0, np.ones((1, 3)))
    assert mem.seen_step[0, 1] == -1
    assert new.seen_step[0, 1] == 0
    assert np.array_equal(new.previous_command(0), np.ones(3))


def test_batch_rows_agree_with_single_observer():
    rng = np.random.default_rng(6)
    pos = rng.uniform(-6, 6, (6, 3))
    headings = rng.uniform(-3, 3, 6)
    noise = NoiseModel()
    rngs = [observer_rng(3, i, 7) for i in range(6)]
    seen, rel = detect_batch(np.arange(6), pos, headings, P, noise, rngs)
    agents = [AgentState(i, pos[i], heading=headings[i]) for i in range(6)]
    for i in range(6):
        single = dict(detect_neighbors(agents[i], agents, P, noise, observer_rng(3, i, 7)))
        assert set(single) == set(np.flatnonzero(seen[i]))
        for j, v in single.items():
            assert np.array_equal(v, rel[i, j])
