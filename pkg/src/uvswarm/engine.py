"""Synchronous simulation loop.

Every agent computes its command for step ``k`` from the same snapshot of
the world at ``k``; only after all commands are known are positions
advanced. Collisions and obstacle penetrations are recorded as faults and
left uncorrected.
"""

from __future__ import annotations

import logging
import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import body_to_world
from .flocking import ForceBreakdown, bound_velocities, goal_attraction
from .metrics import median_pairwise_distance, step_metrics
from .obstacles import ObstacleContact, collect_virtual_particles
from .perception import ObservationMemory, detect_batch, estimate_velocities, needs_draws, observer_rng
from .world import AgentState, ScenarioConfig, Wall, cylinder_arrays

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Fault:
    step: int
    agent: int
    kind: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"step": self.step, "agent": self.agent, "kind": self.kind, "detail": self.detail}


@dataclass(frozen=True, eq=False)
class SimState:
    """World snapshot at ``step``; ``agents`` are in ascending id order."""

    step: int
    agents: tuple
    memory: ObservationMemory
    rng_root: int
    faults: tuple = ()
    goals_reached: tuple = ()
    update_rate: float = 10.0

    @property
    def time(self) -> float:
        return self.step / self.update_rate

    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.agents], dtype=np.float64).reshape(-1, 3)

    def headings(self) -> np.ndarray:
        return np.array([a.heading for a in self.agents], dtype=np.float64)

    def row(self, agent_id: int) -> int:
        return next(i for i, a in enumerate(self.agents) if a.id == agent_id)


@dataclass
class RunSummary:
    scenario: str
    seed: int
    steps: int
    wall_time: float = 0.0
    min_pair: float = math.inf
    avg_pair: float = math.nan
    max_pair: float = 0.0
    min_obstacle: float = math.inf
    faults: list = field(default_factory=list)
    goals_reached: dict = field(default_factory=dict)
    backend: str = ""
    error: str | None = None

    def to_dict(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else None

        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "steps": self.steps,
            "wall_time": self.wall_time,
            "min_pair_distance": num(self.min_pair),
            "avg_pair_distance": num(self.avg_pair),
            "max_pair_distance": self.max_pair,
            "min_obstacle_distance": num(self.min_obstacle),
            "fault_count": len(self.faults),
            "faults": [f.to_dict() for f in self.faults],
            "goals_reached": {str(k): v for k, v in self.goals_reached.items()},
            "backend": self.backend,
            "error": self.error,
        }


class Sink:
    """Row-oriented output target. Subclasses override whatever they need."""

    def trajectory(self, step: int, time: float, agents) -> None:
        pass

    def metrics(self, row) -> None:
        pass

    def close(self) -> None:
        pass


class MemorySink(Sink):
    def __init__(self) -> None:
        self.trajectories: list[tuple[int, float, tuple]] = []
        self.rows: list = []

    def trajectory(self, step, time, agents) -> None:
        self.trajectories.append((step, time, agents))

    def metrics(self, row) -> None:
        self.rows.append(row)


def initial_state(config: ScenarioConfig) -> SimState:
    agents = tuple(
        AgentState(a.id, np.array(a.position, dtype=np.float64), np.zeros(3), a.heading,
                   a.blink_frequency, np.zeros(3), 0)
        for a in sorted(config.agents, key=lambda a: a.id)
    )
    memory = ObservationMemory.empty([a.id for a in agents], config.params.update_rate)
    return SimState(0, agents, memory, config.seed, (), tuple(False for _ in agents),
                    config.params.update_rate)


@dataclass(frozen=True, eq=False)
class AgentDecision:
    breakdown: ForceBreakdown
    detections: list
    faults: list


@dataclass(frozen=True, eq=False)
class BatchDecision:
    """Commands for the agents at ``rows``; arrays are indexed by position in ``rows``."""

    rows: np.ndarray
    seen: np.ndarray
    rel: np.ndarray
    baseline: np.ndarray
    navigation: np.ndarray
    total: np.ndarray
    velocity: np.ndarray
    faults: list


def _particles(agent: AgentState, obstacles, params, own_velocity, step: int):
    faults = []
    active = list(obstacles)
    index = list(range(len(obstacles)))
    while True:
        try:
            found = collect_virtual_particles(agent, active, params, own_velocity)
        except ObstacleContact as exc:
            k = exc.source
            faults.append(Fault(step, agent.id, "penetration", f"agent {agent.id} inside obstacle {index[k]}"))
            del active[k]
            del index[k]
            continue
        return [type(p)(p.rel_position, p.rel_velocity, index[p.source]) for p in found], faults


def decide_rows(state: SimState, config: ScenarioConfig, rows) -> BatchDecision:
    """Commands for the agents at ``rows`` from the shared snapshot; never mutates ``state``."""
    params = config.params
    lam = params.update_rate
    k = state.step
    rows = np.asarray(rows, dtype=np.int64)
    rngs = None
    if needs_draws(config.noise):
        rngs = [observer_rng(config.seed, state.agents[r].id, k) for r in rows]
    seen, rel = detect_batch(rows, state.positions(), state.headings(), params, config.noise, rngs, config)
    vs = estimate_velocities(rows, seen, rel, state.memory, k, params)
    f_b = params.gain_baseline * kernels.batch_baseline(rel, vs, seen, lam, params.observation_radius,
                                                        params.gain_separation)

    f_n = np.zeros((rows.shape[0], 3))
    faults = []
    for i, r in enumerate(rows):
        agent = state.agents[r]
        if config.goals and (config.leaders is None or agent.id in config.leaders):
            goal = config.goals[min(agent.goal_index, len(config.goals) - 1)]
            f_n[i] = goal_attraction(agent.position, goal, agent.heading, params, config.goal_tolerance) / lam
        if config.obstacles:
            particles, found = _particles(agent, config.obstacles, params, state.memory.last_command[r], k)
            faults.extend(found)
            if particles:
                pxs = np.array([p.rel_position for p in particles])
                pvs = np.array([p.rel_velocity for p in particles])
                f_n[i] = f_n[i] + params.gain_navigation * kernels.particle_sum(pxs, pvs, lam,
                                                                                params.obstacle_radius)
    f = f_b + f_n
    return BatchDecision(rows, seen, rel, f_b, f_n, f, bound_velocities(f, params), faults)


def decide(agent: AgentState, state: SimState, config: ScenarioConfig) -> AgentDecision:
    """Command for one agent from the shared snapshot."""
    row = state.row(agent.id)
    dec = decide_rows(state, config, [row])
    v = dec.velocity[0]
    breakdown = ForceBreakdown(dec.baseline[0], dec.navigation[0], dec.total[0], v, v / config.params.update_rate)
    detections = [(state.agents[j].id, dec.rel[0, j]) for j in np.flatnonzero(dec.seen[0])]
    return AgentDecision(breakdown, detections, dec.faults)


def _decide_all(state: SimState, config: ScenarioConfig, workers: int) -> BatchDecision:
    n = len(state.agents)
    if workers <= 1 or n < 2:
        return decide_rows(state, config, np.arange(n))
    chunks = [c for c in np.array_split(np.arange(n), min(workers, n)) if c.size]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: decide_rows(state, config, c), chunks))
    return BatchDecision(
        np.concatenate([p.rows for p in parts]),
        np.concatenate([p.seen for p in parts]),
        np.concatenate([p.rel for p in parts]),
        np.concatenate([p.baseline for p in parts]),
        np.concatenate([p.navigation for p in parts]),
        np.concatenate([p.total for p in parts]),
        np.concatenate([p.velocity for p in parts]),
        [f for p in parts for f in p.faults],
    )


def _integrate(state: SimState, cmd_body: np.ndarray, config: ScenarioConfig):
    dt = config.params.dt
    cmd_world = cmd_body.copy()
    for i, a in enumerate(state.agents):
        if a.heading != 0.0:
            cmd_world[i] = body_to_world(cmd_body[i], a.heading)
    if config.kinematics == "lag":
        alpha = min(1.0, dt / config.tau)
        prev = np.array([a.velocity for a in state.agents]).reshape(-1, 3)
        vel = prev + alpha * (cmd_world - prev)
    else:
        vel = cmd_world
    return state.positions() + vel * dt, vel, cmd_world


def _penetrations(before: np.ndarray, after: np.ndarray, config: ScenarioConfig):
    """(agent row, obstacle index) pairs inside a cylinder or across a wall after the move."""
    hits = []
    idx, centers, radii = cylinder_arrays(config.obstacles)
    if idx.size:
        dx = after[:, None, 0] - centers[None, :, 0]
        dy = after[:, None, 1] - centers[None, :, 1]
        inside = np.hypot(dx, dy) < radii[None, :]
        hits.extend((int(i), int(idx[c])) for i, c in zip(*np.nonzero(inside)))
    for k, ob in enumerate(config.obstacles):
        if isinstance(ob, Wall):
            for i in range(after.shape[0]):
                if ob.contains(after[i]) or ob.blocks(before[i], after[i]):
                    hits.append((i, k))
    return sorted(hits)


def step(state: SimState, config: ScenarioConfig, workers: int = 1) -> SimState:
    """Advance the world by one perception tick."""
    dec = _decide_all(state, config, workers)
    k_next = state.step + 1
    n = len(state.agents)
    memory = state.memory.updated(dec.rows, dec.seen, dec.rel, state.step, dec.velocity)
    faults = list(state.faults) + dec.faults

    before = state.positions()
    pos, vel, cmd_world = _integrate(state, dec.velocity, config)
    reached = list(state.goals_reached)
    moved = []
    for i, agent in enumerate(state.agents):
        goal_index = agent.goal_index
        if config.goals:
            gap = pos[i] - config.goals[goal_index]
            if math.sqrt(gap @ gap) <= config.goal_tolerance:
                if goal_index < len(config.goals) - 1:
                    goal_index += 1
                else:
                    reached[i] = True
        moved.append(agent.moved(pos[i], vel[i], cmd_world[i], goal_index))
    for i, k in _penetrations(before, pos, config):
        aid = state.agents[i].id
        faults.append(Fault(k_next, aid, "penetration", f"agent {aid} inside obstacle {k}"))

    if n > 1:
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        for i, j in zip(*np.nonzero(np.triu(dist < config.params.collision_radius, k=1))):
            a, b = sorted((moved[i].id, moved[j].id))
            faults.append(Fault(k_next, a, "collision", f"agents {a} and {b} at {dist[i, j]:.4g} m"))

    return SimState(k_next, tuple(moved), memory, state.rng_root, tuple(faults), tuple(reached),
                    state.update_rate)


def run(config: ScenarioConfig, sinks=(), workers: int = 1, seed: int | None = None) -> RunSummary:
    """Execute the whole scenario, streaming rows to ``sinks``.

    I/O errors raised by a sink stop the run; the partial outputs are closed
    and the error is recorded on the returned summary.
    """
    if seed is not None:
        config = config.with_updates(seed=seed)
    if isinstance(sinks, Sink):
        sinks = (sinks,)
    started = _time.perf_counter()
    state = initial_state(config)
    n_steps = config.n_steps
    summary = RunSummary(config.name, config.seed, 0, backend=kernels.BACKEND)

    positions = state.positions()
    target = median_pairwise_distance(positions) if len(positions) >= 2 else 1.0
    if not target > 0.0:
        target = config.params.collision_radius
    radius = config.params.observation_radius

    avg_total = 0.0
    avg_count = 0
    try:
        for _ in range(n_steps):
            state = step(state, config, workers)
            row = step_metrics(state.step, state.time, state.positions(), config.obstacles, target, radius)
            for sink in sinks:
                sink.trajectory(state.step, state.time, state.agents)
                if row is not None:
                    sink.metrics(row)
            if row is not None:
                summary.min_pair = min(summary.min_pair, row.min_pair)
                summary.max_pair = max(summary.max_pair, row.max_pair)
                summary.min_obstacle = min(summary.min_obstacle, row.min_obstacle)
                avg_total += row.avg_pair
                avg_count += 1
            summary.steps = state.step
    except OSError as exc:
        summary.error = f"I/O failure at step {state.step}: {exc}"
        log.error(summary.error)
    finally:
        for sink in sinks:
            try:
                sink.close()
            except OSError as exc:  # keep the first error
                summary.error = summary.error or f"I/O failure on close: {exc}"

    summary.avg_pair = avg_total / avg_count if avg_count else math.nan
    summary.faults = sorted(state.faults, key=lambda f: (f.step, f.agent, f.kind, f.detail))
    summary.goals_reached = {a.id: bool(r) for a, r in zip(state.agents, state.goals_reached)}
    summary.wall_time = _time.perf_counter() - started
    return summary


def simulate(config: ScenarioConfig, workers: int = 1) -> tuple[RunSummary, MemorySink]:
    """Run into memory; handy for tests and notebooks."""
    sink = MemorySink()
    return run(config, (sink,), workers), sink


__all__ = [
    "Fault",
    "SimState",
    "RunSummary",
    "Sink",
    "MemorySink",
    "AgentDecision",
    "BatchDecision",
    "decide_rows",
    "initial_state",
    "decide",
    "step",
    "run",
    "simulate",
]
