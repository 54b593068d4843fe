"""Scenario description: agents, obstacles, goals, and strict JSON loading.

Obstacles are vertical and infinitely tall, so every geometric query works on
the horizontal (x, y) projection.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Union

import numpy as np

from .core import MAX_FREQUENCIES, ConfigError, NoiseModel, SwarmParams, as_vec3, wrap_angle

DEFAULT_FREQUENCIES = (6.0, 15.0, 30.0)
DEFAULT_GOAL_TOLERANCE = 1.5


@dataclass(frozen=True, eq=False)
class AgentState:
    id: int
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    heading: float = 0.0
    blink_frequency: float = DEFAULT_FREQUENCIES[0]
    commanded_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    goal_index: int = 0

    def moved(self, position, velocity, commanded_velocity, goal_index) -> "AgentState":
        return AgentState(self.id, position, velocity, self.heading, self.blink_frequency,
                          commanded_velocity, goal_index)


# -- geometry on the horizontal plane ---------------------------------------

def point_segment_distance_2d(p, a, b) -> float:
    return float(np.hypot(*(p[:2] - closest_point_on_segment_2d(p, a, b))))


def closest_point_on_segment_2d(p, a, b) -> np.ndarray:
    a = np.asarray(a[:2], dtype=np.float64)
    b = np.asarray(b[:2], dtype=np.float64)
    ab = b - a
    t = float(np.dot(np.asarray(p[:2]) - a, ab) / np.dot(ab, ab))
    t = min(1.0, max(0.0, t))
    return a + t * ab


def segment_hits_circle_2d(p, q, center, radius) -> bool:
    """True when segment ``p``-``q`` passes within ``radius`` of ``center``."""
    return point_segment_distance_2d(np.asarray(center, dtype=np.float64), p, q) <= radius


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_intersect_2d(p1, p2, q1, q2) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    return ((d1 == 0 and on_seg(q1, q2, p1)) or (d2 == 0 and on_seg(q1, q2, p2))
            or (d3 == 0 and on_seg(p1, p2, q1)) or (d4 == 0 and on_seg(p1, p2, q2)))


def segment_hits_sphere(p, q, center, radius) -> bool:
    p = np.asarray(p, dtype=np.float64)
    d = np.asarray(q, dtype=np.float64) - p
    f = np.asarray(center, dtype=np.float64) - p
    dd = float(d @ d)
    t = 0.0 if dd == 0.0 else min(1.0, max(0.0, float(f @ d) / dd))
    gap = f - t * d
    return float(gap @ gap) <= radius * radius


# -- obstacles ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Cylinder:
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ConfigError(f"cylinder radius must be > 0, got {self.radius}")

    def distance(self, p) -> float:
        gap = float(np.hypot(p[0] - self.center[0], p[1] - self.center[1])) - self.radius
        return max(gap, 0.0)

    def contains(self, p) -> bool:
        return float(np.hypot(p[0] - self.center[0], p[1] - self.center[1])) < self.radius

    def blocks(self, p, q) -> bool:
        return segment_hits_circle_2d(p, q, self.center, self.radius)

    def to_dict(self) -> dict:
        return {"type": "cylinder", "center": [float(self.center[0]), float(self.center[1])],
                "radius": float(self.radius)}


@dataclass(frozen=True, eq=False)
class Wall:
    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    normal: np.ndarray

    def __post_init__(self) -> None:
        ab = self.endpoint_b[:2] - self.endpoint_a[:2]
        if float(np.hypot(*ab)) == 0.0:
            raise ConfigError("wall endpoints must be distinct")
        if abs(float(np.linalg.norm(self.normal)) - 1.0) > 1e-9 or abs(self.normal[2]) > 1e-9:
            raise ConfigError("wall normal must be a horizontal unit vector")
        if abs(float(self.normal[:2] @ ab)) > 1e-9 * float(np.hypot(*ab)):
            raise ConfigError("wall normal must be perpendicular to the segment")

    @classmethod
    def from_endpoints(cls, a, b) -> "Wall":
        a = np.array([a[0], a[1], 0.0], dtype=np.float64)
        b = np.array([b[0], b[1], 0.0], dtype=np.float64)
        d = b - a
        length = float(np.hypot(d[0], d[1]))
        if length == 0.0:
            raise ConfigError("wall endpoints must be distinct")
        normal = np.array([-d[1] / length, d[0] / length, 0.0])
        return cls(a, b, normal)

    def nearest_point(self, p) -> np.ndarray:
        c = closest_point_on_segment_2d(p, self.endpoint_a, self.endpoint_b)
        return np.array([c[0], c[1], p[2]])

    def distance(self, p) -> float:
        return point_segment_distance_2d(p, self.endpoint_a, self.endpoint_b)

    def contains(self, p) -> bool:
        return self.distance(p) == 0.0

    def blocks(self, p, q) -> bool:
        return segments_intersect_2d(p[:2], q[:2], self.endpoint_a[:2], self.endpoint_b[:2])

    def to_dict(self) -> dict:
        return {"type": "wall", "a": [float(self.endpoint_a[0]), float(self.endpoint_a[1])],
                "b": [float(self.endpoint_b[0]), float(self.endpoint_b[1])]}


Obstacle = Union[Cylinder, Wall]


def nearest_obstacle_distance(p, obstacles) -> float:
    """Horizontal distance from ``p`` to the closest obstacle surface (``inf`` if none)."""
    if not obstacles:
        return math.inf
    return min(ob.distance(p) for ob in obstacles)


def cylinder_arrays(obstacles) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indices, centres (m, 3) and radii of the cylinders in ``obstacles``."""
    idx = [i for i, ob in enumerate(obstacles) if isinstance(ob, Cylinder)]
    centers = np.array([obstacles[i].center for i in idx], dtype=np.float64).reshape(-1, 3)
    radii = np.array([obstacles[i].radius for i in idx], dtype=np.float64)
    return np.array(idx, dtype=np.int64), centers, radii


# -- scenario ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    agents: tuple
    obstacles: tuple = ()
    goals: tuple = ()
    goal_tolerance: float = DEFAULT_GOAL_TOLERANCE
    params: SwarmParams = field(default_factory=SwarmParams)
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    duration: float = 60.0
    fov_horizontal: float = 2.0 * math.pi
    fov_vertical: float = math.pi
    occlusion_enabled: bool = False
    name: str = "scenario"
    frequencies: tuple = DEFAULT_FREQUENCIES
    kinematics: str = "ideal"
    tau: float = 0.5
    leaders: tuple | None = None

    @property
    def n_steps(self) -> int:
        return max(1, int(math.floor(self.duration * self.params.update_rate + 1e-9)))

    def with_updates(self, **changes) -> "ScenarioConfig":
        new = replace(self, **changes)
        validate(new)
        return new


def validate(cfg: ScenarioConfig) -> None:
    """Raise :class:`ConfigError` naming the first violated invariant."""
    if len(cfg.agents) < 1:
        raise ConfigError("scenario needs at least one agent")
    ids = [a.id for a in cfg.agents]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"agent ids must be unique, got {ids}")
    if len(cfg.frequencies) > MAX_FREQUENCIES or len(cfg.frequencies) == 0:
        raise ConfigError(f"frequency set must have 1..{MAX_FREQUENCIES} values, got {len(cfg.frequencies)}")
    for a in cfg.agents:
        if a.blink_frequency not in cfg.frequencies:
            raise ConfigError(f"agent {a.id} blink_frequency {a.blink_frequency} not in {list(cfg.frequencies)}")
    rc = cfg.params.collision_radius
    for i, a in enumerate(cfg.agents):
        for b in cfg.agents[i + 1:]:
            d = float(np.linalg.norm(a.position - b.position))
            if d < rc:
                raise ConfigError(
                    f"agents {a.id} and {b.id} initial separation {d:.3g} m < collision_radius {rc:.3g} m"
                )
    for a in cfg.agents:
        for k, ob in enumerate(cfg.obstacles):
            if ob.contains(a.position):
                raise ConfigError(f"agent {a.id} inside obstacle {k}")
    if not (math.isfinite(cfg.goal_tolerance) and cfg.goal_tolerance > 0):
        raise ConfigError(f"goal_tolerance must be > 0, got {cfg.goal_tolerance}")
    if not (math.isfinite(cfg.duration) and cfg.duration > 0):
        raise ConfigError(f"duration must be > 0, got {cfg.duration}")
    if math.floor(cfg.duration * cfg.params.update_rate + 1e-9) < 1:
        raise ConfigError("duration * update_rate must give at least one step")
    if not (0.0 < cfg.fov_horizontal <= 2.0 * math.pi):
        raise ConfigError(f"fov.horizontal must be in (0, 2pi], got {cfg.fov_horizontal}")
    if not (0.0 < cfg.fov_vertical <= math.pi):
        raise ConfigError(f"fov.vertical must be in (0, pi], got {cfg.fov_vertical}")
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {cfg.seed}")
    if cfg.kinematics not in ("ideal", "lag"):
        raise ConfigError(f"kinematics.mode must be 'ideal' or 'lag', got {cfg.kinematics!r}")
    if not (math.isfinite(cfg.tau) and cfg.tau > 0):
        raise ConfigError(f"kinematics.tau must be > 0, got {cfg.tau}")
    if cfg.leaders is not None:
        unknown = set(cfg.leaders) - set(ids)
        if unknown:
            raise ConfigError(f"navigation.leaders names unknown agents {sorted(unknown)}")


# -- document parsing ---------------------------------------------------------

_TOP_KEYS = {"name", "agents", "obstacles", "goals", "goal_tolerance", "params", "noise",
             "seed", "duration", "fov", "occlusion", "frequencies", "kinematics", "navigation"}
_AGENT_KEYS = {"id", "position", "heading", "blink_frequency"}
_PARAM_KEYS = set(SwarmParams.__dataclass_fields__)
_NOISE_KEYS = set(NoiseModel.__dataclass_fields__)


def _check_keys(obj: Any, allowed: set, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(unknown)}")
    return obj


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def _point(value, where: str, dims: tuple = (2, 3)) -> list:
    if not isinstance(value, list) or len(value) not in dims:
        raise ConfigError(f"{where} must be a list of {' or '.join(map(str, dims))} numbers")
    return [_num(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _parse_obstacle(obj, k: int) -> Obstacle:
    where = f"obstacles[{k}]"
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError(f"{where} must be an object with a 'type'")
    if obj["type"] == "cylinder":
        _check_keys(obj, {"type", "center", "radius"}, where)
        c = _point(obj["center"], f"{where}.center", dims=(2,))
        return Cylinder(np.array([c[0], c[1], 0.0]), _num(obj["radius"], f"{where}.radius"))
    if obj["type"] == "wall":
        _check_keys(obj, {"type", "a", "b"}, where)
        return Wall.from_endpoints(_point(obj["a"], f"{where}.a", dims=(2,)),
                                   _point(obj["b"], f"{where}.b", dims=(2,)))
    raise ConfigError(f"{where}.type must be 'cylinder' or 'wall', got {obj['type']!r}")


def parse_scenario(doc: dict) -> ScenarioConfig:
    """Build a validated :class:`ScenarioConfig` from a decoded JSON object."""
    _check_keys(doc, _TOP_KEYS, "scenario")
    if "agents" not in doc:
        raise ConfigError("scenario must define 'agents'")

    freqs = tuple(_num(f, "frequencies[]") for f in doc.get("frequencies", DEFAULT_FREQUENCIES))

    agents = []
    raw_agents = doc["agents"]
    if not isinstance(raw_agents, list):
        raise ConfigError("agents must be a list")
    for n, raw in enumerate(raw_agents):
        where = f"agents[{n}]"
        if isinstance(raw, list):
            raw = {"position": raw}
        _check_keys(raw, _AGENT_KEYS, where)
        if "position" not in raw:
            raise ConfigError(f"{where} needs a position")
        aid = raw.get("id", n)
        if isinstance(aid, bool) or not isinstance(aid, int) or aid < 0:
            raise ConfigError(f"{where}.id must be a non-negative integer")
        pos = _point(raw["position"], f"{where}.position", dims=(3,))
        freq = _num(raw["blink_frequency"], f"{where}.blink_frequency") if "blink_frequency" in raw \
            else freqs[n % len(freqs)]
        agents.append(AgentState(
            id=aid,
            position=as_vec3(pos, f"{where}.position"),
            heading=float(wrap_angle(_num(raw.get("heading", 0.0), f"{where}.heading"))),
            blink_frequency=freq,
        ))

    obstacles = tuple(_parse_obstacle(o, k) for k, o in enumerate(doc.get("obstacles", [])))
    goals = tuple(as_vec3(_point(g, f"goals[{i}]", dims=(3,)), f"goals[{i}]")
                  for i, g in enumerate(doc.get("goals", [])))

    params_doc = _check_keys(doc.get("params", {}), _PARAM_KEYS, "params")
    params = SwarmParams(**{k: _num(v, f"params.{k}") for k, v in params_doc.items()})
    noise_doc = _check_keys(doc.get("noise", {}), _NOISE_KEYS, "noise")
    noise_vals = {k: _num(v, f"noise.{k}") for k, v in noise_doc.items()}
    if "sigma_az" in noise_vals and "sigma_el" not in noise_vals:
        noise_vals["sigma_el"] = noise_vals["sigma_az"]
    noise = NoiseModel(**noise_vals)

    fov = _check_keys(doc.get("fov", {}), {"horizontal", "vertical"}, "fov")
    kin = _check_keys(doc.get("kinematics", {}), {"mode", "tau"}, "kinematics")
    nav = _check_keys(doc.get("navigation", {}), {"leaders"}, "navigation")

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    occlusion = doc.get("occlusion", False)
    if not isinstance(occlusion, bool):
        raise ConfigError("occlusion must be true or false")
    leaders = nav.get("leaders")
    if leaders is not None:
        if not isinstance(leaders, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in leaders):
            raise ConfigError("navigation.leaders must be a list of agent ids")
        leaders = tuple(leaders)

    cfg = ScenarioConfig(
        agents=tuple(agents),
        obstacles=obstacles,
        goals=goals,
        goal_tolerance=_num(doc.get("goal_tolerance", DEFAULT_GOAL_TOLERANCE), "goal_tolerance"),
        params=params,
        noise=noise,
        seed=seed,
        duration=_num(doc.get("duration", 60.0), "duration"),
        fov_horizontal=_num(fov.get("horizontal", 2.0 * math.pi), "fov.horizontal"),
        fov_vertical=_num(fov.get("vertical", math.pi), "fov.vertical"),
        occlusion_enabled=occlusion,
        name=str(doc.get("name", "scenario")),
        frequencies=freqs,
        kinematics=str(kin.get("mode", "ideal")),
        tau=_num(kin.get("tau", 0.5), "kinematics.tau"),
        leaders=leaders,
    )
    validate(cfg)
    return cfg


def load_scenario(source) -> ScenarioConfig:
    """Load a scenario from JSON text, a path, or an already-decoded dict.

    Raises :class:`ConfigError` for malformed JSON or any violated invariant.
    """
    if isinstance(source, dict):
        return parse_scenario(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed scenario document: {exc}") from exc
    return parse_scenario(doc)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Normalized document for ``cfg`` with every default spelled out."""
    doc = {
        "name": cfg.name,
        "agents": [{"id": a.id, "position": [float(v) for v in a.position], "heading": a.heading,
                    "blink_frequency": a.blink_frequency} for a in cfg.agents],
        "obstacles": [ob.to_dict() for ob in cfg.obstacles],
        "goals": [[float(v) for v in g] for g in cfg.goals],
        "goal_tolerance": cfg.goal_tolerance,
        "params": {k: getattr(cfg.params, k) for k in SwarmParams.__dataclass_fields__},
        "noise": {k: getattr(cfg.noise, k) for k in NoiseModel.__dataclass_fields__},
        "seed": cfg.seed,
        "duration": cfg.duration,
        "fov": {"horizontal": cfg.fov_horizontal, "vertical": cfg.fov_vertical},
        "occlusion": cfg.occlusion_enabled,
        "frequencies": list(cfg.frequencies),
        "kinematics": {"mode": cfg.kinematics, "tau": cfg.tau},
    }
    if cfg.leaders is not None:
        doc["navigation"] = {"leaders": list(cfg.leaders)}
    return doc


def dump_scenario(cfg: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(cfg), indent=2, sort_keys=True) + "\n"


BUNDLED = ("passage", "wall", "forest9", "open4", "open5")
ALIASES = {"forest": "forest9"}


def bundled_scenario_path(name: str) -> Path:
    stem = name[:-5] if name.endswith(".json") else name
    stem = ALIASES.get(stem, stem)
    if stem not in BUNDLED:
        raise ConfigError(f"no bundled scenario named {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files("uvswarm.scenarios").joinpath(f"{stem}.json")))


def load_bundled(name: str) -> ScenarioConfig:
    return load_scenario(bundled_scenario_path(name))
