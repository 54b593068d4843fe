"""Geometric primitives and the parameter records shared across the simulator.

Vectors are plain ``numpy`` arrays of shape ``(3,)``. Configuration records
are frozen dataclasses so a loaded scenario can be shared between workers
without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import MIN_RANGE

SENSOR_MAX_RANGE = 15.0
MAX_FREQUENCIES = 6

__all__ = [
    "MIN_RANGE",
    "SENSOR_MAX_RANGE",
    "MAX_FREQUENCIES",
    "ConfigError",
    "vec3",
    "Spherical",
    "cart_to_spherical",
    "spherical_to_cart",
    "rot_z",
    "world_to_body",
    "body_to_world",
    "wrap_angle",
    "SwarmParams",
    "NoiseModel",
]


class ConfigError(ValueError):
    """A configuration value violates a documented invariant."""


def vec3(x: float = 0.0, y: float = 0.0, z: float = 0.0) -> np.ndarray:
    return np.array([x, y, z], dtype=np.float64)


def as_vec3(value, name: str = "vector") -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ConfigError(f"{name} must have 3 components, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} has non-finite components: {arr.tolist()}")
    return arr


def wrap_angle(a):
    """Map an angle (or array of angles) into ``(-pi, pi]``."""
    w = np.mod(np.asarray(a, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class Spherical:
    """Range / azimuth / elevation triple.

    Construction normalizes the angles: elevation is folded into
    ``[-pi/2, pi/2]`` (flipping azimuth by pi when needed) and azimuth is
    wrapped into ``(-pi, pi]``. Negative ranges are rejected.
    """

    range: float
    azimuth: float = 0.0
    elevation: float = 0.0

    def __post_init__(self) -> None:
        if not (self.range >= 0.0) or not math.isfinite(self.range):
            raise ValueError(f"range must be finite and >= 0, got {self.range}")
        az = float(self.azimuth)
        el = float(wrap_angle(self.elevation))
        if el > math.pi / 2:
            el = math.pi - el
            az += math.pi
        elif el < -math.pi / 2:
            el = -math.pi - el
            az += math.pi
        object.__setattr__(self, "range", float(self.range))
        object.__setattr__(self, "azimuth", wrap_angle(az))
        object.__setattr__(self, "elevation", el)


def cart_to_spherical(v) -> Spherical:
    v = np.asarray(v, dtype=np.float64)
    r = float(np.linalg.norm(v))
    if r == 0.0:
        return Spherical(0.0, 0.0, 0.0)
    el = math.asin(max(-1.0, min(1.0, v[2] / r)))
    return Spherical(r, math.atan2(v[1], v[0]), el)


def spherical_to_cart(s: Spherical) -> np.ndarray:
    ce = math.cos(s.elevation)
    return np.array(
        [
            s.range * ce * math.cos(s.azimuth),
            s.range * ce * math.sin(s.azimuth),
            s.range * math.sin(s.elevation),
        ]
    )


def rot_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def world_to_body(v: np.ndarray, heading: float) -> np.ndarray:
    """Express a world-frame vector in a body frame yawed by ``heading``."""
    if heading == 0.0:
        return np.array(v, dtype=np.float64)
    return rot_z(-heading) @ v


def body_to_world(v: np.ndarray, heading: float) -> np.ndarray:
    if heading == 0.0:
        return np.array(v, dtype=np.float64)
    return rot_z(heading) @ v


@dataclass(frozen=True)
class SwarmParams:
    """Control-law and perception parameters shared by every agent.

    ``gain_baseline`` scales the whole neighbour term and ``gain_separation``
    scales only its repulsive part; both equal to 1 recovers the unweighted
    control law. The defaults are the stable, roughly 2 m lattice settings.
    """

    observation_radius: float = 10.0
    obstacle_radius: float = 1.0
    update_rate: float = 10.0
    max_speed: float = 1.0
    gain_baseline: float = 0.3
    gain_separation: float = 3.0
    gain_navigation: float = 1.0
    nav_speed: float = 0.5
    collision_radius: float = 0.8
    agent_radius: float = 0.4
    memory_horizon: float = 1.0

    def __post_init__(self) -> None:
        positive = ("observation_radius", "obstacle_radius", "update_rate", "max_speed",
                    "collision_radius", "agent_radius", "memory_horizon")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigError(f"params.{name} must be > 0, got {value}")
        for name in ("gain_baseline", "gain_separation", "gain_navigation", "nav_speed"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ConfigError(f"params.{name} must be >= 0, got {value}")
        if self.observation_radius > SENSOR_MAX_RANGE:
            raise ConfigError(
                f"params.observation_radius {self.observation_radius} m exceeds the "
                f"{SENSOR_MAX_RANGE} m sensor ceiling"
            )
        if self.collision_radius >= self.observation_radius:
            raise ConfigError(
                f"params.collision_radius {self.collision_radius} m must be < "
                f"observation_radius {self.observation_radius} m"
            )

    @property
    def dt(self) -> float:
        return 1.0 / self.update_rate


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian error per spherical coordinate, plus random dropout."""

    sigma_r: float = 1.16
    sigma_az: float = 0.17
    sigma_el: float = 0.17
    dropout_prob: float = 0.0

    def __post_init__(self) -> None:
        for name in ("sigma_r", "sigma_az", "sigma_el"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ConfigError(f"noise.{name} must be >= 0, got {value}")
        if not (0.0 <= self.dropout_prob <= 1.0):
            raise ConfigError(f"noise.dropout_prob must be in [0, 1], got {self.dropout_prob}")

    @property
    def is_zero(self) -> bool:
        return self.sigma_r == 0.0 and self.sigma_az == 0.0 and self.sigma_el == 0.0

    def scaled(self, scale: float) -> "NoiseModel":
        return NoiseModel(self.sigma_r * scale, self.sigma_az * scale, self.sigma_el * scale,
                          self.dropout_prob)

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, 0.0)
