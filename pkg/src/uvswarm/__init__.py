"""Communication-free UAV swarm simulator with a statistical relative-localization sensor."""

from .core import ConfigError, NoiseModel, Spherical, SwarmParams, cart_to_spherical, spherical_to_cart
from .engine import RunSummary, SimState, run, simulate, step
from .flocking import (baseline_force, bound_velocity, compute_step, equilibrium_distance, goal_attraction,
                       kappa, navigation_force, total_force)
from .kernels import BACKEND
from .metrics import deviation_energy, pairwise_stats, stability_sweep
from .obstacles import VirtualParticle, circle_virtual_particle, collect_virtual_particles, line_virtual_particle
from .perception import NeighborObservation, check_occlusion, detect_neighbors, estimate_relative_velocity
from .world import AgentState, Cylinder, ScenarioConfig, Wall, load_bundled, load_scenario, nearest_obstacle_distance

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "NoiseModel",
    "Spherical",
    "SwarmParams",
    "cart_to_spherical",
    "spherical_to_cart",
    "AgentState",
    "Cylinder",
    "Wall",
    "ScenarioConfig",
    "load_scenario",
    "load_bundled",
    "nearest_obstacle_distance",
    "NeighborObservation",
    "detect_neighbors",
    "estimate_relative_velocity",
    "check_occlusion",
    "kappa",
    "equilibrium_distance",
    "baseline_force",
    "goal_attraction",
    "navigation_force",
    "total_force",
    "bound_velocity",
    "compute_step",
    "VirtualParticle",
    "circle_virtual_particle",
    "line_virtual_particle",
    "collect_virtual_particles",
    "SimState",
    "RunSummary",
    "step",
    "run",
    "simulate",
    "pairwise_stats",
    "deviation_energy",
    "stability_sweep",
]
