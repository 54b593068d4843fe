"""Hot numeric kernels with an optional numba backend.

The backend is chosen once at import time. Set ``UVSWARM_DISABLE_NUMBA=1``
to force the pure-numpy path (also used automatically when numba is not
importable).
"""

from __future__ import annotations

import os

import numpy as np

from . import _numpy

MIN_RANGE = _numpy.MIN_RANGE


def _want_numba() -> bool:
    return os.environ.get("UVSWARM_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes", "on")


if _want_numba():
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _numpy
        BACKEND = "numpy"
else:
    _impl = _numpy
    BACKEND = "numpy"

kappa = _impl.kappa
baseline_sum = _impl.baseline_sum
batch_baseline = _impl.batch_baseline
particle_sum = _impl.particle_sum
cylinder_particles = _impl.cylinder_particles
pairwise_min_mean = _impl.pairwise_min_mean
deviation_energy = _impl.deviation_energy
cylinder_clearance = _impl.cylinder_clearance

__all__ = [
    "BACKEND",
    "MIN_RANGE",
    "kappa",
    "baseline_sum",
    "batch_baseline",
    "particle_sum",
    "cylinder_particles",
    "pairwise_min_mean",
    "deviation_energy",
    "cylinder_clearance",
    "warmup",
]


def warmup() -> None:
    """Call every kernel once on tiny inputs so JIT compilation happens up front."""
    xs = np.ones((2, 3))
    kappa(np.ones(2), 10.0)
    baseline_sum(xs, xs, 10.0, 10.0, 1.0)
    batch_baseline(xs[None], xs[None], np.ones((1, 2), dtype=bool), 10.0, 10.0, 1.0)
    particle_sum(xs, xs, 10.0, 1.0)
    cylinder_particles(xs * 3.0, np.ones(2), np.ones(3))
    pairwise_min_mean(np.array([[0.0, 0, 0], [1.0, 0, 0]]))
    deviation_energy(np.array([[0.0, 0, 0], [1.0, 0, 0]]), 1.0, 2.0)
    cylinder_clearance(xs, xs * 3.0, np.ones(2))
