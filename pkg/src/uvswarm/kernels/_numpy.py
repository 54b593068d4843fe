"""Vectorized numpy implementations of the hot kernels.

These are the reference path. The numba versions in ``_numba`` must agree
with them to floating tolerance; ``pairwise_min_mean`` minima agree exactly.
"""

from __future__ import annotations

import math

import numpy as np

MIN_RANGE = 0.05


def kappa(norms: np.ndarray, r: float) -> np.ndarray:
    """Repulsion weight ``max(0, 1/sqrt(|x|) - 1/sqrt(r))`` for an array of norms.

    A zero norm is evaluated at ``MIN_RANGE`` so the weight stays finite.
    Near ``r`` the difference of square roots cancels badly, so there it is
    rewritten as ``(r - n) / (sqrt(n) sqrt(r) (sqrt(n) + sqrt(r)))``, which
    stays strictly positive for every norm below ``r``.
    """
    norms = np.asarray(norms, dtype=np.float64)
    safe = np.where(norms > 0.0, norms, MIN_RANGE)
    sn, sr = np.sqrt(safe), math.sqrt(r)
    direct = 1.0 / sn - 1.0 / sr
    near = (r - safe) / (sn * sr * (sn + sr))
    return np.maximum(0.0, np.where(safe < 0.25 * r, direct, near))


def _norms(v: np.ndarray) -> np.ndarray:
    return np.sqrt(v[:, 0] * v[:, 0] + v[:, 1] * v[:, 1] + v[:, 2] * v[:, 2])


def baseline_sum(xs: np.ndarray, vs: np.ndarray, lam: float, rn: float, gain_sep: float) -> np.ndarray:
    m = xs.shape[0]
    if m == 0:
        return np.zeros(3)
    k = kappa(_norms(xs), rn)
    terms = xs + vs / lam - (gain_sep * k)[:, None] * xs
    return terms.sum(axis=0) / m


def batch_baseline(xs: np.ndarray, vs: np.ndarray, mask: np.ndarray, lam: float, rn: float,
                   gain_sep: float) -> np.ndarray:
    """:func:`baseline_sum` for many observers at once.

    ``xs`` and ``vs`` are (r, n, 3); ``mask`` (r, n) selects each row's
    neighbours. Rows without neighbours give zeros.
    """
    norms = np.sqrt(xs[..., 0] * xs[..., 0] + xs[..., 1] * xs[..., 1] + xs[..., 2] * xs[..., 2])
    k = kappa(norms, rn)
    terms = xs + vs / lam - (gain_sep * k)[..., None] * xs
    terms = np.where(mask[..., None], terms, 0.0)
    count = mask.sum(axis=1)
    return terms.sum(axis=1) / np.maximum(count, 1)[:, None]


def particle_sum(xs: np.ndarray, vs: np.ndarray, lam: float, ro: float) -> np.ndarray:
    m = xs.shape[0]
    if m == 0:
        return np.zeros(3)
    k = kappa(_norms(xs), ro)
    terms = vs / lam - k[:, None] * xs
    return terms.sum(axis=0) / m


def cylinder_particles(centers: np.ndarray, radii: np.ndarray, v: np.ndarray):
    """Virtual particle states for circular cross-sections, all at once.

    ``centers`` are body-frame centre vectors (m, 3); every row must satisfy
    ``|c| > r``.
    """
    dist = _norms(centers)
    ratio = radii / dist
    xs = (1.0 - ratio)[:, None] * centers
    mu = centers / dist[:, None]
    radial = mu @ v
    vs = ratio[:, None] * (v[None, :] - radial[:, None] * mu)
    return xs, vs


def pairwise_min_mean(pos: np.ndarray) -> tuple[float, float]:
    n = pos.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    d = pos[ju] - pos[iu]
    dist = _norms(d)
    return float(dist.min()), float(dist.mean())


def deviation_energy(pos: np.ndarray, d: float, radius: float) -> float:
    n = pos.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    dist = _norms(pos[ju] - pos[iu])
    edges = dist[dist <= radius]
    return float(np.sum((edges - d) ** 2) / (edges.size + 1))


def cylinder_clearance(points: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Horizontal clearance of each point to the nearest cylinder surface, floored at 0."""
    if centers.shape[0] == 0:
        return np.full(points.shape[0], np.inf)
    dx = points[:, None, 0] - centers[None, :, 0]
    dy = points[:, None, 1] - centers[None, :, 1]
    gap = np.sqrt(dx * dx + dy * dy) - radii[None, :]
    return np.maximum(gap.min(axis=1), 0.0)
