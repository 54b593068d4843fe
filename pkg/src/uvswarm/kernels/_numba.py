"""Loop-form kernels compiled with numba.

Same signatures and semantics as ``_numpy``. Importing this module requires
numba; the package falls back to numpy when it is missing or disabled.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

MIN_RANGE = 0.05


@njit(cache=True)
def _kappa1(norm, r):
    if norm <= 0.0:
        norm = MIN_RANGE
    if norm >= r:
        return 0.0
    sn, sr = math.sqrt(norm), math.sqrt(r)
    if norm < 0.25 * r:
        return 1.0 / sn - 1.0 / sr
    # rewritten near r to avoid cancellation
    return (r - norm) / (sn * sr * (sn + sr))


@njit(cache=True)
def kappa(norms, r):
    out = np.empty(norms.shape[0])
    for i in range(norms.shape[0]):
        out[i] = _kappa1(norms[i], r)
    return out


@njit(cache=True)
def baseline_sum(xs, vs, lam, rn, gain_sep):
    out = np.zeros(3)
    m = xs.shape[0]
    if m == 0:
        return out
    for j in range(m):
        nx = math.sqrt(xs[j, 0] * xs[j, 0] + xs[j, 1] * xs[j, 1] + xs[j, 2] * xs[j, 2])
        w = gain_sep * _kappa1(nx, rn)
        for a in range(3):
            out[a] += xs[j, a] + vs[j, a] / lam - w * xs[j, a]
    for a in range(3):
        out[a] /= m
    return out


@njit(cache=True)
def batch_baseline(xs, vs, mask, lam, rn, gain_sep):
    rows, n = mask.shape
    out = np.zeros((rows, 3))
    for i in range(rows):
        count = 0
        for j in range(n):
            if not mask[i, j]:
                continue
            nx = math.sqrt(xs[i, j, 0] * xs[i, j, 0] + xs[i, j, 1] * xs[i, j, 1] + xs[i, j, 2] * xs[i, j, 2])
            w = gain_sep * _kappa1(nx, rn)
            for a in range(3):
                out[i, a] += xs[i, j, a] + vs[i, j, a] / lam - w * xs[i, j, a]
            count += 1
        if count:
            for a in range(3):
                out[i, a] /= count
    return out


@njit(cache=True)
def particle_sum(xs, vs, lam, ro):
    out = np.zeros(3)
    m = xs.shape[0]
    if m == 0:
        return out
    for j in range(m):
        nx = math.sqrt(xs[j, 0] * xs[j, 0] + xs[j, 1] * xs[j, 1] + xs[j, 2] * xs[j, 2])
        w = _kappa1(nx, ro)
        for a in range(3):
            out[a] += vs[j, a] / lam - w * xs[j, a]
    for a in range(3):
        out[a] /= m
    return out


@njit(cache=True)
def cylinder_particles(centers, radii, v):
    m = centers.shape[0]
    xs = np.empty((m, 3))
    vs = np.empty((m, 3))
    for j in range(m):
        c0, c1, c2 = centers[j, 0], centers[j, 1], centers[j, 2]
        dist = math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
        ratio = radii[j] / dist
        m0, m1, m2 = c0 / dist, c1 / dist, c2 / dist
        radial = m0 * v[0] + m1 * v[1] + m2 * v[2]
        xs[j, 0] = (1.0 - ratio) * c0
        xs[j, 1] = (1.0 - ratio) * c1
        xs[j, 2] = (1.0 - ratio) * c2
        vs[j, 0] = ratio * (v[0] - radial * m0)
        vs[j, 1] = ratio * (v[1] - radial * m1)
        vs[j, 2] = ratio * (v[2] - radial * m2)
    return xs, vs


@njit(cache=True)
def _pairwise_min_mean(pos):
    n = pos.shape[0]
    best = np.inf
    total = 0.0
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if d < best:
                best = d
            total += d
            count += 1
    return best, total / count


def pairwise_min_mean(pos):
    lo, avg = _pairwise_min_mean(pos)
    return float(lo), float(avg)


@njit(cache=True)
def _deviation_energy(pos, d, radius):
    n = pos.shape[0]
    total = 0.0
    edges = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            dist = math.sqrt(dx * dx + dy * dy + dz * dz)
            if dist <= radius:
                total += (dist - d) ** 2
                edges += 1
    return total / (edges + 1)


def deviation_energy(pos, d, radius):
    return float(_deviation_energy(pos, float(d), float(radius)))


@njit(cache=True)
def cylinder_clearance(points, centers, radii):
    n = points.shape[0]
    out = np.full(n, np.inf)
    for i in range(n):
        for j in range(centers.shape[0]):
            dx = points[i, 0] - centers[j, 0]
            dy = points[i, 1] - centers[j, 1]
            gap = math.sqrt(dx * dx + dy * dy) - radii[j]
            if gap < out[i]:
                out[i] = gap
        if out[i] < 0.0:
            out[i] = 0.0
    return out
