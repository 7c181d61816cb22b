"""Deterministic random sampling helpers for tests and probes."""
from __future__ import annotations

import numpy as np

from .geometry import MetricField


def sample_points(m: MetricField, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random coordinates inside the metric's working box, shape (n, dim)."""
    box = m.sample_box
    if box is None:
        box = np.stack([m.domain.lo, m.domain.hi])
    return rng.uniform(box[0], box[1], size=(n, m.dim))


def sample_timelike(
    m: MetricField,
    coords: np.ndarray,
    rng: np.random.Generator,
    future: bool = True,
    speed_cap: float = 0.7,
) -> np.ndarray:
    """Future (or past) pointing timelike components at the given coordinates.

    Built in the local orthonormal-ish frame: unit time-orientation plus a
    spatial part bounded away from the light cone by ``speed_cap``.
    """
    coords = np.asarray(coords, dtype=float)
    batch = coords.shape[:-1]
    d = m.dim
    g = m.eval(coords)
    t = m.time_orientation_fn(coords)
    tnorm = np.sqrt(-np.einsum("...mn,...m,...n->...", g, t, t))
    t = t / tnorm[..., None]

    z = rng.normal(size=batch + (d,))
    # g-orthogonalize against t: with g(t,t) = -1, z + g(z,t) t is spacelike
    zt = np.einsum("...mn,...m,...n->...", g, z, t)
    z = z + zt[..., None] * t
    zz = np.einsum("...mn,...m,...n->...", g, z, z)
    zz = np.where(zz <= 0, 1.0, zz)
    speeds = rng.uniform(0.0, speed_cap, size=batch)
    v = t + (speeds / np.sqrt(zz))[..., None] * z
    scale = rng.uniform(0.5, 1.5, size=batch)
    v = v * scale[..., None]
    if not future:
        v = -v
    return v
