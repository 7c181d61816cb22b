"""Coordinate charts, metric fields, Christoffel symbols and curvature.

All metric evaluation is batch-aware: an array of shape ``(..., dim)`` of
coordinates maps to ``(..., dim, dim)`` metric matrices.  Everything here is
pure and immutable after construction, so values can be shared freely across
threads.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BasePointMismatch, ChartDomainError, SingularMetricError

_EPS = float(np.finfo(float).eps)

#: band around the null cone: |g(v,v)| <= TAU_NULL * |v|^2_euclid  ->  null
TAU_NULL = 1e-10


def fd_step(coords: np.ndarray, depth: int = 1) -> float:
    """Central-difference step scaled to the coordinate magnitude.

    ``depth=1`` is tuned for second-order stencils of the metric,
    ``depth=2`` for the fourth-order stencils used by curvature.
    """
    scale = max(1.0, float(np.max(np.abs(coords))))
    exponent = 1.0 / 3.0 if depth == 1 else 1.0 / 5.0
    return _EPS**exponent * scale


@dataclass(frozen=True)
class Point:
    """A chart point: chart identifier plus coordinate vector."""

    chart_id: str
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))

    @property
    def dim(self) -> int:
        return self.coords.shape[-1]


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector attached to a base point."""

    base: Point
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "components", np.asarray(self.components, dtype=float)
        )
        if self.components.shape != self.base.coords.shape:
            raise ValueError("component count must match manifold dimension")


class CausalClass(str, enum.Enum):
    TIMELIKE_FUTURE = "timelike-future"
    TIMELIKE_PAST = "timelike-past"
    NULL = "null"
    SPACELIKE = "spacelike"
    ZERO = "zero"


@dataclass(frozen=True)
class ChartDomain:
    """A coordinate box, optionally periodic per axis, with an extra predicate.

    ``periods[k]`` is ``nan`` for a non-periodic axis.  The predicate (used by
    the Kruskal chart to stay away from the singularity) receives coordinates
    of shape ``(..., dim)`` and a margin, and returns a boolean mask.
    """

    lo: np.ndarray
    hi: np.ndarray
    periods: Optional[np.ndarray] = None
    predicate: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if self.periods is not None:
            object.__setattr__(self, "periods", np.asarray(self.periods, dtype=float))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, coords: np.ndarray, margin: float = 0.0) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        ok = np.ones(coords.shape[:-1], dtype=bool)
        for k in range(self.dim):
            if self.periods is not None and np.isfinite(self.periods[k]):
                continue  # periodic axis: every value wraps into the box
            ok &= (coords[..., k] >= self.lo[k] + margin) & (
                coords[..., k] <= self.hi[k] - margin
            )
        if self.predicate is not None:
            ok &= self.predicate(coords, margin)
        return ok

    def wrap(self, coords: np.ndarray) -> np.ndarray:
        """Wrap periodic axes into [lo, lo+period); identity otherwise."""
        if self.periods is None or not np.any(np.isfinite(self.periods)):
            return coords
        out = np.array(coords, dtype=float, copy=True)
        for k in range(self.dim):
            p = self.periods[k]
            if np.isfinite(p):
                out[..., k] = self.lo[k] + np.mod(out[..., k] - self.lo[k], p)
        return out


def _default_time_orientation(coords: np.ndarray) -> np.ndarray:
    out = np.zeros_like(np.asarray(coords, dtype=float))
    out[..., 0] = 1.0
    return out


@dataclass(frozen=True)
class MetricField:
    """A smooth Lorentzian metric on a single chart.

    ``eval_fn`` maps coordinates ``(..., dim)`` to symmetric matrices
    ``(..., dim, dim)`` of signature (-,+,...,+).  ``deriv_fn``, when present,
    returns ``dg[..., a, m, n] = d g_mn / d x^a``; otherwise central
    differences are used.  ``sample_box`` is the recommended simply convex
    working region used by tests and probes.
    """

    name: str
    dim: int
    eval_fn: Callable[[np.ndarray], np.ndarray]
    domain: ChartDomain
    deriv_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    time_orientation_fn: Callable[[np.ndarray], np.ndarray] = _default_time_orientation
    sample_box: Optional[np.ndarray] = None  # shape (2, dim): rows lo, hi
    params: dict = field(default_factory=dict)

    def eval(self, coords: np.ndarray) -> np.ndarray:
        return self.eval_fn(np.asarray(coords, dtype=float))

    def deriv(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if self.deriv_fn is not None:
            return self.deriv_fn(coords)
        return fd_metric_deriv(self, coords)

    @property
    def has_analytic_deriv(self) -> bool:
        return self.deriv_fn is not None

    def time_orientation(self, x) -> TangentVector:
        coords = x.coords if isinstance(x, Point) else np.asarray(x, dtype=float)
        comp = self.time_orientation_fn(coords)
        base = x if isinstance(x, Point) else Point(self.name, coords)
        return TangentVector(base, comp)

    def point(self, coords) -> Point:
        return Point(self.name, np.asarray(coords, dtype=float))

    def tangent(self, coords, components) -> TangentVector:
        return TangentVector(self.point(coords), components)

    def require_inside(self, coords: np.ndarray, margin: float = 0.0) -> None:
        if not np.all(self.domain.contains(coords, margin)):
            raise ChartDomainError(
                f"coordinates outside chart domain of '{self.name}' "
                f"(margin={margin:g})"
            )


def coords_of(x) -> np.ndarray:
    return x.coords if isinstance(x, Point) else np.asarray(x, dtype=float)


def fd_metric_deriv(m: MetricField, coords: np.ndarray) -> np.ndarray:
    """Central-difference metric derivative dg[..., a, m, n] = d_a g_mn."""
    coords = np.asarray(coords, dtype=float)
    h = fd_step(coords, depth=1)
    m.require_inside(coords, margin=h)
    batch = coords.shape[:-1]
    d = coords.shape[-1]
    plus = np.repeat(coords[..., None, :], d, axis=-2).copy()
    minus = plus.copy()
    idx = np.arange(d)
    plus[..., idx, idx] += h
    minus[..., idx, idx] -= h
    dg = (m.eval(plus) - m.eval(minus)) / (2.0 * h)
    return dg.reshape(batch + (d, d, d))


def inner(m: MetricField, v: TangentVector, w: TangentVector) -> float:
    """Bilinear form g_jk(x) v^j w^k at the common base point."""
    if v.base.chart_id != w.base.chart_id or not np.array_equal(
        v.base.coords, w.base.coords
    ):
        raise BasePointMismatch("tangent vectors have different base points")
    m.require_inside(v.base.coords)
    g = m.eval(v.base.coords)
    return float(v.components @ g @ w.components)


def inner_at(m: MetricField, coords: np.ndarray, v: np.ndarray, w: np.ndarray):
    """Raw-array inner product, batched; no base-point bookkeeping."""
    g = m.eval(coords)
    return np.einsum("...mn,...m,...n->...", g, v, w)


def causal_character(m: MetricField, v: TangentVector) -> CausalClass:
    """Classify v by the sign of g(v,v) within the null band TAU_NULL."""
    m.require_inside(v.base.coords)
    comp = v.components
    norm2 = float(comp @ comp)
    if norm2 == 0.0:
        return CausalClass.ZERO
    q = inner(m, v, v)
    if abs(q) <= TAU_NULL * norm2:
        return CausalClass.NULL
    if q > 0:
        return CausalClass.SPACELIKE
    t = m.time_orientation(v.base)
    return (
        CausalClass.TIMELIKE_FUTURE
        if inner(m, v, t) < 0
        else CausalClass.TIMELIKE_PAST
    )


def christoffel(m: MetricField, x) -> np.ndarray:
    """Levi-Civita connection coefficients Gamma[..., l, m, n] = Gamma^l_mn."""
    coords = coords_of(x)
    if not m.has_analytic_deriv:
        m.require_inside(coords, margin=fd_step(coords, depth=1))
    else:
        m.require_inside(coords)
    return christoffel_raw(m, coords)


def christoffel_raw(m: MetricField, coords: np.ndarray) -> np.ndarray:
    """Christoffel symbols without domain checks (hot path for integrators)."""
    g = m.eval(coords)
    dg = m.deriv(coords)
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(f"metric singular on chart '{m.name}'") from exc
    # Gamma^l_mn = 1/2 g^{lr} (d_m g_rn + d_n g_rm - d_r g_mn)
    sym = np.einsum("...mrn->...rmn", dg) + np.einsum("...nrm->...rmn", dg) - dg
    return 0.5 * np.einsum("...lr,...rmn->...lmn", ginv, sym)


@dataclass(frozen=True)
class CurvatureSample:
    """Riemann tensor R^a_bcd, Ricci tensor and Kretschmann scalar at a point."""

    point: Point
    riemann: np.ndarray
    ricci: np.ndarray
    kretschmann: float

    @property
    def max_abs_ricci(self) -> float:
        return float(np.max(np.abs(self.ricci)))


def curvature_at(m: MetricField, x) -> CurvatureSample:
    """Curvature from fourth-order central differences of the Christoffels."""
    coords = coords_of(x)
    d = m.dim
    h = fd_step(coords, depth=2)
    margin = 2 * h + (fd_step(coords, depth=1) if not m.has_analytic_deriv else 0.0)
    m.require_inside(coords, margin=margin)

    # Batched stencil: 4 offsets per coordinate axis in one christoffel call.
    offsets = np.array([-2.0, -1.0, 1.0, 2.0]) * h
    stencil = np.repeat(coords[None, None, :], 4 * d, axis=0).reshape(d, 4, d)
    for a in range(d):
        stencil[a, :, a] += offsets
    gam = christoffel_raw(m, stencil.reshape(-1, d)).reshape(d, 4, d, d, d)
    # d_a Gamma^l_mn, fourth order: (g[-2] - 8 g[-1] + 8 g[+1] - g[+2]) / 12h
    dgam = (gam[:, 0] - 8.0 * gam[:, 1] + 8.0 * gam[:, 2] - gam[:, 3]) / (12.0 * h)

    gamma0 = christoffel_raw(m, coords)
    # R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gam^a_ce Gam^e_db - Gam^a_de Gam^e_cb
    riem = (
        np.einsum("cadb->abcd", dgam)
        - np.einsum("dacb->abcd", dgam)
        + np.einsum("ace,edb->abcd", gamma0, gamma0)
        - np.einsum("ade,ecb->abcd", gamma0, gamma0)
    )
    ricci = np.einsum("abad->bd", riem)

    g = m.eval(coords)
    ginv = np.linalg.inv(g)
    r_low = np.einsum("ae,ebcd->abcd", g, riem)
    r_up = np.einsum("abcd,be,cf,dk->aefk", riem, ginv, ginv, ginv)
    kret = float(np.einsum("abcd,abcd->", r_low, r_up))

    pt = x if isinstance(x, Point) else m.point(coords)
    return CurvatureSample(point=pt, riemann=riem, ricci=ricci, kretschmann=kret)


def validate_metric(
    m: MetricField,
    n_points: int = 100,
    rng: Optional[np.random.Generator] = None,
    sym_tol: float = 1e-12,
) -> None:
    """Check symmetry and Lorentzian signature at random working-box points."""
    rng = rng or np.random.default_rng(0)
    box = m.sample_box
    if box is None:
        box = np.stack([m.domain.lo, m.domain.hi])
    pts = rng.uniform(box[0], box[1], size=(n_points, m.dim))
    g = m.eval(pts)
    asym = np.max(np.abs(g - np.swapaxes(g, -1, -2)))
    if asym > sym_tol:
        raise SingularMetricError(
            f"metric '{m.name}' not symmetric: max asymmetry {asym:.3e}"
        )
    eigs = np.linalg.eigvalsh(g)
    n_neg = np.sum(eigs < 0, axis=-1)
    if not np.all(n_neg == 1):
        raise SingularMetricError(
            f"metric '{m.name}' signature broken: negative eigenvalue counts "
            f"{sorted(set(int(k) for k in n_neg))}"
        )
