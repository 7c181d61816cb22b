"""Geodesic integration, the exponential map and its Newton-shooting inverse,
hypersurface-crossing detection, and the completeness probe."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _rk45
from .errors import IntegrationError, ShootingError
from .geometry import MetricField, Point, TangentVector, christoffel_raw, coords_of, curvature_at

TOL_ODE = 1e-10
H_MIN = 1e-12
TOL_SHOOT = 1e-10
N_MAX_SHOOT = 50
JAC_DET_FLOOR = 1e-6
TOL_HIT = 1e-10


class GeodesicStatus(str, enum.Enum):
    COMPLETED = "completed"
    LEFT_CHART = "left-chart"
    CURVATURE_BLOWUP = "curvature-blowup"
    STEP_UNDERFLOW = "step-underflow"


_STATUS_MAP = {
    _rk45.COMPLETED: GeodesicStatus.COMPLETED,
    _rk45.LEFT_DOMAIN: GeodesicStatus.LEFT_CHART,
    _rk45.UNDERFLOW: GeodesicStatus.STEP_UNDERFLOW,
    _rk45.MONITOR_STOP: GeodesicStatus.CURVATURE_BLOWUP,
}


@dataclass
class GeodesicPath:
    """Accepted integration samples of one geodesic.

    ``ts`` strictly increases; ``xs``/``vs`` hold positions and velocities at
    those parameters.  ``status`` records how the integration ended.
    """

    metric: MetricField
    initial: tuple
    ts: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    status: GeodesicStatus
    _segments: list = field(default_factory=list, repr=False)

    @property
    def endpoint(self) -> Point:
        return self.metric.point(self.xs[-1])

    @property
    def end_velocity(self) -> TangentVector:
        return self.metric.tangent(self.xs[-1], self.vs[-1])

    def samples(self):
        for t, x, v in zip(self.ts, self.xs, self.vs):
            pt = self.metric.point(x)
            yield t, pt, TangentVector(pt, v)

    def state_at(self, t: float) -> np.ndarray:
        """Dense-output state (x, v) at parameter t within the covered range."""
        for seg in self._segments:
            if seg.t0 <= t <= seg.t0 + seg.h:
                return seg.eval(t)
        raise ValueError(f"t={t} outside the integrated range")

    def speeds(self) -> np.ndarray:
        g = self.metric.eval(self.xs)
        return np.einsum("...mn,...m,...n->...", g, self.vs, self.vs)


def _rhs(m: MetricField) -> Callable[[np.ndarray], np.ndarray]:
    d = m.dim

    def f(y):
        x, v = y[..., :d], y[..., d:]
        gam = christoffel_raw(m, x)
        acc = -np.einsum("...lmn,...m,...n->...l", gam, v, v)
        return np.concatenate([v, acc], axis=-1)

    return f


def _inside_fn(m: MetricField):
    d = m.dim

    def inside(y):
        return m.domain.contains(y[..., :d])

    return inside


def _wrap_fn(m: MetricField):
    if m.domain.periods is None:
        return None
    d = m.dim

    def wrap(y):
        out = np.array(y, copy=True)
        out[..., :d] = m.domain.wrap(out[..., :d])
        return out

    return wrap


def integrate(
    m: MetricField,
    x,
    v,
    t_end: float,
    tol: float = TOL_ODE,
    h_min: float = H_MIN,
    max_step: float = np.inf,
    monitor: Optional[Callable[[float, np.ndarray, np.ndarray], bool]] = None,
) -> GeodesicPath:
    """Adaptive Runge-Kutta solution of the geodesic equation from (x, v).

    Stops early with LEFT_CHART or (via the monitor) CURVATURE_BLOWUP.
    ``monitor(t, x, v)`` is called after every accepted step and stops the
    integration when it returns False.
    """
    xc, vc = coords_of(x), coords_of(v if not isinstance(v, TangentVector) else v.components)
    if isinstance(v, TangentVector):
        vc = v.components
    m.require_inside(xc)
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    d = m.dim
    y0 = np.concatenate([xc, vc])

    mon = None
    if monitor is not None:
        mon = lambda t, y: monitor(t, y[:d], y[d:])

    res = _rk45.integrate_batch(
        _rhs(m),
        y0[None, :],
        t_end,
        rtol=tol,
        atol=tol * 1e-2,
        h_min=h_min,
        max_step=max_step,
        inside=_inside_fn(m),
        wrap=_wrap_fn(m),
        record=True,
        monitor=mon,
    )
    pt = m.point(xc)
    return GeodesicPath(
        metric=m,
        initial=(pt, TangentVector(pt, vc)),
        ts=res.ts,
        xs=res.ys[:, :d],
        vs=res.ys[:, d:],
        status=_STATUS_MAP[int(res.status[0])],
        _segments=res.segments,
    )


def flow_batch(
    m: MetricField,
    X: np.ndarray,
    V: np.ndarray,
    t_end: float = 1.0,
    tol: float = TOL_ODE,
):
    """Endpoint-only geodesic flow for a batch: returns (X1, V1, ok mask)."""
    d = m.dim
    y0 = np.concatenate([X, V], axis=-1)
    res = _rk45.integrate_batch(
        _rhs(m),
        y0,
        t_end,
        rtol=tol,
        atol=tol * 1e-2,
        h_min=H_MIN,
        inside=_inside_fn(m),
        wrap=_wrap_fn(m),
    )
    ok = res.status == _rk45.COMPLETED
    return res.y[:, :d], res.y[:, d:], ok


def exp_map(m: MetricField, x, v, tol: float = TOL_ODE) -> Point:
    """gamma(1) for the geodesic with gamma(0)=x, gamma'(0)=v."""
    xc = coords_of(x)
    vc = v.components if isinstance(v, TangentVector) else np.asarray(v, dtype=float)
    if not np.any(vc):
        return m.point(xc)
    X1, _, ok = flow_batch(m, xc[None, :], vc[None, :], 1.0, tol=tol)
    if not ok[0]:
        raise IntegrationError("exponential map left the chart or underflowed")
    return m.point(X1[0])


@dataclass
class ShootingResult:
    """Newton-shooting solution of exp_x(v) = y."""

    velocity: TangentVector
    residual: float
    iterations: int
    converged: bool
    jac_det: float


def shoot_batch(
    m: MetricField,
    X: np.ndarray,
    Y: np.ndarray,
    tol_shoot: float = TOL_SHOOT,
    n_max: int = N_MAX_SHOOT,
    tol: float = TOL_ODE,
    jac_floor: float = JAC_DET_FLOOR,
):
    """Vectorized damped Newton on v -> exp_x(v) - y in chart coordinates.

    Returns (V, residual, iterations, ok, jac_det, end_velocities): the final
    velocity guesses, endpoint miss in chart units, Newton iteration counts, a
    convergence mask, the last shooting-Jacobian determinant (conjugate-point
    monitor), and the terminal velocities gamma'(1) of the converged shots.
    """
    B, d = X.shape
    V = Y - X  # exact for flat charts, good in small convex sets
    eps = np.sqrt(np.finfo(float).eps)

    res_prev = np.full(B, np.inf)
    V_prev = V.copy()
    iters = np.zeros(B, dtype=int)
    frozen = np.zeros(B, dtype=bool)
    resid = np.full(B, np.inf)
    jac_det = np.zeros(B)
    Vend = np.zeros_like(V)
    fail_bad = np.zeros(B, dtype=bool)

    for it in range(n_max):
        live = ~frozen
        if not np.any(live):
            break
        idx = np.flatnonzero(live)
        nb = len(idx)
        Xl, Vl, Yl = X[idx], V[idx], Y[idx]

        # one batched flow for base shots and all Jacobian columns
        scale = eps * np.maximum(1.0, np.abs(Vl)).max(axis=1)  # (nb,)
        big_X = np.repeat(Xl, d + 1, axis=0)
        big_V = np.repeat(Vl, d + 1, axis=0)
        for a in range(d):
            big_V[a + 1 :: d + 1, a] += scale
        E, Vfin, ok = flow_batch(m, big_X, big_V, 1.0, tol=tol)
        E = E.reshape(nb, d + 1, d)
        ok = ok.reshape(nb, d + 1)
        base = E[:, 0, :]
        miss = base - Yl
        res_now = np.max(np.abs(miss), axis=1)
        iters[idx] += 1

        flow_failed = ~np.all(ok, axis=1)
        improved = res_now <= res_prev[idx]
        converged = (res_now <= tol_shoot) & ~flow_failed

        # Jacobian and Newton step for improved, unconverged pairs
        J = (E[:, 1:, :] - base[:, None, :]) / scale[:, None, None]
        J = np.swapaxes(J, 1, 2)  # J[b, i, a] = d endpoint_i / d v_a
        dets = np.linalg.det(J)
        singular = np.abs(dets) < jac_floor
        with np.errstate(all="ignore"):
            step = np.linalg.solve(
                np.where(singular[:, None, None], np.eye(d), J), -miss[:, None, :].swapaxes(1, 2)
            )[..., 0]

        newV = np.where(
            (improved & ~flow_failed & ~singular)[:, None],
            Vl + step,
            V_prev[idx] + 0.5 * (Vl - V_prev[idx]),  # backtrack half step
        )

        # book-keeping
        upd = improved & ~flow_failed
        V_prev[idx[upd]] = Vl[upd]
        res_prev[idx[upd]] = res_now[upd]
        resid[idx] = np.minimum(resid[idx], res_now)
        jac_det[idx] = dets
        Vend[idx[converged]] = Vfin.reshape(nb, d + 1, d)[converged, 0, :]
        V[idx[converged]] = Vl[converged]
        frozen[idx[converged]] = True
        hopeless = (flow_failed & (res_prev[idx] == np.inf)) | (
            singular & improved & ~converged
        )
        fail_bad[idx[hopeless]] = True
        frozen[idx[hopeless]] = True
        live_mask = ~converged & ~hopeless
        V[idx[live_mask]] = newV[live_mask]

    ok = frozen & ~fail_bad & (resid <= tol_shoot)
    return V, resid, iters, ok, jac_det, Vend


def log_map(
    m: MetricField,
    x,
    y,
    tol_shoot: float = TOL_SHOOT,
    n_max: int = N_MAX_SHOOT,
) -> ShootingResult:
    """Inverse exponential map by damped Newton shooting."""
    xc, yc = coords_of(x), coords_of(y)
    m.require_inside(xc)
    m.require_inside(yc)
    if np.array_equal(xc, yc):
        pt = m.point(xc)
        return ShootingResult(TangentVector(pt, np.zeros(m.dim)), 0.0, 0, True, 1.0)
    V, resid, iters, ok, dets, _ = shoot_batch(
        m, xc[None, :], yc[None, :], tol_shoot=tol_shoot, n_max=n_max
    )
    if not ok[0]:
        raise ShootingError(
            f"no convergence after {int(iters[0])} iterations "
            f"(residual {resid[0]:.3e}); pair likely leaves the simply convex "
            f"regime (|det J|={abs(dets[0]):.2e})"
        )
    pt = m.point(xc)
    return ShootingResult(
        velocity=TangentVector(pt, V[0]),
        residual=float(resid[0]),
        iterations=int(iters[0]),
        converged=True,
        jac_det=float(dets[0]),
    )


@dataclass
class SurfaceHit:
    t0: float
    u0: np.ndarray
    point: Point


def hit_hypersurface(
    m: MetricField,
    x,
    v,
    surface,
    t_max: float = 10.0,
    t_skip: Optional[float] = None,
    tol_hit: float = TOL_HIT,
    max_step: float = np.inf,
) -> Optional[SurfaceHit]:
    """Smallest t0 > t_skip at which the geodesic meets the surface.

    Detection uses the sign of the surface's side function along the accepted
    samples (a sign change must persist over a full step; grazing touches are
    not crossings), followed by dense-output bisection and a secant polish on
    exactly integrated states.
    """
    if t_skip is None:
        t_skip = 10.0 * tol_hit
    path = integrate(m, x, v, t_max, max_step=max_step)
    side = np.array([surface.side(m, xi) for xi in path.xs])

    k0 = int(np.searchsorted(path.ts, t_skip, side="right"))
    hit_idx = None
    for k in range(max(k0, 1), len(path.ts)):
        if np.isnan(side[k - 1]) or np.isnan(side[k]):
            continue
        if side[k - 1] != 0.0 and np.sign(side[k]) * np.sign(side[k - 1]) < 0:
            hit_idx = k
            break
        if side[k] == 0.0 and side[k - 1] != 0.0:
            hit_idx = k
            break
    if hit_idx is None:
        return None

    ta, tb = path.ts[hit_idx - 1], path.ts[hit_idx]
    ga = side[hit_idx - 1]

    def g_dense(t: float) -> float:
        return surface.side(m, path.state_at(t)[: m.dim])

    for _ in range(60):  # bisection on the dense interpolant
        tm = 0.5 * (ta + tb)
        gm = g_dense(tm)
        if gm == 0.0:
            ta = tb = tm
            break
        if np.sign(gm) == np.sign(ga):
            ta, ga = tm, gm
        else:
            tb = tm
        if tb - ta < max(tol_hit, 1e-14 * max(1.0, tb)):
            break
    t0 = 0.5 * (ta + tb)
    state = path.state_at(t0)
    pt = m.point(state[: m.dim])
    u0, _, _ = surface.foot_point(m, state[: m.dim])
    return SurfaceHit(t0=float(t0), u0=u0, point=pt)


class ProbeVerdict(str, enum.Enum):
    COMPLETE = "complete-to-t_max"
    SCALAR_SINGULARITY = "scalar-singularity"
    LEFT_CHART = "left-chart"
    INCONCLUSIVE = "inconclusive"


@dataclass
class CompletenessReport:
    verdict: ProbeVerdict
    t_reached: float
    max_kretschmann: float
    blowup_estimate: Optional[float] = None


def completeness_probe(
    m: MetricField,
    x,
    v,
    t_max: float,
    kappa_max: float = 1e12,
    max_step: float = np.inf,
) -> CompletenessReport:
    """Integrate forward, monitoring the Kretschmann scalar along the way.

    Reports a scalar-curvature singularity as soon as the scalar exceeds
    kappa_max; a step underflow without curvature blow-up is inconclusive.
    """
    record = {"max_k": 0.0, "blowup_t": None}

    def monitor(t, xc, vc):
        try:
            k = abs(curvature_at(m, xc).kretschmann)
        except Exception:
            return True  # too close to the chart edge for stencils; keep going
        record["max_k"] = max(record["max_k"], k)
        if k > kappa_max:
            record["blowup_t"] = t
            return False
        return True

    path = integrate(m, x, v, t_max, max_step=max_step, monitor=monitor)
    t_reached = float(path.ts[-1])
    if path.status is GeodesicStatus.CURVATURE_BLOWUP or record["blowup_t"] is not None:
        verdict = ProbeVerdict.SCALAR_SINGULARITY
    elif path.status is GeodesicStatus.COMPLETED:
        verdict = ProbeVerdict.COMPLETE
    elif path.status is GeodesicStatus.LEFT_CHART:
        verdict = (
            ProbeVerdict.SCALAR_SINGULARITY
            if record["max_k"] > kappa_max
            else ProbeVerdict.LEFT_CHART
        )
    else:
        verdict = ProbeVerdict.INCONCLUSIVE
    return CompletenessReport(
        verdict=verdict,
        t_reached=t_reached,
        max_kretschmann=record["max_k"],
        blowup_estimate=record["blowup_t"],
    )
