"""Built-in metric catalog: minkowski, product, torus-minkowski,
schwarzschild-kruskal and perturbed variants.

Every entry ships analytic first derivatives where tractable, which keeps
geodesics and curvature at integrator accuracy.
"""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, SingularMetricError
from .geometry import ChartDomain, MetricField, validate_metric

CATALOG_NAMES = (
    "minkowski",
    "product",
    "torus-minkowski",
    "schwarzschild-kruskal",
    "perturbed",
)


def _box_domain(dim: int, halfwidth: float) -> ChartDomain:
    return ChartDomain(lo=-halfwidth * np.ones(dim), hi=halfwidth * np.ones(dim))


def minkowski(dim: int = 4, halfwidth: float = 10.0) -> MetricField:
    eta = np.diag(np.r_[-1.0, np.ones(dim - 1)])

    def ev(x):
        return np.broadcast_to(eta, x.shape[:-1] + (dim, dim)).copy()

    def dv(x):
        return np.zeros(x.shape[:-1] + (dim, dim, dim))

    hw = 0.45 * halfwidth
    return MetricField(
        name="minkowski",
        dim=dim,
        eval_fn=ev,
        deriv_fn=dv,
        domain=_box_domain(dim, halfwidth),
        sample_box=np.stack([-hw * np.ones(dim), hw * np.ones(dim)]),
        params={"dim": dim, "halfwidth": halfwidth},
    )


def torus_minkowski(dim: int = 4) -> MetricField:
    """Flat torus R^{1+n}/Z^{1+n}: Minkowski metric, unit-periodic chart."""
    eta = np.diag(np.r_[-1.0, np.ones(dim - 1)])

    def ev(x):
        return np.broadcast_to(eta, x.shape[:-1] + (dim, dim)).copy()

    def dv(x):
        return np.zeros(x.shape[:-1] + (dim, dim, dim))

    dom = ChartDomain(lo=np.zeros(dim), hi=np.ones(dim), periods=np.ones(dim))
    return MetricField(
        name="torus-minkowski",
        dim=dim,
        eval_fn=ev,
        deriv_fn=dv,
        domain=dom,
        sample_box=np.stack([0.05 * np.ones(dim), 0.95 * np.ones(dim)]),
        params={"dim": dim},
    )


# --------------------------------------------------------------------------
# product metrics g = -dt^2 + ghat(z)
# --------------------------------------------------------------------------


def _factor_euclidean(spec):
    k = int(spec.get("dim", 3))
    scale = float(spec.get("scale", 1.0))
    base = scale * np.eye(k)

    def ev(z):
        return np.broadcast_to(base, z.shape[:-1] + (k, k)).copy()

    def dv(z):
        return np.zeros(z.shape[:-1] + (k, k, k))

    return k, ev, dv, {"kind": "euclidean", "dim": k, "scale": scale}


def _factor_round_sphere(spec):
    """Round 2-sphere of the given radius, polar-cap chart (theta, phi)."""
    rho = float(spec.get("radius", 1.0))

    def ev(z):
        th = z[..., 0]
        g = np.zeros(z.shape[:-1] + (2, 2))
        g[..., 0, 0] = rho**2
        g[..., 1, 1] = rho**2 * np.sin(th) ** 2
        return g

    def dv(z):
        th = z[..., 0]
        dg = np.zeros(z.shape[:-1] + (2, 2, 2))
        dg[..., 0, 1, 1] = 2.0 * rho**2 * np.sin(th) * np.cos(th)
        return dg

    return 2, ev, dv, {"kind": "round-sphere", "radius": rho}


def _factor_conformal(spec):
    """Conformally flat factor ghat_ab = c(z) delta_ab with a Gaussian swell.

    c(z) = base * (1 + amplitude * exp(-|z - center|^2 / width^2))
    """
    k = int(spec.get("dim", 2))
    amp = float(spec.get("amplitude", 0.3))
    width = float(spec.get("width", 1.5))
    base = float(spec.get("base", 1.0))
    center = np.asarray(spec.get("center", np.zeros(k)), dtype=float)
    if base * (1.0 + min(0.0, amp)) <= 0:
        raise ConfigError("conformal factor must stay positive")

    def conf(z):
        d2 = np.sum((z - center) ** 2, axis=-1)
        return base * (1.0 + amp * np.exp(-d2 / width**2))

    def ev(z):
        c = conf(z)
        return c[..., None, None] * np.eye(k)

    def dv(z):
        d2 = np.sum((z - center) ** 2, axis=-1)
        bump = base * amp * np.exp(-d2 / width**2)
        dc = bump[..., None] * (-2.0 / width**2) * (z - center)  # (..., k)
        return dc[..., :, None, None] * np.eye(k)

    return k, ev, dv, {
        "kind": "conformal",
        "dim": k,
        "amplitude": amp,
        "width": width,
        "base": base,
        "center": center.tolist(),
    }


_FACTORS = {
    "euclidean": _factor_euclidean,
    "round-sphere": _factor_round_sphere,
    "conformal": _factor_conformal,
}


def product(factor: dict, halfwidth: float = 10.0) -> MetricField:
    """Static product metric -dt^2 + ghat on R x N."""
    kind = factor.get("kind", "euclidean")
    if kind not in _FACTORS:
        raise ConfigError(f"unknown product factor kind '{kind}'")
    k, fev, fdv, fparams = _FACTORS[kind](factor)
    dim = 1 + k

    def ev(x):
        g = np.zeros(x.shape[:-1] + (dim, dim))
        g[..., 0, 0] = -1.0
        g[..., 1:, 1:] = fev(x[..., 1:])
        return g

    def dv(x):
        dg = np.zeros(x.shape[:-1] + (dim, dim, dim))
        dg[..., 1:, 1:, 1:] = fdv(x[..., 1:])
        return dg

    if kind == "round-sphere":
        pad = 0.35
        lo = np.array([-halfwidth, pad, -np.pi + pad])
        hi = np.array([halfwidth, np.pi - pad, np.pi - pad])
        dom = ChartDomain(lo=lo, hi=hi)
        sbox = np.stack(
            [np.array([-2.0, np.pi / 2 - 0.5, -0.5]), np.array([2.0, np.pi / 2 + 0.5, 0.5])]
        )
    else:
        dom = _box_domain(dim, halfwidth)
        hw = 0.45 * halfwidth
        sbox = np.stack([-hw * np.ones(dim), hw * np.ones(dim)])

    return MetricField(
        name="product",
        dim=dim,
        eval_fn=ev,
        deriv_fn=dv,
        domain=dom,
        sample_box=sbox,
        params={"factor": fparams, "halfwidth": halfwidth},
    )


def factor_metric(factor: dict, halfwidth: float = 10.0) -> MetricField:
    """The Riemannian factor as a standalone positive-definite field.

    Used for Riemannian shooting when the closed-form product distance needs
    the factor distance on a curved factor.
    """
    kind = factor.get("kind", "euclidean")
    if kind not in _FACTORS:
        raise ConfigError(f"unknown product factor kind '{kind}'")
    k, fev, fdv, fparams = _FACTORS[kind](factor)
    if kind == "round-sphere":
        pad = 0.35
        dom = ChartDomain(
            lo=np.array([pad, -np.pi + pad]), hi=np.array([np.pi - pad, np.pi - pad])
        )
        sbox = np.stack(
            [np.array([np.pi / 2 - 0.5, -0.5]), np.array([np.pi / 2 + 0.5, 0.5])]
        )
    else:
        dom = _box_domain(k, halfwidth)
        sbox = np.stack([-0.45 * halfwidth * np.ones(k), 0.45 * halfwidth * np.ones(k)])
    return MetricField(
        name=f"factor-{kind}",
        dim=k,
        eval_fn=fev,
        deriv_fn=fdv,
        domain=dom,
        sample_box=sbox,
        params={"factor": fparams},
    )


# --------------------------------------------------------------------------
# Schwarzschild in Kruskal-Szekeres coordinates (V, U, theta, phi)
# --------------------------------------------------------------------------


def kruskal_radius(w, R: float = 1.0, tol: float = 1e-14, max_iter: int = 200):
    """Solve V^2 - U^2 = (1 - r/R) exp(r/R) for r, elementwise.

    f(r) = (1 - r/R) e^{r/R} is strictly decreasing with f(0) = 1, so for any
    w < 1 there is a unique positive root.  Safeguarded Newton: bisection
    bracket maintained throughout.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w >= 1.0):
        raise ValueError("Kruskal radius undefined for V^2-U^2 >= 1")

    def f(r):
        return (1.0 - r / R) * np.exp(r / R)

    lo = np.zeros_like(w)
    hi = np.full_like(w, 2.0 * R)
    for _ in range(200):
        mask = f(hi) > w
        if not np.any(mask):
            break
        hi = np.where(mask, 2.0 * hi, hi)

    # interior initial guess: r ~ R sqrt(2(1-w)) near w->1, else midpoint
    r = np.where(w > 0.0, R * np.sqrt(2.0 * np.maximum(1.0 - w, 0.0)), 0.5 * (lo + hi))
    r = np.clip(r, lo + 1e-300, hi)
    for _ in range(max_iter):
        fr = f(r) - w
        done = np.abs(fr) <= tol * (1.0 + np.abs(w))
        if np.all(done):
            break
        lo = np.where(fr > 0, r, lo)
        hi = np.where(fr < 0, r, hi)
        dfr = -(r / R**2) * np.exp(r / R)
        step = np.where(dfr != 0, fr / np.where(dfr != 0, dfr, 1.0), 0.0)
        cand = r - step
        bad = (cand <= lo) | (cand >= hi) | ~np.isfinite(cand)
        r = np.where(bad, 0.5 * (lo + hi), cand)
    return r


def schwarzschild_kruskal(
    R: float = 1.0,
    delta_sing: float = 1e-3,
    halfwidth: float = 30.0,
) -> MetricField:
    R = float(R)
    delta = float(delta_sing)

    def radius(x):
        w = x[..., 0] ** 2 - x[..., 1] ** 2
        # integrator stages may transiently poke past the cutoff; clamp so the
        # Newton solve stays finite (such steps are rejected by the domain check)
        w = np.minimum(w, 1.0 - 0.25 * delta)
        return kruskal_radius(w, R=R)

    def ev(x):
        r = radius(x)
        f = (4.0 * R**3 / r) * np.exp(-r / R)
        th = x[..., 2]
        g = np.zeros(x.shape[:-1] + (4, 4))
        g[..., 0, 0] = -f
        g[..., 1, 1] = f
        g[..., 2, 2] = r**2
        g[..., 3, 3] = r**2 * np.sin(th) ** 2
        return g

    def dv(x):
        V, U, th = x[..., 0], x[..., 1], x[..., 2]
        r = radius(x)
        erR = np.exp(r / R)
        f = (4.0 * R**3 / r) * np.exp(-r / R)
        fp = -f * (1.0 / r + 1.0 / R)
        # implicit differentiation of V^2 - U^2 = (1 - r/R) e^{r/R}
        dr_dV = -2.0 * V * R**2 / (r * erR)
        dr_dU = 2.0 * U * R**2 / (r * erR)
        s2, sc = np.sin(th) ** 2, np.sin(th) * np.cos(th)
        dg = np.zeros(x.shape[:-1] + (4, 4, 4))
        for a, dr in ((0, dr_dV), (1, dr_dU)):
            dg[..., a, 0, 0] = -fp * dr
            dg[..., a, 1, 1] = fp * dr
            dg[..., a, 2, 2] = 2.0 * r * dr
            dg[..., a, 3, 3] = 2.0 * r * s2 * dr
        dg[..., 2, 3, 3] = 2.0 * r**2 * sc
        return dg

    def away_from_singularity(coords, margin):
        w = coords[..., 0] ** 2 - coords[..., 1] ** 2
        slope = 2.0 * (np.abs(coords[..., 0]) + np.abs(coords[..., 1]))
        return w <= 1.0 - delta - margin * slope

    pad = 0.5
    dom = ChartDomain(
        lo=np.array([-halfwidth, -halfwidth, pad, -np.pi + pad]),
        hi=np.array([halfwidth, halfwidth, np.pi - pad, np.pi - pad]),
        predicate=away_from_singularity,
    )
    sbox = np.stack(
        [
            np.array([-0.15, 1.4, np.pi / 2 - 0.25, -0.25]),
            np.array([0.15, 2.0, np.pi / 2 + 0.25, 0.25]),
        ]
    )
    return MetricField(
        name="schwarzschild-kruskal",
        dim=4,
        eval_fn=ev,
        deriv_fn=dv,
        domain=dom,
        sample_box=sbox,
        params={"R": R, "delta_sing": delta, "halfwidth": halfwidth},
    )


# --------------------------------------------------------------------------
# perturbed metric: base + compactly supported smooth bump
# --------------------------------------------------------------------------


def bump_profile(s):
    """C-infinity bump: exp(1 - 1/(1 - s^2)) on |s|<1, zero outside, value 1 at 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2))
    return out


def _bump_dprofile_over_s(s):
    """phi'(s)/s, smooth at s=0: phi' = phi * (-2 s / (1-s^2)^2)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2)) * (-2.0 / (1.0 - si**2) ** 2)
    return out


def perturbed(
    base: MetricField,
    amplitude: float,
    center,
    radius: float,
    matrix=None,
    component=None,
    check_points: int = 200,
) -> MetricField:
    """Base metric plus h = amplitude * bump(|x-center|/radius) * B.

    B defaults to the identity on the spatial block; a single ``component``
    pair [i, j] or a full symmetric ``matrix`` may be given instead.  The
    signature is re-checked on a sample grid; a perturbation that breaks it
    raises SingularMetricError.
    """
    dim = base.dim
    center = np.asarray(center, dtype=float)
    if center.shape != (dim,):
        raise ConfigError("perturbation center must have manifold dimension")
    radius = float(radius)
    amplitude = float(amplitude)

    if matrix is not None:
        B = np.asarray(matrix, dtype=float)
        if B.shape != (dim, dim) or not np.allclose(B, B.T):
            raise ConfigError("perturbation matrix must be symmetric (dim, dim)")
    elif component is not None:
        i, j = int(component[0]), int(component[1])
        B = np.zeros((dim, dim))
        B[i, j] = B[j, i] = 1.0
    else:
        B = np.diag(np.r_[0.0, np.ones(dim - 1)])

    def ev(x):
        s = np.linalg.norm(x - center, axis=-1) / radius
        h = amplitude * bump_profile(s)
        return base.eval(x) + h[..., None, None] * B

    def dv(x):
        delta = x - center
        s = np.linalg.norm(delta, axis=-1) / radius
        dphi_over_s = _bump_dprofile_over_s(s)
        grad = amplitude * dphi_over_s[..., None] * delta / radius**2  # (..., dim)
        return base.deriv(x) + grad[..., :, None, None] * B

    m = MetricField(
        name=f"perturbed({base.name})",
        dim=dim,
        eval_fn=ev,
        deriv_fn=dv if base.has_analytic_deriv else None,
        domain=base.domain,
        time_orientation_fn=base.time_orientation_fn,
        sample_box=base.sample_box,
        params={
            "base": base.params | {"name": base.name},
            "amplitude": amplitude,
            "center": center.tolist(),
            "radius": radius,
        },
    )
    if amplitude != 0.0:
        # sample densely around the bump support as well as the working box
        rng = np.random.default_rng(12345)
        pts = rng.uniform(-1.0, 1.0, size=(check_points, dim)) * radius + center
        pts = pts[base.domain.contains(pts)]
        if len(pts):
            g = m.eval(pts)
            eigs = np.linalg.eigvalsh(g)
            if not np.all(np.sum(eigs < 0, axis=-1) == 1):
                raise SingularMetricError(
                    "perturbation breaks the Lorentzian signature"
                )
        validate_metric(m, n_points=100)
    return m


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def catalog_metric(name: str, params: Optional[dict] = None) -> MetricField:
    """Construct a catalog metric by name with a parameter map."""
    params = dict(params or {})
    if name == "minkowski":
        return minkowski(**params)
    if name == "torus-minkowski":
        return torus_minkowski(**params)
    if name == "product":
        if "factor" not in params:
            raise ConfigError("product metric needs a 'factor' spec")
        return product(**params)
    if name == "schwarzschild-kruskal":
        return schwarzschild_kruskal(**params)
    if name == "perturbed":
        base_spec = params.pop("base", None)
        if not isinstance(base_spec, dict) or "name" not in base_spec:
            raise ConfigError("perturbed metric needs base: {name, params}")
        base = catalog_metric(base_spec["name"], base_spec.get("params"))
        return perturbed(base, **params)
    raise ConfigError(f"unknown catalog metric '{name}'")


def metric_from_config(cfg: dict) -> MetricField:
    """Build a metric from {"metric": {"name": ..., "params": {...}}}."""
    spec = cfg.get("metric", cfg)
    if "name" not in spec:
        raise ConfigError("metric config missing 'name'")
    return catalog_metric(spec["name"], spec.get("params"))
