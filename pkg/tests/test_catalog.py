import numpy as np
import pytest

from lorentzjet.catalog import (
    catalog_metric,
    kruskal_radius,
    minkowski,
    perturbed,
)
from lorentzjet.errors import ConfigError, SingularMetricError
from lorentzjet.geometry import curvature_at, validate_metric

ALL_CATALOG = [
    ("minkowski", {}),
    ("product", {"factor": {"kind": "euclidean", "dim": 3, "scale": 4.0}}),
    ("product", {"factor": {"kind": "conformal", "dim": 2, "amplitude": 0.3}}),
    ("torus-minkowski", {}),
    ("schwarzschild-kruskal", {"R": 1.0}),
    (
        "perturbed",
        {
            "base": {"name": "minkowski", "params": {"dim": 3}},
            "amplitude": 0.15,
            "center": [0.0, 0.3, 0.0],
            "radius": 0.5,
        },
    ),
]


@pytest.mark.parametrize("name,params", ALL_CATALOG)
def test_symmetry_and_signature_100_points(name, params):
    m = catalog_metric(name, params)
    validate_metric(m, n_points=100, rng=np.random.default_rng(3))


def test_minkowski_eval_everywhere():
    m = minkowski(dim=4)
    pts = np.random.default_rng(0).uniform(-5, 5, size=(7, 4))
    g = m.eval(pts)
    assert np.allclose(g, np.diag([-1.0, 1, 1, 1]))


def test_unknown_name_raises():
    with pytest.raises(ConfigError):
        catalog_metric("kerr")


class TestKruskalRadius:
    def test_newton_against_bisection_oracle(self):
        # independent oracle: plain bisection on (1 - r) e^r = w
        def bisect(w, lo=0.0, hi=60.0):
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if (1.0 - mid) * np.exp(mid) > w:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        ws = np.array([-593.0, -4.0, -1.0, 0.0, 0.5, 0.9, 0.999])
        r = kruskal_radius(ws, R=1.0)
        for wi, ri in zip(ws, r):
            assert ri == pytest.approx(bisect(wi), abs=1e-10)

    def test_horizon_exterior_value(self):
        # U=1, V=0: (1 - r) e^r = -1, r ~ 1.278
        r = kruskal_radius(np.array([-1.0]), R=1.0)[0]
        assert r == pytest.approx(1.278, abs=1e-3)
        assert (1.0 - r) * np.exp(r) == pytest.approx(-1.0, abs=1e-12)

    def test_scaling_in_R(self):
        r1 = kruskal_radius(np.array([-2.0]), R=1.0)[0]
        r2 = kruskal_radius(np.array([-2.0]), R=2.0)[0]
        assert r2 == pytest.approx(2.0 * r1, rel=1e-12)


@pytest.fixture(scope="module")
def kruskal():
    return catalog_metric("schwarzschild-kruskal", {"R": 1.0})


class TestKruskal:
    @pytest.fixture()
    def m(self, kruskal):
        return kruskal

    def test_analytic_deriv_matches_fd(self, m):
        from lorentzjet.geometry import fd_metric_deriv

        x = np.array([0.1, 1.8, np.pi / 2 - 0.2, 0.15])
        dg = m.deriv(x)
        dg_fd = fd_metric_deriv(m, x)
        assert np.max(np.abs(dg - dg_fd)) < 1e-7 * max(1.0, np.max(np.abs(dg)))

    def test_ricci_flat_on_grid(self, m):
        # vacuum solution: max |Ric| below 1e-4 with finite-difference curvature
        rng = np.random.default_rng(11)
        pts = rng.uniform(m.sample_box[0], m.sample_box[1], size=(10, 4))
        worst = max(curvature_at(m, m.point(p)).max_abs_ricci for p in pts)
        assert worst < 1e-4

    def test_kretschmann_depends_only_on_r(self, m):
        # two chart points with equal r agree to 1e-5 relative
        w = -2.5
        r = kruskal_radius(np.array([w]))[0]
        # (V, U) pairs with V^2 - U^2 = w
        p1 = m.point([0.0, np.sqrt(-w), np.pi / 2, 0.0])
        p2 = m.point([0.4, np.sqrt(0.16 - w), np.pi / 2 - 0.3, 0.2])
        k1 = curvature_at(m, p1).kretschmann
        k2 = curvature_at(m, p2).kretschmann
        assert k1 == pytest.approx(k2, rel=1e-5)
        # and the independent closed-form check at this radius: 12 R^2 / r^6
        assert k1 == pytest.approx(12.0 / r**6, rel=1e-4)

    def test_singularity_predicate_cuts_domain(self, m):
        inside = m.domain.contains(np.array([0.0, 1.5, np.pi / 2, 0.0]))
        near_sing = m.domain.contains(np.array([1.0, 0.01, np.pi / 2, 0.0]))
        assert bool(inside) and not bool(near_sing)


class TestPerturbed:
    def test_zero_amplitude_bit_identical(self):
        base = minkowski(dim=3)
        m = perturbed(base, amplitude=0.0, center=[0, 0, 0], radius=0.5)
        pts = np.random.default_rng(1).uniform(-2, 2, size=(50, 3))
        assert np.array_equal(m.eval(pts), base.eval(pts))

    def test_bump_compact_support(self):
        base = minkowski(dim=3)
        m = perturbed(base, amplitude=0.2, center=[0, 0.5, 0], radius=0.3)
        far = np.array([0.0, 2.0, 0.0])
        assert np.array_equal(m.eval(far), base.eval(far))
        at_center = np.array([0.0, 0.5, 0.0])
        g = m.eval(at_center)
        assert g[1, 1] == pytest.approx(1.2)
        assert g[0, 0] == -1.0

    def test_analytic_deriv_matches_fd(self):
        from lorentzjet.geometry import fd_metric_deriv

        base = minkowski(dim=3)
        m = perturbed(base, amplitude=0.2, center=[0, 0.5, 0], radius=0.4)
        x = np.array([0.05, 0.62, -0.11])
        assert np.max(np.abs(m.deriv(x) - fd_metric_deriv(m, x))) < 1e-8

    def test_signature_breaking_detected(self):
        base = minkowski(dim=3)
        with pytest.raises(SingularMetricError):
            perturbed(
                base,
                amplitude=-2.0,
                center=[0, 0, 0],
                radius=0.5,
                component=[1, 1],
            )


def test_torus_eval_identical_to_minkowski():
    t = catalog_metric("torus-minkowski", {})
    mk = minkowski(dim=4)
    pts = np.random.default_rng(5).uniform(0.05, 0.95, size=(30, 4))
    assert np.array_equal(t.eval(pts), mk.eval(pts))
    # chart wraps coordinates mod 1
    wrapped = t.domain.wrap(np.array([1.25, -0.5, 0.3, 2.0]))
    assert np.allclose(wrapped, [0.25, 0.5, 0.3, 0.0])
