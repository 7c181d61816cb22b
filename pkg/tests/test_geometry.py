import numpy as np
import pytest

from lorentzjet.catalog import catalog_metric, minkowski, product
from lorentzjet.errors import BasePointMismatch, ChartDomainError
from lorentzjet.geometry import (
    CausalClass,
    ChartDomain,
    MetricField,
    causal_character,
    christoffel,
    curvature_at,
    inner,
)


@pytest.fixture(scope="module")
def mink():
    return minkowski(dim=4)


def vec(m, coords, comps):
    return m.tangent(coords, comps)


class TestInner:
    def test_timelike_unit(self, mink):
        v = vec(mink, [0, 0, 0, 0], [1, 0, 0, 0])
        assert inner(mink, v, v) == -1.0

    def test_orthogonal_axes(self, mink):
        x = [0, 0, 0, 0]
        v = vec(mink, x, [1, 0, 0, 0])
        w = vec(mink, x, [0, 1, 0, 0])
        assert inner(mink, v, w) == 0.0

    def test_scaled_product_factor(self):
        m = product(factor={"kind": "euclidean", "dim": 3, "scale": 4.0})
        v = vec(m, [0, 0, 0, 0], [0, 1, 0, 0])
        assert inner(m, v, v) == pytest.approx(4.0, abs=1e-14)

    def test_base_point_mismatch(self, mink):
        v = vec(mink, [0, 0, 0, 0], [1, 0, 0, 0])
        w = vec(mink, [1, 0, 0, 0], [1, 0, 0, 0])
        with pytest.raises(BasePointMismatch):
            inner(mink, v, w)

    def test_outside_domain(self, mink):
        v = vec(mink, [99, 0, 0, 0], [1, 0, 0, 0])
        with pytest.raises(ChartDomainError):
            inner(mink, v, v)


class TestCausalCharacter:
    @pytest.mark.parametrize(
        "comps,expected",
        [
            ([1, 0, 0, 0], CausalClass.TIMELIKE_FUTURE),
            ([1, 1, 0, 0], CausalClass.NULL),
            ([-2, 1, 0, 0], CausalClass.TIMELIKE_PAST),
            ([0, 1, 0, 0], CausalClass.SPACELIKE),
            ([0, 0, 0, 0], CausalClass.ZERO),
        ],
    )
    def test_minkowski_classes(self, mink, comps, expected):
        v = vec(mink, [0, 0, 0, 0], comps)
        assert causal_character(mink, v) is expected


class TestChristoffel:
    def test_minkowski_zero(self, mink):
        gam = christoffel(mink, mink.point([0.3, -0.2, 0.1, 0.0]))
        assert np.max(np.abs(gam)) == 0.0

    def test_hand_computed_diagonal_metric(self):
        # g = diag(-1, (1+x1)^2, 1, 1): only d_1 g_11 = 2(1+x1) is nonzero,
        # giving Gamma^1_11 = 1/(1+x1) and nothing else.
        def ev(x):
            g = np.zeros(x.shape[:-1] + (4, 4))
            g[..., 0, 0] = -1.0
            g[..., 1, 1] = (1.0 + x[..., 1]) ** 2
            g[..., 2, 2] = 1.0
            g[..., 3, 3] = 1.0
            return g

        m = MetricField(
            name="hand",
            dim=4,
            eval_fn=ev,
            domain=ChartDomain(lo=-0.5 * np.ones(4), hi=0.5 * np.ones(4)),
        )
        gam = christoffel(m, m.point([0.0, 0.0, 0.0, 0.0]))
        expected = np.zeros((4, 4, 4))
        expected[1, 1, 1] = 1.0
        assert np.allclose(gam, expected, atol=1e-9)

    def test_symmetry_lower_indices(self):
        rng = np.random.default_rng(7)
        for name, params, tol in [
            ("minkowski", {}, 1e-12),
            ("product", {"factor": {"kind": "conformal", "dim": 2}}, 1e-8),
            ("schwarzschild-kruskal", {"R": 1.0}, 1e-8),
        ]:
            m = catalog_metric(name, params)
            pts = rng.uniform(m.sample_box[0], m.sample_box[1], size=(20, m.dim))
            gam = christoffel(m, pts)
            assert np.max(np.abs(gam - np.swapaxes(gam, -1, -2))) < tol, name

    def test_kruskal_against_halfstep_stencil(self):
        # independent oracle: central differences of g at half the step size,
        # assembled through the same formula
        m = catalog_metric("schwarzschild-kruskal", {"R": 1.0})
        x = np.array([0.05, 1.7, np.pi / 2 + 0.1, 0.1])
        gam = christoffel(m, x)

        h = 0.5 * (np.finfo(float).eps ** (1 / 3))
        d = 4
        dg = np.zeros((d, d, d))
        for a in range(d):
            xp, xm = x.copy(), x.copy()
            xp[a] += h
            xm[a] -= h
            dg[a] = (m.eval(xp) - m.eval(xm)) / (2 * h)
        ginv = np.linalg.inv(m.eval(x))
        sym = np.einsum("mrn->rmn", dg) + np.einsum("nrm->rmn", dg) - dg
        gam_fd = 0.5 * np.einsum("lr,rmn->lmn", ginv, sym)
        scale = np.max(np.abs(gam))
        assert np.max(np.abs(gam - gam_fd)) < 1e-6 * max(scale, 1.0)


class TestCurvature:
    def test_minkowski_flat(self, mink):
        c = curvature_at(mink, mink.point([0.1, 0.2, -0.3, 0.0]))
        assert abs(c.kretschmann) < 1e-18
        assert c.max_abs_ricci < 1e-10

    def test_riemann_antisymmetry_last_pair(self):
        m = catalog_metric("schwarzschild-kruskal", {"R": 1.0})
        c = curvature_at(m, m.point([0.0, 1.7, np.pi / 2, 0.0]))
        asym = c.riemann + np.einsum("abdc->abcd", c.riemann)
        assert np.max(np.abs(asym)) < 1e-6 * max(1.0, np.max(np.abs(c.riemann)))

    def test_kretschmann_contraction_consistency(self):
        # kretschmann must equal the full contraction of the stored riemann
        m = catalog_metric("schwarzschild-kruskal", {"R": 1.0})
        x = m.point([0.05, 1.6, np.pi / 2, 0.0])
        c = curvature_at(m, x)
        g = m.eval(x.coords)
        ginv = np.linalg.inv(g)
        r_low = np.einsum("ae,ebcd->abcd", g, c.riemann)
        r_up = np.einsum("abcd,be,cf,dk->aefk", c.riemann, ginv, ginv, ginv)
        k2 = np.einsum("abcd,abcd->", r_low, r_up)
        assert c.kretschmann == pytest.approx(k2, rel=1e-12)

    def test_product_round_sphere_kretschmann(self):
        # block metric: curvature lives entirely in the Riemannian factor, so
        # the Kretschmann scalar equals the factor's 4/rho^4
        rho = 1.7
        m = product(factor={"kind": "round-sphere", "radius": rho})
        c = curvature_at(m, m.point([0.0, np.pi / 2 + 0.2, 0.1]))
        assert c.kretschmann == pytest.approx(4.0 / rho**4, rel=1e-6)
