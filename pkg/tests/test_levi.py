import numpy as np
import pytest

from contactlab.errors import DegenerateKernel
from contactlab.levi import (
    complex_tangency_sample, j_apply, levi_form, levi_identity_residual,
    levi_rhs_terms,
)

RNG = np.random.default_rng(23)


def sphere_fn(center, radius):
    c = np.asarray(center, dtype=float)

    def f(q):
        return np.sqrt(np.sum((q - c) ** 2, axis=-1)) - radius

    return f


class TestJApply:
    def test_squares_to_minus_one(self, ctx_t3):
        # J^2 = -Id on the symplectization tangent space
        p = np.array([0.2, -0.3, 0.4])
        vt, vx = 0.7, np.array([0.1, 0.5, -0.2])
        wt, wx = j_apply(ctx_t3, p, vt, vx)
        ut, ux = j_apply(ctx_t3, p, wt, wx)
        assert abs(ut + vt) < 1e-9
        np.testing.assert_allclose(ux, -vx, atol=1e-9)

    def test_isometry(self, ctx_rxh2):
        p = np.array([0.1, 0.2, 1.3])
        vt, vx = -0.4, np.array([0.3, -0.1, 0.6])
        wt, wx = j_apply(ctx_rxh2, p, vt, vx)
        g = ctx_rxh2.metric(p)
        n1 = vt * vt + float(g @ vx @ vx)
        n2 = wt * wt + float(g @ wx @ wx)
        assert abs(n1 - n2) < 1e-9


class TestComplexTangency:
    def test_kernel_conditions(self, ctx_t3):
        f = sphere_fn([0.0, 0.0, 0.0], 0.8)
        p = np.array([0.8, 0.0, 0.0])
        vt, vx = complex_tangency_sample(ctx_t3, f, p, 0.0, rng_seed=4)
        g = ctx_t3.metric(p)
        assert abs(vt * vt + float(g @ vx @ vx) - 1.0) < 1e-10
        # df(v) = 0 for the t-independent f
        grad = np.array([1.0, 0.0, 0.0])  # d|q| at (0.8, 0, 0)
        assert abs(float(grad @ vx)) < 1e-8
        # df(Jv) = 0 as well
        wt, wx = j_apply(ctx_t3, p, vt, vx)
        assert abs(float(grad @ wx)) < 1e-6

    def test_seed_determinism(self, ctx_t3):
        f = sphere_fn([0.0, 0.0, 0.0], 0.8)
        p = np.array([0.0, 0.8, 0.0])
        a = complex_tangency_sample(ctx_t3, f, p, 0.0, rng_seed=9)
        b = complex_tangency_sample(ctx_t3, f, p, 0.0, rng_seed=9)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1], b[1])

    def test_degenerate_function(self, ctx_t3):
        def const(q):
            return np.zeros(q.shape[:-1])

        with pytest.raises(DegenerateKernel):
            complex_tangency_sample(ctx_t3, const, np.zeros(3), 0.0, 1)


class TestLeviIdentity:
    @pytest.mark.parametrize("fixture,center,radius,point", [
        ("ctx_t3", [0.0, 0.0, 0.0], 0.7, [0.7, 0.0, 0.0]),
        ("ctx_rxh2", [0.0, 0.0, 1.5], 0.4, [0.4, 0.0, 1.5]),
        ("ctx_h3", [0.0, 0.0, 1.5], 0.4, [0.0, 0.4, 1.5]),
    ])
    def test_residual_small(self, fixture, center, radius, point, request):
        ctx = request.getfixturevalue(fixture)
        f = sphere_fn(center, radius)
        p = np.asarray(point, dtype=float)
        for seed in range(3):
            v = complex_tangency_sample(ctx, f, p, 0.0, rng_seed=seed)
            assert levi_identity_residual(ctx, f, p, 0.0, v) < 1e-4

    def test_correction_sign_rxh2(self, ctx_rxh2):
        # |grad ln rho| = 1/2 pointing in -y; at the top of a small sphere
        # the outward normal is +y, so the correction term is negative
        f = sphere_fn([0.0, 0.0, 1.0], 0.3)
        p = np.array([0.0, 0.0, 1.3])
        v = complex_tangency_sample(ctx_rxh2, f, p, 0.0, rng_seed=2)
        terms = levi_rhs_terms(ctx_rxh2, f, p, v)
        assert terms["correction"] < 0

    def test_levi_form_scales_quadratically(self, ctx_t3):
        f = sphere_fn([0.0, 0.0, 0.0], 0.7)
        p = np.array([0.0, 0.7, 0.0])
        v = complex_tangency_sample(ctx_t3, f, p, 0.0, rng_seed=5)
        one = levi_form(ctx_t3, f, p, 0.0, v)
        double = levi_form(ctx_t3, f, p, 0.0, (2 * v[0], 2 * v[1]))
        assert abs(double - 4.0 * one) < 1e-8
