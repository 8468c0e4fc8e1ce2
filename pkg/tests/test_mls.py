import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alebgk import grid as gm
from alebgk.mls import (Stencil, StencilDegeneracyError, fit_functionals, gaussian_weight,
                        interpolation_weights, mls_coefficients_1d, mls_coefficients_2d,
                        taylor_exponents)

from conftest import box_cloud, line_cloud


def test_gaussian_weight_values():
    assert gaussian_weight(0.0, 1.0) == 1.0
    assert gaussian_weight(0.3, 0.3) == pytest.approx(math.exp(-6.0), rel=1e-14)
    r = np.linspace(0, 1, 20)
    assert np.all(np.diff(gaussian_weight(r, 1.0)) < 0)


def test_symmetric_stencil_1d():
    h = 0.1
    pts = np.array([0.0, -h, h])
    c = mls_coefficients_1d(pts, Stencil(0, [1, 2], 2.5 * h), order=3)
    np.testing.assert_allclose(c.alpha, [-1 / (2 * h), 1 / (2 * h)], rtol=1e-12)
    np.testing.assert_allclose(c.beta, [1 / h ** 2, 1 / h ** 2], rtol=1e-12)


def test_beta_reproduces_quadratic(rng):
    pts = np.concatenate([[0.3], 0.3 + rng.uniform(-0.2, 0.2, 6)])
    c = mls_coefficients_1d(pts, Stencil(0, np.arange(1, 7), 0.25), order=3)
    du = pts[1:] ** 2 - pts[0] ** 2
    assert c.beta @ du == pytest.approx(2.0, rel=1e-10)
    assert c.alpha @ du == pytest.approx(0.6, rel=1e-10)


def test_order5_reproduces_quartic(rng):
    x0 = 0.1
    pts = np.concatenate([[x0], x0 + rng.uniform(-0.3, 0.3, 9)])
    c = mls_coefficients_1d(pts, Stencil(0, np.arange(1, 10), 0.31), order=5)
    funcs = [np.vstack([c.alpha, c.beta, c.higher])]
    for p in range(1, 5):
        du = (pts[1:] - x0) ** p
        vals = funcs[0] @ du
        expect = np.zeros(4)
        expect[p - 1] = math.factorial(p)
        np.testing.assert_allclose(vals, expect, atol=1e-10 * math.factorial(p) / 0.3 ** p)


def test_order5_first_derivative_converges_fourth_order():
    errs, hs = [], []
    for n in (51, 101, 201):
        cloud, dom = line_cloud(n, jitter=0.2, seed=3)
        st = gm.build_stencils(cloud, dom, 5)
        u = np.sin(2 * cloud.x[:, 0])
        du = st.apply(st.deriv[:, 0], u)
        interior = slice(10, n - 10)
        errs.append(np.max(np.abs(du - 2 * np.cos(2 * cloud.x[:, 0]))[interior]))
        hs.append(cloud.dx)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope > 3.5


def test_2d_reproduction(rng):
    pts = np.vstack([[0.0, 0.0], rng.uniform(-0.1, 0.1, (12, 2))])
    c = mls_coefficients_2d(pts, Stencil(0, np.arange(1, 13), 0.15))
    d = pts[1:] - pts[0]
    x, y = d[:, 0], d[:, 1]
    assert c.xi @ x == pytest.approx(1.0, abs=1e-10)
    assert c.zeta @ x == pytest.approx(0.0, abs=1e-8)
    assert c.gamma @ (x * y) == pytest.approx(1.0, rel=1e-10)
    assert c.eta @ (x * x) == pytest.approx(2.0, rel=1e-10)
    assert c.nu @ (y * y) == pytest.approx(2.0, rel=1e-10)


def test_cross_stencil_linear_fit():
    h = 0.2
    disp = np.array([[[h, 0], [-h, 0], [0, h], [0, -h]]], float)
    C = fit_functionals(disp, np.ones((1, 4), bool), np.array([2 * h]), taylor_exponents(2, 2))
    np.testing.assert_allclose(C[0, 0], [1 / (2 * h), -1 / (2 * h), 0, 0], atol=1e-12)
    np.testing.assert_allclose(C[0, 1], [0, 0, 1 / (2 * h), -1 / (2 * h)], atol=1e-12)


def test_rotated_pair_relation(rng):
    pts = np.vstack([[0.0, 0.0], rng.uniform(-1, 1, (8, 2))])
    c = mls_coefficients_2d(pts, Stencil(0, np.arange(1, 9), 1.5))
    # rotating back recovers the Cartesian linear-fit weights
    kappa = c.eta_hat[:, 0] * c.kappa_bar + c.s_hat[:, 0] * c.lambda_bar
    lam = c.eta_hat[:, 1] * c.kappa_bar + c.s_hat[:, 1] * c.lambda_bar
    d = pts[1:]
    assert kappa @ d[:, 0] == pytest.approx(1.0, abs=1e-10)
    assert lam @ d[:, 1] == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(np.arctan2(d[:, 1], d[:, 0]), c.theta)


def test_collinear_stencil_is_degenerate():
    pts = np.array([[0, 0], [1, 0], [2, 0], [-1, 0], [-2, 0], [3, 0]], float) * 0.1
    with pytest.raises(StencilDegeneracyError) as err:
        mls_coefficients_2d(pts, Stencil(0, np.arange(1, 6), 0.5))
    assert err.value.center == 0


def test_too_few_neighbours_named():
    disp = np.zeros((2, 3, 1))
    disp[:, :, 0] = [[0.1, -0.1, 0.2], [0.1, 0.0, 0.0]]
    mask = np.array([[True, True, True], [True, False, False]])
    with pytest.raises(StencilDegeneracyError) as err:
        fit_functionals(disp, mask, np.array([0.3, 0.3]), taylor_exponents(1, 3),
                        centers=[7, 8])
    assert err.value.center == 8


def test_stencil_rejects_self():
    with pytest.raises(ValueError):
        Stencil(1, [0, 1, 2], 1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), s=st.floats(1e-3, 1e3), shift=st.floats(-100, 100))
def test_scaling_and_translation(seed, s, shift):
    rng = np.random.default_rng(seed)
    pts = np.concatenate([[0.0], rng.uniform(-1, 1, 6)])
    pts[1:] += np.sign(pts[1:]) * 0.05
    st_ = Stencil(0, np.arange(1, 7), 1.2)
    c = mls_coefficients_1d(pts, st_)
    c_shift = mls_coefficients_1d(pts + shift, st_)
    c_scale = mls_coefficients_1d(pts * s, Stencil(0, np.arange(1, 7), 1.2 * s))
    np.testing.assert_allclose(c_shift.alpha, c.alpha, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(c_scale.alpha, c.alpha / s, rtol=1e-9)
    np.testing.assert_allclose(c_scale.beta, c.beta / s ** 2, rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_polynomial_reproduction_2d_property(seed):
    rng = np.random.default_rng(seed)
    disp = rng.uniform(-1, 1, (1, 14, 2))
    exps = taylor_exponents(2, 3)
    C = fit_functionals(disp, np.ones((1, 14), bool), np.array([1.5]), exps)[0]
    for q, e in enumerate(exps):
        for p, f in enumerate(exps):
            du = disp[0, :, 0] ** f[0] * disp[0, :, 1] ** f[1]
            expect = math.factorial(f[0]) * math.factorial(f[1]) if e == f else 0.0
            assert C[q] @ du == pytest.approx(expect, abs=1e-10)


def test_interpolation_weights(rng):
    pts = rng.uniform(-1, 1, (12, 2))
    w2 = interpolation_weights([0.1, 0.2], pts, 3.0, 2)
    f = 1 + 2 * pts[:, 0] - pts[:, 1] + pts[:, 0] * pts[:, 1]
    assert w2 @ f == pytest.approx(1 + 0.2 - 0.2 + 0.02, abs=1e-10)
    w0 = interpolation_weights([0.1, 0.2], pts, 3.0, 0)
    assert np.all(w0 > 0) and w0.sum() == pytest.approx(1.0)


def test_stencil_set_operator_matches_apply():
    cloud, dom = box_cloud(9, jitter=0.2)
    st_ = gm.build_stencils(cloud, dom, 3)
    u = cloud.x[:, 0] ** 2 + cloud.x[:, 1]
    A = st_.operator(st_.deriv[:, 0])
    np.testing.assert_allclose(A @ u, st_.apply(st_.deriv[:, 0], u), atol=1e-12)
    np.testing.assert_allclose(st_.apply(st_.deriv[:, 0], u), 2 * cloud.x[:, 0], atol=1e-9)
