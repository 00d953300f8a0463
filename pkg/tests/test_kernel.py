import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings, strategies as st

from jumpkde.kernel import (
    EstimateConfig,
    build_bump,
    build_kernel,
    default_bandwidth,
    estimate_density,
)
from jumpkde.simulate import PathRecord


def _gl_moment(kern, i, n=64):
    t, w = np.polynomial.legendre.leggauss(n)
    return float(np.sum(w * t**i * kern(t)))


# -- oracles ---------------------------------------------------------------


def test_order_one_kernel_is_epanechnikov():
    # 3/4 (1 - x^2) is the unique kernel in the family with one coefficient
    k = build_kernel(1)
    x = np.linspace(-1, 1, 41)
    np.testing.assert_allclose(k(x), 0.75 * (1 - x**2), atol=1e-15)


def test_order_three_kernel_closed_form():
    # (1 - x^2)(c0 + c1 x^2) with unit mass and vanishing second moment:
    # 4/3 c0 + 4/15 c1 = 1 and 4/15 c0 + 4/35 c1 = 0 give c0 = 45/32, c1 = -105/32
    k = build_kernel(3)
    np.testing.assert_allclose(k.coeffs, [45 / 32, -105 / 32], rtol=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5, 7])
def test_moments_vanish(order):
    k = build_kernel(order)
    assert abs(_gl_moment(k, 0) - 1) < 1e-12
    for i in range(1, order + 1):
        assert abs(_gl_moment(k, i)) < 1e-12
    assert abs(k.moment(0) - 1) < 1e-12


def test_kernel_support_and_symmetry():
    k = build_kernel(5)
    assert k(np.array([1.0, -1.0, 1.5, -7.0])).tolist() == [0.0, 0.0, 0.0, 0.0]
    x = np.linspace(0, 1, 11)
    np.testing.assert_array_equal(k(x), k(-x))


def test_kernel_rejects_order_zero():
    with pytest.raises(ValueError):
        build_kernel(0)


def test_norms_of_epanechnikov():
    k = build_kernel(1)
    assert k.sup_norm == pytest.approx(0.75)
    assert k.l2_norm_sq == pytest.approx(0.6, rel=1e-12)


# -- bump ------------------------------------------------------------------


def test_bump_has_zero_mass_and_unit_peak():
    b = build_bump()
    t, w = np.polynomial.legendre.leggauss(400)
    assert abs(np.sum(w * b(t))) < 1e-12
    assert b(np.array(0.0)) == pytest.approx(1.0)
    assert b.sup_norm == pytest.approx(1.0)
    assert float(b.integral(1.0)) == 0.0 and float(b.integral(-1.0)) == 0.0


def test_bump_derivatives_match_finite_differences():
    b = build_bump()
    x = np.linspace(-0.9, 0.9, 19)
    e = 1e-5
    np.testing.assert_allclose(b.d1(x), (b(x + e) - b(x - e)) / (2 * e), atol=1e-6)
    np.testing.assert_allclose(b.d2(x), (b.d1(x + e) - b.d1(x - e)) / (2 * e), atol=1e-5)


def test_bump_antiderivative():
    b = build_bump()
    s = np.linspace(-0.95, 0.95, 9)
    t, w = np.polynomial.legendre.leggauss(80)
    ref = [0.5 * (si + 1) * np.sum(w * b(0.5 * (si + 1) * t + 0.5 * (si - 1))) for si in s]
    np.testing.assert_allclose(b.integral(s), ref, atol=1e-9)


# -- bandwidth and estimator -------------------------------------------------


def test_default_bandwidth():
    assert default_bandwidth(400.0, 1)[0] == pytest.approx(0.05)
    T = 1000.0
    np.testing.assert_allclose(default_bandwidth(T, 2), [math.sqrt(math.log(T) / T)] * 2)
    with pytest.raises(ValueError):
        default_bandwidth(0.5, 1)
    with pytest.raises(ValueError):
        default_bandwidth(10.0, 3)


def test_estimate_on_uniform_sweep():
    # X_t = t/T sweeps [0, 1] at constant speed; the occupation density is 1
    T = 100.0
    t = np.linspace(0, T, 200001)
    path = PathRecord(t, (t / T)[:, None])
    est = estimate_density(path, EstimateConfig(np.array([[0.3], [0.5], [0.7]]), 1, 0.05))
    np.testing.assert_allclose(est.values, 1.0, atol=1e-6)


def test_estimate_constant_path_is_scaled_kernel():
    t = np.linspace(0, 50, 5001)
    path = PathRecord(t, np.zeros((t.size, 1)))
    pts = np.array([[0.0], [0.05], [0.2]])
    h = 0.1
    est = estimate_density(path, EstimateConfig(pts, 1, h))
    np.testing.assert_allclose(est.values, build_kernel(1)(pts[:, 0] / h) / h, rtol=1e-12)


def test_estimate_rejects_bad_paths():
    t = np.linspace(0, 1, 3)
    with pytest.raises(ValueError):
        estimate_density(PathRecord(t[:1], np.zeros((1, 1))), EstimateConfig(np.zeros((1, 1))))
    with pytest.raises(ValueError):
        estimate_density(PathRecord(t, np.array([[0.0], [np.nan], [0.0]])), EstimateConfig(np.zeros((1, 1)), 1, 0.1))
    with pytest.raises(ValueError):
        EstimateConfig(np.zeros((1, 1)), 1, -0.1).resolved_bandwidth(10, 1)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=5, max_size=40),
    st.sampled_from([1, 3]),
    st.floats(0.2, 1.0),
)
def test_estimate_integrates_to_one(xs, order, h):
    # any piecewise-constant path: the estimate integrates to 1 over the line
    xs = np.repeat(np.asarray(xs), 2)
    t = np.arange(xs.size, dtype=float)
    grid = np.linspace(-5, 5, 4001)[:, None]
    est = estimate_density(PathRecord(t, xs[:, None]), EstimateConfig(grid, order, h))
    assert trapezoid(est.values, grid[:, 0]) == pytest.approx(1.0, abs=1e-4)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_two_dimensional_estimate_factorises(x1, x2):
    t = np.linspace(0, 10, 11)
    x = np.tile([0.1, -0.2], (t.size, 1))
    h = np.array([0.5, 0.7])
    est = estimate_density(PathRecord(t, x), EstimateConfig(np.array([[x1, x2]]), 1, h))
    k = build_kernel(1)
    ref = k((x1 - 0.1) / h[0]) * k((x2 + 0.2) / h[1]) / np.prod(h)
    assert est.values[0] == pytest.approx(float(ref), abs=1e-12)
