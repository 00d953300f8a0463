import math

import numpy as np
import pytest
from scipy import stats

from jumpkde.hypotheses import build_f0
from jumpkde.inverse_drift import (
    DensitySpec,
    DriftFunction,
    QuadratureError,
    adjoint_jump_generator,
    adjoint_jump_generator_rule,
    audit_proposition_conditions,
    build_drift,
    drift_numerator,
    roundtrip_invariance,
    stationarity_balance,
)
from jumpkde.model import LevyMeasure
from jumpkde.simulate import SimConfig

# Gaussian target N(0, v) with N(0, s^2) jumps at rate lam and gamma = 1:
# the convolution f * phi_s is N(0, v + s^2), so
#   A f(x)            = lam (N(0, v+s^2)(x) - f(x))
#   int_{-inf}^x A f  = lam (Phi_{v+s^2}(x) - Phi_v(x))
#   b(x) f(x)         = a^2/2 f'(x) + lam (Phi_{v+s^2}(x) - Phi_v(x))
V, S, LAM, A = 0.5, 0.6, 1.3, 0.9


def oracle_adjoint(x):
    return LAM * (stats.norm.pdf(x, scale=math.sqrt(V + S * S)) - stats.norm.pdf(x, scale=math.sqrt(V)))


def oracle_drift(x):
    f = stats.norm.pdf(x, scale=math.sqrt(V))
    jump = LAM * (stats.norm.cdf(x, scale=math.sqrt(V + S * S)) - stats.norm.cdf(x, scale=math.sqrt(V)))
    return (0.5 * A * A * (-x / V) * f + jump) / f


@pytest.fixture(scope="module")
def gauss():
    return DensitySpec.gaussian(V), LevyMeasure.gaussian_compound_poisson(LAM, S)


@pytest.fixture(scope="module")
def f0_setup():
    return build_f0(0.25).density_spec(), LevyMeasure.gaussian_compound_poisson(0.5, 0.04, eps0=0.5)


def test_adjoint_generator_gaussian_oracle(gauss):
    f, lev = gauss
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(adjoint_jump_generator_rule(f, 1.0, lev, x), oracle_adjoint(x), atol=1e-10)
    for xi in (-1.2, 0.0, 2.0):
        assert adjoint_jump_generator(f, 1.0, lev, xi) == pytest.approx(float(oracle_adjoint(xi)), abs=1e-9)


def test_adjoint_generator_reports_quadrature_failure(gauss):
    f, lev = gauss
    with pytest.raises(QuadratureError):
        adjoint_jump_generator(f, 1.0, lev, 0.3, tol=1e-300)


def test_drift_gaussian_with_jumps_oracle(gauss):
    f, lev = gauss
    x = np.linspace(-4, 4, 81)
    d = build_drift(f, A, 1.0, lev, grid=x, audit=False)
    np.testing.assert_allclose(d.values, oracle_drift(x), atol=1e-9)


def test_no_jump_gaussian_drift_is_linear():
    f = DensitySpec.gaussian(0.5)
    x = np.round(np.arange(-800, 801) * 0.01, 10)
    d = build_drift(f, 1.0, 1.0, LevyMeasure.none(1), grid=x, audit=False)
    assert np.max(np.abs(d.values + x)) < 1e-8


def test_seam_and_balance_for_f0(f0_setup):
    f, lev = f0_setup
    left = float(drift_numerator(f, 1.0, 1.0, lev, np.array(0.0), "left"))
    right = float(drift_numerator(f, 1.0, 1.0, lev, np.array(0.0), "right"))
    assert abs(left - right) < 1e-12
    assert abs(stationarity_balance(f, 1.0, 1.0, lev)) < 1e-8


def test_f0_density_spec_is_consistent(f0_setup):
    f, _ = f0_setup
    assert f.check() == []


def test_f0_audit_constants(f0_setup):
    f, lev = f0_setup
    rep = audit_proposition_conditions(f, 1.0, 1.0, lev)
    assert rep.passed, rep.summary()
    eta = 0.25
    expect = dict(c1=4.0, c2=4 / eta, R=1 / eta, eps_tilde=eta, c3=28 * eta, c4=28.0)
    for k, v in expect.items():
        assert rep.constants[k] == pytest.approx(v, rel=1e-12)


def test_gaussian_fails_exponential_envelope(f0_setup):
    f0, lev = f0_setup
    g = DensitySpec.gaussian(0.5, **f0.constants)
    rep = audit_proposition_conditions(g, 1.0, 1.0, lev)
    assert "2" in rep.failed()
    with pytest.raises(ValueError, match="conditions not satisfied"):
        build_drift(g, 1.0, 1.0, lev)


def test_missing_constants_fail_audit():
    rep = audit_proposition_conditions(DensitySpec.gaussian(1.0), 1.0, 1.0, LevyMeasure.none(1))
    assert not rep.passed and rep.failed() == ["constants"]


def test_heavy_jump_moment_closes_gate(f0_setup):
    f, _ = f0_setup
    heavy = LevyMeasure.gaussian_compound_poisson(1.0, 1.0, eps0=0.5)
    rep = audit_proposition_conditions(f, 1.0, 1.0, heavy)
    assert "4" in rep.failed()


def test_build_drift_validation(f0_setup):
    f, lev = f0_setup
    with pytest.raises(ValueError):
        build_drift(f, 0.0, 1.0, lev)
    with pytest.raises(ValueError):
        build_drift(f, 1.0, 1.0, lev, grid=np.array([1.0, 0.0]))


def test_f0_drift_is_bounded_and_restoring(f0_setup):
    f, lev = f0_setup
    d = build_drift(f, 1.0, 1.0, lev)
    assert d.sup_norm < 0.2
    far = np.abs(d.grid) > 5
    assert np.all(np.sign(d.values[far]) == -np.sign(d.grid[far]))
    c1, _ = d.a2_fit(5.0)
    assert c1 > 0


def test_drift_csv_roundtrip(tmp_path):
    d = DriftFunction(np.array([-1.0, 0.0, 1.0]), np.array([1 / 3, 0.0, -math.pi]))
    p = tmp_path / "b.csv"
    d.to_csv(str(p))
    assert p.read_text().splitlines()[0] == "x,b"
    e = DriftFunction.from_csv(str(p))
    np.testing.assert_array_equal(e.values, d.values)
    assert e(np.array(0.5)) == pytest.approx(-math.pi / 2)


def test_from_callables_recovers_gaussian_cdf():
    g = DensitySpec.gaussian(2.0)
    t = DensitySpec.from_callables(g.f, g.f1, g.f2, -20, 20)
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(t.cdf(x), g.cdf(x), atol=1e-10)
    np.testing.assert_allclose(t.sf(x), g.sf(x), atol=1e-10)


def test_sampler_matches_density():
    g = DensitySpec.gaussian(2.0)
    z = g.sample(np.random.default_rng(0), 20000)
    assert stats.kstest(z, stats.norm(scale=math.sqrt(2)).cdf).pvalue > 0.01


def test_roundtrip_small_gaussian():
    f = DensitySpec.gaussian(0.5)
    b = build_drift(f, 1.0, 1.0, LevyMeasure.none(1), grid=np.linspace(-10, 10, 2001), audit=False)
    rep = roundtrip_invariance(f, b, 1.0, 1.0, LevyMeasure.none(1), SimConfig(T=200.0, dt=0.005, burn_in=0.0, seed=1),
                               points=np.linspace(-2, 2, 9), n_rep=20)
    assert rep.within, (rep.sup_error, rep.se.max())
