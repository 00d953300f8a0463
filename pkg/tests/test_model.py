import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import trapezoid

from jumpkde.model import (
    CATALOGUE,
    LevyMeasure,
    LyapunovSpec,
    ModelError,
    ModelSpec,
    audit_assumptions,
    check_c4_condition,
    default_audit_grid,
    exponential_moment,
    get_model,
)


def gaussian_exp_moment(rate, s, eps):
    """rate * E[Z^2 exp(eps |Z|)] for Z ~ N(0, s^2), by completing the square."""
    m = eps * s * s
    half = (m * m + s * s) * stats.norm.cdf(m / s) + m * s * stats.norm.pdf(m / s)
    return 2 * rate * math.exp(0.5 * eps * eps * s * s) * half


# -- Levy measures ---------------------------------------------------------


@pytest.mark.parametrize("rate,s,eps", [(1.0, 1.0, 0.0), (0.5, 0.04, 0.5), (2.0, 0.7, 1.3)])
def test_exponential_moment_gaussian(rate, s, eps):
    lev = LevyMeasure.gaussian_compound_poisson(rate, s, eps0=max(eps, 1e-3))
    assert exponential_moment(lev, eps) == pytest.approx(gaussian_exp_moment(rate, s, eps), rel=1e-8)


def test_exponential_moment_no_jumps_is_zero():
    assert exponential_moment(LevyMeasure.none(1), 1.0) == 0.0
    assert LevyMeasure.gaussian_compound_poisson(0.0, 1.0).c4 == 0.0


def test_gaussian_c3_is_sup():
    lev = LevyMeasure.gaussian_compound_poisson(1.5, 0.8, alpha=0.5)
    z = np.linspace(1e-3, 10, 200001)[:, None]
    sup = np.max(lev.density(z) * z[:, 0] ** 1.5)
    assert lev.c3 == pytest.approx(sup, rel=1e-6)
    assert lev.c3 >= sup


def test_two_dimensional_gaussian_density_mass():
    lev = LevyMeasure.gaussian_compound_poisson(2.0, [0.5, 1.0], dim=2)
    z, w = lev.quadrature_rule()
    assert np.sum(w) == pytest.approx(2.0, rel=1e-8)
    assert lev.sample_jumps(np.random.default_rng(0), 7).shape == (7, 2)


def test_compensator_mean_of_shifted_gaussian():
    lev = LevyMeasure.gaussian_compound_poisson(3.0, 1.0, mean=0.5)
    np.testing.assert_allclose(lev.compensator_mean, [1.5])
    assert not lev.symmetric


def test_invalid_levy_parameters():
    with pytest.raises(ModelError):
        LevyMeasure.gaussian_compound_poisson(-1.0)
    with pytest.raises(ModelError):
        LevyMeasure.gaussian_compound_poisson(1.0, 0.0)
    with pytest.raises(ModelError):
        LevyMeasure.tempered_stable(1.0, 2.5, 1.0)


def test_tempered_stable_cutoff_and_c4():
    lev = LevyMeasure.tempered_stable(1.0, 0.5, 2.0)
    assert lev.infinite_activity and lev.cutoff > 0
    # residual variance below the cutoff is the requested 1e-4
    assert 2 * lev.cutoff ** 1.5 / 1.5 == pytest.approx(1e-4, rel=1e-9)
    assert exponential_moment(lev, lev.eps0, radius=np.inf) == pytest.approx(lev.c4, rel=1e-5)
    draws = lev.sample_jumps(np.random.default_rng(1), 2000)
    assert np.all(np.abs(draws) >= lev.cutoff)


def test_jump_sampler_moments():
    lev = LevyMeasure.gaussian_compound_poisson(1.0, 2.0)
    z = lev.sample_jumps(np.random.default_rng(3), 200000)[:, 0]
    assert abs(z.mean()) < 0.03
    assert z.std() == pytest.approx(2.0, rel=0.01)


# -- Lyapunov ----------------------------------------------------------------


def test_lyapunov_is_c2_at_the_seam():
    L = LyapunovSpec.build(0.5, 1.0)
    e = 1e-6
    for x0 in (1.0, -1.0):
        lo, hi = x0 - e * np.sign(x0), x0 + e * np.sign(x0)
        assert float(L(lo)) == pytest.approx(float(L(hi)), rel=1e-5)
    # second derivative from the inside matches eps^2 e^eps
    h = 1e-4
    d2 = (L(1 - 2 * h) - 2 * L(1 - h) + L(1.0)) / h**2
    assert float(d2) == pytest.approx(0.25 * math.exp(0.5), rel=1e-2)
    assert float(L(0.0)) == 1.0
    with pytest.raises(ModelError):
        LyapunovSpec.build(2.0, 1.0)


# -- model spec and audit ------------------------------------------------------


def test_model_spec_validation():
    with pytest.raises(ModelError):
        ModelSpec(3, lambda x: -x, 1.0, 1.0, LevyMeasure.none(1))
    with pytest.raises(ModelError):
        ModelSpec(1, lambda x: -x, 1.0, 1.0, LevyMeasure.none(2))
    with pytest.raises(ModelError):
        ModelSpec(2, lambda x: -x, np.ones((3, 3)), 1.0, LevyMeasure.none(2))
    spec = ModelSpec(2, lambda x: -x, 1.0, 1.0, LevyMeasure.none(2), x0=[1.0, 2.0])
    np.testing.assert_array_equal(spec.initial_states(np.random.default_rng(0), 3), [[1, 2]] * 3)


@pytest.mark.parametrize("model_id", CATALOGUE)
def test_catalogue_models_pass_audit(model_id):
    spec = get_model(model_id)
    grid = default_audit_grid(spec.dim, n=401 if spec.dim == 1 else 61)
    rep = audit_assumptions(spec, grid)
    assert rep.passed, rep.summary()


def test_catalogue_closed_forms_integrate_to_one():
    x = np.linspace(-30, 30, 60001)
    assert trapezoid(get_model("ou_sat_d1").density(x[:, None]), x) == pytest.approx(1.0, rel=1e-9)
    g = np.linspace(-15, 15, 601)
    G1, G2 = np.meshgrid(g, g, indexing="ij")
    vals = get_model("ou_sat_d2").density(np.stack([G1.ravel(), G2.ravel()], -1)).reshape(G1.shape)
    assert trapezoid(trapezoid(vals, g, axis=1), g) == pytest.approx(1.0, rel=1e-6)


def test_unknown_model_id():
    with pytest.raises(KeyError):
        get_model("nope")


def test_expanding_drift_fails_audit():
    spec = ModelSpec(1, lambda x: x, 1.0, 1.0, LevyMeasure.none(1), model_id="repulsive")
    rep = audit_assumptions(spec, default_audit_grid(1))
    assert not rep.passed
    assert {"A1", "A2"} <= set(rep.failed())


def test_heavy_tailed_jumps_fail_exponential_moment():
    cauchy = LevyMeasure.from_density(lambda z: 1 / (np.pi * (1 + np.asarray(z)[..., 0] ** 2)),
                                      c3=1.0, c4=math.inf, intensity=1.0)
    spec = ModelSpec(1, lambda x: -np.tanh(x), 1.0, 1.0, cauchy, model_id="cauchy")
    rep = audit_assumptions(spec, default_audit_grid(1))
    assert "A4" in rep.failed()


def test_c4_condition_threshold():
    gate = 1 / 896
    assert check_c4_condition(1.0, 1.0, 0.99 * gate)
    assert not check_c4_condition(1.0, 1.0, 1.01 * gate)
    assert check_c4_condition(2.0, 1.0, 3.9 * gate)
    with pytest.raises(ModelError):
        check_c4_condition(0.0, 1.0, 1e-4)
    with pytest.raises(ModelError):
        check_c4_condition(1.0, 1.0, 0.0)
