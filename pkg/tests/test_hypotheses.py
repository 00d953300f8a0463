import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from jumpkde.hypotheses import (
    SmoothedExponential,
    build_f0,
    build_family_d1,
    build_family_d2,
    drift_d2,
    drift_difference_profile,
    g_profile,
    kl_bound_terms,
    amplitude_cap,
)
from jumpkde.model import LevyMeasure


@pytest.fixture(scope="module")
def prof():
    return SmoothedExponential()


@pytest.fixture(scope="module")
def base2():
    return build_f0(0.25, 2, np.eye(2))


def family_at(base, T, alpha=0.5, frac=0.5):
    H = (math.log(T) / T) ** alpha
    return build_family_d2(base, None, H, H, amplitude_cap(base, alpha) * math.sqrt(frac), T)


# -- profiles --------------------------------------------------------------


def test_g_profile_pieces():
    x = np.array([0.0, 0.5, 0.75, 1.0, 2.0, -2.0])
    expect = [1.0, 1.0, math.exp(-0.25), math.exp(-1.0), math.exp(-2.0), math.exp(-2.0)]
    np.testing.assert_allclose(g_profile(x), expect)


def test_profile_tail_is_shifted_exponential(prof):
    x = np.linspace(prof.t1, 20, 50)
    np.testing.assert_allclose(prof(x), math.exp(prof.c) * np.exp(-x), rtol=1e-12)
    assert float(prof(0.3)) == 1.0


def test_profile_mass_and_cdf(prof):
    mass = 2 * quad(lambda t: float(prof(t)), 0, 60, points=[prof.t0, prof.t1], epsabs=1e-13)[0]
    assert prof.mass == pytest.approx(mass, rel=1e-10)
    s = np.linspace(-5, 5, 21)
    np.testing.assert_allclose(prof.cdf(s) + prof.sf(s), prof.mass, rtol=1e-10)
    for si in (-3.0, -0.7, 0.2, 0.9):
        ref = quad(lambda t: float(prof(t)), -60, si, points=[-prof.t1, -prof.t0, prof.t0, prof.t1], limit=200)[0]
        assert float(prof.cdf(si)) == pytest.approx(ref, abs=1e-10)


def test_profile_derivatives(prof):
    x = np.linspace(-2, 2, 81)
    e = 1e-6
    np.testing.assert_allclose(prof.d1(x), (prof(x + e) - prof(x - e)) / (2 * e), atol=1e-7)
    np.testing.assert_allclose(prof.d2(x), (prof.d1(x + e) - prof.d1(x - e)) / (2 * e), atol=1e-5)


def test_profile_envelope(prof):
    x = np.linspace(-30, 30, 60001)
    env = np.exp(-np.abs(x))
    ratio = prof(x) / env
    assert ratio.min() >= 1 - 1e-12 and ratio.max() <= 2
    assert np.max(np.abs(prof.d1(x)) / env) <= 5
    assert np.max(np.abs(prof.d2(x)) / env) <= 14


def test_profile_rejects_bad_knots():
    with pytest.raises(ValueError):
        SmoothedExponential(0.8, 0.5)


# -- base densities ----------------------------------------------------------


@pytest.mark.parametrize("eta", [0.1, 0.25, 0.45])
def test_f0_has_unit_mass(eta):
    f = build_f0(eta)
    L = 80 / eta
    assert quad(lambda x: float(f(x)), -L, L, points=[-1 / eta, 0, 1 / eta], limit=400)[0] == pytest.approx(1, rel=1e-9)


def test_f0_two_dimensional_mass():
    aaT = np.array([[1.0, 0.3], [0.3, 2.0]])
    f = build_f0(0.25, 2, aaT)
    inv = np.diag(np.linalg.inv(aaT))
    assert f.kappa == pytest.approx(tuple(0.25 * inv))
    g1 = np.linspace(-300, 300, 6001)
    w = np.full(g1.size, g1[1] - g1[0])
    w[[0, -1]] *= 0.5
    X1, X2 = np.meshgrid(g1, g1, indexing="ij")
    vals = f(np.stack([X1.ravel(), X2.ravel()], -1)).reshape(X1.shape)
    assert w @ vals @ w == pytest.approx(1.0, rel=1e-5)


def test_f0_validation():
    with pytest.raises(ValueError):
        build_f0(0.5)
    with pytest.raises(ValueError):
        build_f0(0.25, 2, np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        build_f0(0.25, 2).density_spec()


# -- families ------------------------------------------------------------------


def test_d1_family_gates():
    base = build_f0(0.25)
    fam = build_family_d1(base, H=0.25, M_T=100)
    assert fam.size == 0 and fam.amplitude == 0.01
    spec = fam.density_spec_f1()
    assert spec.check() == []
    with pytest.raises(ValueError, match="smoothness"):
        build_family_d1(base, H=0.01, M_T=10)
    with pytest.raises(ValueError, match="positivity"):
        build_family_d1(base, x0=60.0, H=0.5, M_T=2.5)


def test_d2_index_set_size(base2):
    fam = family_at(base2, 1e4)
    n = int(math.floor(1 / math.sqrt(fam.H[0])))
    assert fam.size == n * n == 25
    assert fam.J[0] == (1, 1) and fam.J[-1] == (n, n)


def test_d2_holder_gate(base2):
    T = 1e4
    with pytest.raises(ValueError, match="Holder"):
        build_family_d2(base2, None, 0.001, 0.5, 0.0, T)


def test_separation_at_centres(base2):
    fam = family_at(base2, 1e4)
    rate = math.sqrt(math.log(1e4) / 1e4)
    for j in fam.J:
        for k in fam.J:
            if j == k:
                continue
            c = fam.center(j)[None, :]
            gap = abs(float(fam.density(c, j)[0] - fam.density(c, k)[0]))
            assert gap >= 2 * fam.v * rate * (1 - 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99))
def test_perturbation_has_zero_mass_and_support(u1, u2):
    base = build_f0(0.25, 2)
    fam = family_at(base, 1e5)
    j = fam.J[len(fam.J) // 2]
    c = fam.center(j)
    H1, H2 = fam.H
    outside = np.array([[c[0] + (1 + abs(u1)) * H1, c[1] + u2 * H2]])
    assert fam.perturbation(outside, j)[0] == 0.0
    inside = np.array([[c[0] + u1 * H1, c[1] + u2 * H2]])
    assert fam.density(inside, j)[0] > 0


# -- two-dimensional drift -------------------------------------------------------


def _adjoint_oracle(base, aaT, lam, scale, x1, x2, e=1e-4):
    """1/2 aaT : Hess u + lam (E u(x - Y) - u), by finite differences and Gauss-Hermite."""
    u = lambda a, b: base(np.array([[a, b]]))[0]
    hess = np.array([
        [(u(x1 + e, x2) - 2 * u(x1, x2) + u(x1 - e, x2)) / e**2,
         (u(x1 + e, x2 + e) - u(x1 + e, x2 - e) - u(x1 - e, x2 + e) + u(x1 - e, x2 - e)) / (4 * e * e)],
        [0.0, (u(x1, x2 + e) - 2 * u(x1, x2) + u(x1, x2 - e)) / e**2],
    ])
    hess[1, 0] = hess[0, 1]
    t, w = np.polynomial.hermite_e.hermegauss(120)
    w = w / w.sum()
    Y1, Y2 = np.meshgrid(scale * t, scale * t, indexing="ij")
    pts = np.stack([(x1 - Y1).ravel(), (x2 - Y2).ravel()], -1)
    conv = np.sum(np.outer(w, w).ravel() * base(pts))
    return 0.5 * np.sum(aaT * hess) + lam * (conv - u(x1, x2))


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_flux_divergence_is_adjoint_generator(lam):
    aaT = np.array([[1.0, 0.3], [0.3, 1.5]])
    base = build_f0(0.25, 2, aaT)
    lev = LevyMeasure.gaussian_compound_poisson(lam, 1.0, dim=2) if lam else LevyMeasure.none(2)
    drift = drift_d2(base, aaT, np.eye(2), lev)
    e = 1e-4
    for x1, x2 in [(0.3, -1.0), (2.5, 4.0), (-6.0, 0.5)]:
        _, I1p, _ = drift.parts(np.array(x1 + e), np.array(x2))
        _, I1m, _ = drift.parts(np.array(x1 - e), np.array(x2))
        _, _, I2p = drift.parts(np.array(x1), np.array(x2 + e))
        _, _, I2m = drift.parts(np.array(x1), np.array(x2 - e))
        div = (I1p - I1m) / (2 * e) + (I2p - I2m) / (2 * e)
        ref = _adjoint_oracle(base, aaT, lam, 1.0, x1, x2)
        scale = float(base(np.array([[x1, x2]]))[0])
        assert abs(float(div) - ref) < 1e-4 * scale


def test_no_jump_drift_is_half_score(base2):
    drift = drift_d2(base2, np.eye(2), np.eye(2), LevyMeasure.none(2))
    x = np.array([[0.4, -2.0], [3.0, 7.0]])
    e = 1e-6
    for p in x:
        grad = [(base2(p + e * d[None]) - base2(p - e * d[None]))[0] / (2 * e) for d in np.eye(2)]
        np.testing.assert_allclose(drift(p[None])[0], 0.5 * np.array(grad) / base2(p[None])[0], atol=1e-7)


def test_two_dimensional_drift_rejects_unsupported_jumps(base2):
    lev = LevyMeasure.gaussian_compound_poisson(1.0, 1.0, dim=2)
    with pytest.raises(NotImplementedError):
        drift_d2(base2, np.eye(2), np.array([[1.0, 0.5], [0.0, 1.0]]), lev)


# -- KL budget ----------------------------------------------------------------------


def test_kl_terms_within_bounds(base2):
    fam = family_at(base2, 1e4)
    lev = LevyMeasure.gaussian_compound_poisson(1.0, 1.0, dim=2)
    rep = kl_bound_terms(fam, fam.J[7], np.eye(2), np.eye(2), lev)
    assert rep.entropy_ok and rep.girsanov_ok
    assert 0 <= rep.ratio_to_log_JT < 1 / 8


def test_girsanov_term_is_quadratic_in_amplitude(base2):
    lev = LevyMeasure.none(2)
    a = kl_bound_terms(family_at(base2, 1e4, frac=0.5), (2, 2), np.eye(2), np.eye(2), lev)
    b = kl_bound_terms(family_at(base2, 1e4, frac=0.125), (2, 2), np.eye(2), np.eye(2), lev)
    assert a.girsanov / b.girsanov == pytest.approx(4.0, rel=1e-3)


def test_zero_amplitude_gives_zero_kl(base2):
    fam = build_family_d2(base2, None, 0.1, 0.1, 0.0, 1e4)
    rep = kl_bound_terms(fam, (1, 1), np.eye(2), np.eye(2), LevyMeasure.none(2))
    assert rep.kl == 0.0 and rep.girsanov == 0.0


def test_drift_difference_inside_bound(base2):
    fam = family_at(base2, 1e4)
    lev = LevyMeasure.gaussian_compound_poisson(1.0, 1.0, dim=2)
    prof = drift_difference_profile(fam, (2, 3), np.eye(2), np.eye(2), lev, n=41)
    assert prof["inside_max"] <= prof["inside_bound"]
