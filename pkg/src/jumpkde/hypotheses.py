"""Hypothesis families for lower bounds and their Kullback-Leibler budgets.

Building blocks
---------------
* ``g``: the piecewise profile equal to 1 on ``|x| <= 1/2``, to
  ``exp(-4(|x|-1/2)^2)`` on ``1/2 < |x| < 1`` and to ``exp(-|x|)`` beyond.
* :class:`SmoothedExponential`: a C-infinity profile with the same tail
  envelope, ``f(x) = exp(-phi(|x|))`` where ``phi' `` is a smooth step from 0
  to 1.  It equals ``e^c e^{-|x|}`` for ``|x| >= t1``.
* :class:`BaseDensity`: ``f_0`` built from the profile, in one dimension
  ``c f(eta|y|)`` and in two dimensions a product with axis rates
  ``eta (aa^T)^{-1}_{ii}``.
* Families: ``f_1 = f_0 + (1/M_T) bump((x - x0)/H)`` in one dimension and
  ``f_j = f_0 + 2 v sqrt(log T / T) bump(.)bump(.)`` over a grid ``J_T`` in two.

Two-dimensional drifts
----------------------
For constant ``aa^T``, diagonal ``gamma`` and product Gaussian jumps
``F = lam N(m, diag(s^2))`` a density ``u(x) = u1(x1) u2(x2)`` is invariant
for the drift ``b^i = I^i[u] / u`` with the flux

    I^1[u] = 1/2 sum_m (aa^T)_{1m} d_m u + lam (u2 (E U1(x1-Y1) - U1(x1)) + E[Y1] u),
    I^2[u] = 1/2 sum_m (aa^T)_{2m} d_m u + lam (E u1(x1-Y1) (E U2(x2-Y2) - U2(x2)) + E[Y2] u),

where ``Y = gamma Z`` and ``U_i`` is a primitive of ``u_i``.  Its divergence
is the adjoint generator applied to ``u``; the flux is linear in ``u``, so
sums of product terms are handled term by term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .inverse_drift import DensitySpec
from .kernel import BumpSpec, build_bump
from .model import LevyMeasure

__all__ = [
    "g_profile",
    "SmoothedExponential",
    "BaseDensity",
    "HypothesisFamily",
    "KLReport",
    "build_f0",
    "build_family_d1",
    "build_family_d2",
    "drift_d2",
    "drift_difference_d2",
    "drift_difference_profile",
    "kl_bound_terms",
    "kl_table",
    "amplitude_cap",
]


def g_profile(x):
    """Piecewise (only C^1) profile with exponential tails."""
    r = np.abs(np.asarray(x, float))
    return np.where(r <= 0.5, 1.0, np.where(r < 1.0, np.exp(-4.0 * (r - 0.5) ** 2), np.exp(-r)))


# ---------------------------------------------------------------------------
# smooth profile
# ---------------------------------------------------------------------------


class SmoothedExponential:
    """``f(x) = exp(-phi(|x|))`` with ``phi' = sigma`` a smooth step on [t0, t1].

    The envelope ``e^{-|x|} <= f(x) <= e^c e^{-|x|}`` holds with
    ``c = (t0 + t1)/2``, and ``f'' = (sigma^2 - sigma') f``.
    """

    def __init__(self, t0: float = 0.5, t1: float = 0.85, n_table: int = 4001):
        if not 0 <= t0 < t1:
            raise ValueError("need 0 <= t0 < t1")
        self.t0, self.t1 = float(t0), float(t1)
        self.c = 0.5 * (self.t0 + self.t1)
        ts = np.linspace(self.t0, self.t1, n_table)
        self._phi = CubicHermiteSpline(ts, _cumulative_gl(self.sigma, ts), self.sigma(ts))
        self.edge = max(1.0, self.t1)
        xs = np.linspace(-self.edge, self.edge, n_table)
        left = math.exp(self.c - self.edge)
        self._cdf_inner = CubicHermiteSpline(xs, left + _cumulative_gl(self, xs), self(xs))
        self.mass = float(2 * left + self._cdf_inner(self.edge) - left)

    def sigma(self, t):
        t = np.asarray(t, float)
        w = self.t1 - self.t0
        s = np.clip((t - self.t0) / w, 1e-300, 1 - 1e-16)
        with np.errstate(over="ignore", divide="ignore"):
            val = 1.0 / (1.0 + np.exp(1.0 / s - 1.0 / (1.0 - s)))
        return np.where(t <= self.t0, 0.0, np.where(t >= self.t1, 1.0, val))

    def dsigma(self, t):
        t = np.asarray(t, float)
        w = self.t1 - self.t0
        inside = (t > self.t0) & (t < self.t1)
        s = np.where(inside, (t - self.t0) / w, 0.5)
        sg = self.sigma(t)
        val = sg * (1 - sg) * (1 / s**2 + 1 / (1 - s) ** 2) / w
        return np.where(inside, val, 0.0)

    def phi(self, t):
        t = np.asarray(t, float)
        mid = self._phi(np.clip(t, self.t0, self.t1))
        return np.where(t <= self.t0, 0.0, np.where(t >= self.t1, t - self.c, mid))

    def __call__(self, x):
        return np.exp(-self.phi(np.abs(np.asarray(x, float))))

    def d1(self, x):
        x = np.asarray(x, float)
        return -self.sigma(np.abs(x)) * np.sign(x) * self(x)

    def d2(self, x):
        r = np.abs(np.asarray(x, float))
        return (self.sigma(r) ** 2 - self.dsigma(r)) * self(x)

    def cdf(self, s):
        """``int_{-inf}^s f``, closed form in the tails."""
        s = np.asarray(s, float)
        e = self.edge
        lo = np.exp(self.c + np.minimum(s, -e))
        hi = self.mass - np.exp(self.c - np.maximum(s, e))
        return np.where(s <= -e, lo, np.where(s >= e, hi, self._cdf_inner(np.clip(s, -e, e))))

    def sf(self, s):
        return self.cdf(-np.asarray(s, float))


def _cumulative_gl(fn, xs, order=10):
    t, w = np.polynomial.legendre.leggauss(order)
    a, b = xs[:-1, None], xs[1:, None]
    pieces = np.sum(0.5 * (b - a) * w * fn(0.5 * (b - a) * t + 0.5 * (a + b)), axis=1)
    return np.concatenate([[0.0], np.cumsum(pieces)])


# ---------------------------------------------------------------------------
# one-dimensional factors and the jump laws they are convolved with
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AxisJump:
    """Law of one coordinate of ``gamma Z`` for product Gaussian jumps."""

    loc: float
    scale: float

    @cached_property
    def gh(self):
        t, w = np.polynomial.hermite.hermgauss(48)
        return self.loc + math.sqrt(2) * self.scale * t, w / math.sqrt(math.pi)

    def pdf(self, y):
        return np.exp(-0.5 * ((y - self.loc) / self.scale) ** 2) / (math.sqrt(2 * math.pi) * self.scale)


class ExpFactor:
    """``u(x) = f(kappa x)`` for the smooth profile ``f``."""

    def __init__(self, kappa: float, prof: SmoothedExponential):
        self.kappa, self.prof = float(kappa), prof

    def val(self, x):
        return self.prof(self.kappa * x)

    def d1(self, x):
        return self.kappa * self.prof.d1(self.kappa * x)

    def _prim(self, x):
        return self.prof.cdf(self.kappa * x) / self.kappa

    def _sprim(self, x):
        return self.prof.sf(self.kappa * x) / self.kappa

    def conv(self, x, law: AxisJump):
        y, w = law.gh
        return np.sum(w * self.val(np.asarray(x)[..., None] - y), axis=-1)

    def conv_prim_diff(self, x, law: AxisJump):
        """``E U(x - Y) - U(x)``; the right half uses the survival primitive."""
        x = np.asarray(x, float)
        y, w = law.gh
        xx = x[..., None]
        left = np.sum(w * self._prim(xx - y), axis=-1) - self._prim(x)
        right = -(np.sum(w * self._sprim(xx - y), axis=-1) - self._sprim(x))
        return np.where(x < 0, left, right)


class BumpFactor:
    """``u(x) = bump((x - center)/H)``, with zero mass."""

    _t, _w = np.polynomial.legendre.leggauss(24)

    def __init__(self, center: float, H: float, bump: BumpSpec):
        self.center, self.H, self.bump = float(center), float(H), bump

    def val(self, x):
        return self.bump((np.asarray(x, float) - self.center) / self.H)

    def d1(self, x):
        return self.bump.d1((np.asarray(x, float) - self.center) / self.H) / self.H

    def prim(self, x):
        return self.H * self.bump.integral((np.asarray(x, float) - self.center) / self.H)

    def _support_rule(self, panels=4):
        edges = np.linspace(self.center - self.H, self.center + self.H, panels + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        s = (0.5 * (hi - lo) * self._t + 0.5 * (hi + lo)).ravel()
        ws = (0.5 * (hi - lo) * self._w).ravel()
        return s, ws

    def _expect(self, fn, x, law: AxisJump):
        x = np.asarray(x, float)
        if law.scale < 0.25 * self.H:
            y, w = law.gh
            return np.sum(w * fn(x[..., None] - y), axis=-1)
        # E fn(x - Y) = int fn(s) p_Y(x - s) ds over the support of fn
        s, ws = self._support_rule()
        return np.sum(ws * fn(s) * law.pdf(x[..., None] - s), axis=-1)

    def conv(self, x, law: AxisJump):
        return self._expect(self.val, x, law)

    def conv_prim_diff(self, x, law: AxisJump):
        return self._expect(self.prim, x, law) - self.prim(x)


# ---------------------------------------------------------------------------
# base density
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BaseDensity:
    """``f_0`` in dimension 1 or 2.

    Attributes
    ----------
    eta : float
    c_eta : float
        Normalising constant.
    kappa : tuple
        Axis decay rates: ``(eta,)`` in d=1, ``eta (aa^T)^{-1}_{ii}`` in d=2.
    k : float
        ``max_i (aa^T)^{-1}_{ii}`` (1 in d=1).
    """

    eta: float
    dim: int
    c_eta: float
    kappa: tuple
    k: float
    aaT: np.ndarray
    profile: SmoothedExponential

    def __call__(self, x):
        x = np.asarray(x, float)
        if self.dim == 1:
            return self.c_eta * self.profile(self.eta * x)
        x = x.reshape(-1, 2)
        return self.c_eta * self.profile(self.kappa[0] * x[:, 0]) * self.profile(self.kappa[1] * x[:, 1])

    def factors(self):
        return [ExpFactor(kp, self.profile) for kp in self.kappa]

    def density_spec(self) -> DensitySpec:
        """One-dimensional ``f_0`` with its sufficient-condition constants."""
        if self.dim != 1:
            raise ValueError("density_spec is one-dimensional")
        e, c, p = self.eta, self.c_eta, self.profile
        consts = dict(c1=4.0, eps=e, c2=4.0 / e, R=1.0 / e, eps_tilde=e, c3=28.0 * e, c4=28.0)
        return DensitySpec(
            f=lambda x: c * p(e * np.asarray(x, float)),
            f1=lambda x: c * e * p.d1(e * np.asarray(x, float)),
            f2=lambda x: c * e * e * p.d2(e * np.asarray(x, float)),
            cdf=lambda x: c / e * p.cdf(e * np.asarray(x, float)),
            sf=lambda x: c / e * p.sf(e * np.asarray(x, float)),
            constants=consts,
            scale=1.0 / e,
            label=f"f0(eta={e:g})",
            breaks=tuple(sorted(v / e for t in (p.t0, p.t1) for v in (-t, t))),
        )


def _envelope_violation(prof: SmoothedExponential, grid: np.ndarray):
    env = np.exp(-np.abs(grid))
    for name, vals, lo, hi in (
        ("f", prof(grid), 0.5, 2.0),
        ("f'", np.abs(prof.d1(grid)), None, 5.0),
        ("f''", np.abs(prof.d2(grid)), None, 14.0),
    ):
        bad = vals > hi * env
        if lo is not None:
            bad |= vals < lo * env
        if bad.any():
            return name, float(grid[np.argmax(bad)])
    return None


def build_f0(eta: float, dim: int = 1, aaT=None, profile: Optional[SmoothedExponential] = None) -> BaseDensity:
    """Base density with rate ``eta`` in (0, 1/2).

    Raises
    ------
    ValueError
        Bad ``eta``, non-positive-definite ``aaT``, or an envelope violation
        of the smooth profile (the message names the offending point).
    """
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    prof = SmoothedExponential() if profile is None else profile
    bad = _envelope_violation(prof, np.linspace(-30, 30, 60001))
    if bad is not None:
        raise ValueError(f"envelope violated for {bad[0]} at x={bad[1]:.4g}")
    if dim == 1:
        return BaseDensity(eta, 1, eta / prof.mass, (eta,), 1.0, np.eye(1), prof)
    if dim != 2:
        raise ValueError("dim must be 1 or 2")
    aaT = np.eye(2) if aaT is None else np.asarray(aaT, float)
    if aaT.shape != (2, 2) or not np.allclose(aaT, aaT.T) or np.min(np.linalg.eigvalsh(aaT)) <= 0:
        raise ValueError("aaT must be symmetric positive definite")
    inv_diag = np.diag(np.linalg.inv(aaT))
    kappa = tuple(float(eta * v) for v in inv_diag)
    c_eta = kappa[0] * kappa[1] / prof.mass**2
    return BaseDensity(eta, 2, c_eta, kappa, float(np.max(inv_diag)), aaT, prof)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HypothesisFamily:
    """Perturbations of ``f_0`` by zero-mass bumps.

    In d=1 the family is ``{f_0, f_1}`` with ``f_1 = f_0 + (1/M_T) bump((x-x0)/H)``.
    In d=2 it is ``{f_j, j in J_T}`` with bumps centred at ``(2 j1 H1, 2 j2 H2)``.
    """

    base: BaseDensity
    bump: BumpSpec
    dim: int
    amplitude: float
    H: tuple
    x0: float = 0.0
    M_T: float = float("nan")
    v: float = float("nan")
    T: float = float("nan")
    J: tuple = ()

    @property
    def size(self) -> int:
        return len(self.J)

    def center(self, j) -> np.ndarray:
        return np.array([2 * j[0] * self.H[0], 2 * j[1] * self.H[1]])

    def perturbation(self, x, j=None):
        """``f_j - f_0`` at points ``x``."""
        x = np.asarray(x, float)
        if self.dim == 1:
            return self.amplitude * self.bump((x - self.x0) / self.H[0])
        x = x.reshape(-1, 2)
        c = self.center(j)
        return self.amplitude * self.bump((x[:, 0] - c[0]) / self.H[0]) * self.bump((x[:, 1] - c[1]) / self.H[1])

    def density(self, x, j=None):
        return self.base(x) + self.perturbation(x, j)

    def girsanov_budget(self, T: float) -> float:
        """``T / (M_T^2 H)`` (equal to ``1/H`` when ``M_T = sqrt(T)``)."""
        return T / (self.M_T**2 * self.H[0])

    def density_spec_f1(self) -> DensitySpec:
        """``f_1`` as a :class:`DensitySpec` (d=1), e.g. for drift inversion."""
        if self.dim != 1:
            raise ValueError("one-dimensional families only")
        f0 = self.base.density_spec()
        A, H, x0, bump = self.amplitude, self.H[0], self.x0, self.bump
        u = lambda x: (np.asarray(x, float) - x0) / H
        return DensitySpec(
            f=lambda x: f0.f(x) + A * bump(u(x)),
            f1=lambda x: f0.f1(x) + A / H * bump.d1(u(x)),
            f2=lambda x: f0.f2(x) + A / H**2 * bump.d2(u(x)),
            cdf=lambda x: f0.cdf(x) + A * H * bump.integral(u(x)),
            sf=lambda x: f0.sf(x) - A * H * bump.integral(u(x)),
            constants=dict(f0.constants),
            scale=f0.scale,
            label=f"f1(x0={x0:g}, H={H:g}, M_T={self.M_T:g})",
            breaks=tuple(sorted(f0.breaks + (x0 - H, x0 + H))),
        )


def build_family_d1(
    base: BaseDensity,
    bump: Optional[BumpSpec] = None,
    x0: float = 0.0,
    H: float = 0.25,
    M_T: float = 100.0,
    eps_holder: float = 1.0,
    beta: float = 1.0,
) -> HypothesisFamily:
    """Two-hypothesis family ``{f_0, f_1}``.

    Raises
    ------
    ValueError
        If ``1/M_T > eps_holder H^beta`` (smoothness gate) or the bump would
        make ``f_1`` non-positive.
    """
    if base.dim != 1:
        raise ValueError("base density must be one-dimensional")
    bump = build_bump() if bump is None else bump
    if not 0 < H or not M_T > 0:
        raise ValueError("H and M_T must be positive")
    if 1.0 / M_T > eps_holder * H**beta * (1 + 1e-12):
        raise ValueError(f"smoothness gate violated: 1/M_T = {1 / M_T:.4g} > eps H^beta = {eps_holder * H**beta:.4g}")
    box = np.linspace(x0 - H, x0 + H, 201)
    if bump.sup_norm / M_T >= float(np.min(base(box))):
        raise ValueError("positivity gate violated: bump amplitude exceeds min f_0 on its support")
    return HypothesisFamily(base, bump, 1, 1.0 / M_T, (float(H),), x0=float(x0), M_T=float(M_T))


def build_family_d2(
    base: BaseDensity,
    bump: Optional[BumpSpec],
    H1: float,
    H2: float,
    v: float,
    T: float,
    eps_holder: float = 1.0,
    beta: Sequence[float] = (1.0, 1.0),
) -> HypothesisFamily:
    """Multiple-hypothesis family on ``J_T = {1..floor(1/sqrt(H1))} x {1..floor(1/sqrt(H2))}``.

    Raises
    ------
    ValueError
        If ``H_i`` is outside (0, 1), the Holder gate
        ``sqrt(log T / T) <= eps H_i^beta_i`` fails, or the amplitude
        ``2 v sqrt(log T / T)`` is not below ``min f_0`` on some bump box.
    """
    if base.dim != 2:
        raise ValueError("base density must be two-dimensional")
    bump = build_bump() if bump is None else bump
    if not (0 < H1 < 1 and 0 < H2 < 1):
        raise ValueError("H1 and H2 must lie in (0, 1)")
    if v < 0 or T <= 1:
        raise ValueError("need v >= 0 and T > 1")
    rate = math.sqrt(math.log(T) / T)
    for i, (H, b) in enumerate(zip((H1, H2), beta)):
        if rate > eps_holder * H**b * (1 + 1e-12):
            raise ValueError(f"Holder gate violated on axis {i + 1}: sqrt(log T/T) = {rate:.4g} > eps H^beta = {eps_holder * H**b:.4g}")
    n1, n2 = int(math.floor(1 / math.sqrt(H1) + 1e-12)), int(math.floor(1 / math.sqrt(H2) + 1e-12))
    J = tuple((j1, j2) for j1 in range(1, n1 + 1) for j2 in range(1, n2 + 1))
    amp = 2 * v * rate
    if amp > 0:
        # f_0 is decreasing in |x_i|, so its box minimum sits at the far corner
        corner = np.array([[(2 * n1 + 1) * H1, (2 * n2 + 1) * H2]])
        if amp * bump.sup_norm**2 >= float(base(corner)[0]):
            raise ValueError("positivity gate violated: amplitude exceeds min f_0 on a bump box")
    return HypothesisFamily(base, bump, 2, amp, (float(H1), float(H2)), v=float(v), T=float(T), J=J)


def amplitude_cap(base: BaseDensity, alpha: float) -> float:
    """``v^2`` cap ``c_eta^2 alpha / (1024 k^2 e^{8 eta k})`` (returns ``v``)."""
    return math.sqrt(base.c_eta**2 * alpha / (1024 * base.k**2 * math.exp(8 * base.eta * base.k)))


# ---------------------------------------------------------------------------
# two-dimensional drifts
# ---------------------------------------------------------------------------


def _jump_laws(gamma, levy: Optional[LevyMeasure]):
    gamma = np.asarray(gamma, float)
    if gamma.shape != (2, 2):
        raise ValueError("gamma must be a 2x2 matrix")
    if levy is None or levy.kind == "none" or levy.intensity == 0:
        return 0.0, None
    if abs(gamma[0, 1]) > 0 or abs(gamma[1, 0]) > 0:
        raise NotImplementedError("two-dimensional drifts need a diagonal jump coefficient")
    if levy.gauss_scale is None or levy.dim != 2:
        raise NotImplementedError("two-dimensional drifts need product Gaussian compound Poisson jumps")
    if not np.isfinite(levy.intensity):
        raise ValueError("finite jump intensity required")
    laws = tuple(AxisJump(float(gamma[i, i] * levy.gauss_mean[i]), float(abs(gamma[i, i]) * levy.gauss_scale[i]))
                 for i in range(2))
    return float(levy.intensity), laws


def _flux(u1, u2, coef, x1, x2, aaT, lam, laws):
    """Value and flux ``(I^1, I^2)`` of ``coef u1(x1) u2(x2)`` (broadcasting)."""
    v1, v2 = u1.val(x1), u2.val(x2)
    d1, d2 = u1.d1(x1), u2.d1(x2)
    I1 = 0.5 * (aaT[0, 0] * d1 * v2 + aaT[0, 1] * v1 * d2)
    I2 = 0.5 * (aaT[1, 0] * d1 * v2 + aaT[1, 1] * v1 * d2)
    if lam > 0:
        l1, l2 = laws
        I1 = I1 + lam * (v2 * u1.conv_prim_diff(x1, l1) + l1.loc * v1 * v2)
        I2 = I2 + lam * (u1.conv(x1, l1) * u2.conv_prim_diff(x2, l2) + l2.loc * v1 * v2)
    return coef * v1 * v2, coef * I1, coef * I2


class Drift2D:
    """Drift making a sum of product densities invariant; ``__call__`` on (n, 2) points."""

    def __init__(self, terms, aaT, lam, laws):
        self.terms, self.aaT, self.lam, self.laws = terms, np.asarray(aaT, float), lam, laws

    def parts(self, x1, x2):
        val, I1, I2 = 0.0, 0.0, 0.0
        for u1, u2, c in self.terms:
            v, a, b = _flux(u1, u2, c, x1, x2, self.aaT, self.lam, self.laws)
            val, I1, I2 = val + v, I1 + a, I2 + b
        return val, I1, I2

    def on_grid(self, x1, x2):
        """Drift on the tensor grid ``x1 x x2``; shape ``(n1, n2, 2)``."""
        val, I1, I2 = self.parts(np.asarray(x1, float)[:, None], np.asarray(x2, float)[None, :])
        return np.stack([I1 / val, I2 / val], axis=-1)

    def __call__(self, x):
        x = np.asarray(x, float).reshape(-1, 2)
        val, I1, I2 = self.parts(x[:, 0], x[:, 1])
        return np.stack([I1 / val, I2 / val], axis=-1)


def drift_d2(base: BaseDensity, aaT, gamma, levy: Optional[LevyMeasure]) -> Drift2D:
    """Drift ``b_0`` whose invariant density is the two-dimensional ``f_0``."""
    if base.dim != 2:
        raise ValueError("two-dimensional base density required")
    lam, laws = _jump_laws(gamma, levy)
    u1, u2 = base.factors()
    return Drift2D([(u1, u2, base.c_eta)], aaT, lam, laws)


class DriftDifference:
    """``b_j - b_0 = (I[d_j] - d_j b_0) / f_j`` with ``d_j = f_j - f_0``."""

    def __init__(self, family: HypothesisFamily, j, aaT, gamma, levy):
        self.family, self.j = family, tuple(j)
        self.aaT = np.asarray(aaT, float)
        self.lam, self.laws = _jump_laws(gamma, levy)
        u1, u2 = family.base.factors()
        c = family.center(j)
        self.b0 = Drift2D([(u1, u2, family.base.c_eta)], aaT, self.lam, self.laws)
        self.d = Drift2D([(BumpFactor(c[0], family.H[0], family.bump),
                           BumpFactor(c[1], family.H[1], family.bump), family.amplitude)],
                         aaT, self.lam, self.laws)

    def _eval(self, x1, x2):
        f0, J1, J2 = self.b0.parts(x1, x2)
        dv, D1, D2 = self.d.parts(x1, x2)
        fj = f0 + dv
        return np.stack([(D1 - dv * J1 / f0) / fj, (D2 - dv * J2 / f0) / fj], axis=-1), f0, fj

    def on_grid(self, x1, x2):
        out, _, _ = self._eval(np.asarray(x1, float)[:, None], np.asarray(x2, float)[None, :])
        return out

    def __call__(self, x):
        x = np.asarray(x, float).reshape(-1, 2)
        out, _, _ = self._eval(x[:, 0], x[:, 1])
        return out


def drift_difference_d2(family: HypothesisFamily, j, aaT, gamma, levy) -> DriftDifference:
    """Callable ``x -> b_j(x) - b_0(x)`` for hypothesis ``j``."""
    if family.dim != 2:
        raise ValueError("two-dimensional family required")
    if tuple(j) not in family.J:
        raise ValueError(f"{j} is not in J_T")
    return DriftDifference(family, j, aaT, gamma, levy)


# ---------------------------------------------------------------------------
# quadrature rules and KL terms
# ---------------------------------------------------------------------------


_GL_T, _GL_W = np.polynomial.legendre.leggauss(12)


def _composite(edges):
    edges = np.asarray(edges, float)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (0.5 * (hi - lo) * _GL_T + 0.5 * (hi + lo)).ravel(), (0.5 * (hi - lo) * _GL_W).ravel()


def _axis_edges(center, H, reach, box_panels=8, max_width=0.5):
    inner = np.linspace(center - H, center + H, box_panels + 1)
    out, w, x = [], H / box_panels, 0.0
    while x < reach:
        w = min(w * 1.5, max_width)
        x = min(x + w, reach)
        out.append(x)
    out = np.array(out)
    return np.concatenate([center - H - out[::-1], inner, center + H + out])


def _reach(laws, axis):
    if laws is None:
        return 0.0
    law = laws[axis]
    return abs(law.loc) + 8.0 * law.scale


@dataclass(frozen=True)
class KLReport:
    """KL budget of one hypothesis against ``f_0``."""

    j: tuple
    entropy: float
    entropy_bound: float
    girsanov: float
    prop_bound: float
    kl: float
    ratio_to_log_JT: float

    @property
    def entropy_ok(self) -> bool:
        return self.entropy <= self.entropy_bound * (1 + 1e-9) + 1e-15

    @property
    def girsanov_ok(self) -> bool:
        return self.girsanov <= self.prop_bound


def prop_bound(family: HypothesisFamily, T: float) -> float:
    """``64 e^{8 eta k} / c_eta^2 k^2 v^2 H1 H2 (1/H1 + 1/H2)^2 log T``."""
    b = family.base
    H1, H2 = family.H
    return (64 * math.exp(8 * b.eta * b.k) / b.c_eta**2 * b.k**2 * family.v**2
            * H1 * H2 * (1 / H1 + 1 / H2) ** 2 * math.log(T))


def kl_bound_terms(family: HypothesisFamily, j, a, gamma, levy, T: Optional[float] = None) -> KLReport:
    """Entropy and Girsanov terms of ``KL(P_j, P_0)`` by tensor Gauss-Legendre quadrature.

    The Girsanov term ``T int |a^{-1}(b_0 - b_j)|^2 f_0`` is integrated over
    the bump box plus the reach of the jumps (eight standard deviations),
    outside which the drift difference vanishes up to Gaussian tails.
    """
    T = family.T if T is None else float(T)
    a = np.asarray(a, float)
    aaT = a @ a.T
    dd = drift_difference_d2(family, j, aaT, gamma, levy)
    c = family.center(j)
    H1, H2 = family.H
    if family.amplitude == 0:
        return KLReport(tuple(j), 0.0, 0.0, 0.0, prop_bound(family, T), 0.0, 0.0)

    # entropy over the bump box (f_j = f_0 elsewhere)
    x1, w1 = _composite(np.linspace(c[0] - H1, c[0] + H1, 9))
    x2, w2 = _composite(np.linspace(c[1] - H2, c[1] + H2, 9))
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    pts = np.stack([X1.ravel(), X2.ravel()], -1)
    f0 = family.base(pts)
    fj = f0 + family.perturbation(pts, j)
    W = np.outer(w1, w2).ravel()
    entropy = float(np.sum(W * np.log(fj / f0) * fj))
    b = family.base
    cstar = 8 / b.c_eta * math.exp(4 * b.eta * b.k)
    rate = math.sqrt(math.log(T) / T)
    ent_bound = abs(math.log1p(cstar * family.v * rate * family.bump.sup_norm**2))

    # Girsanov term
    x1, w1 = _composite(_axis_edges(c[0], H1, _reach(dd.laws, 0)))
    x2, w2 = _composite(_axis_edges(c[1], H2, _reach(dd.laws, 1)))
    diff, f0g, _ = dd._eval(x1[:, None], x2[None, :])
    q = np.einsum("...i,ij,...j->...", diff, np.linalg.inv(aaT), diff)
    girsanov = float(T * np.einsum("i,ij,j->", w1, q * f0g, w2))
    kl = entropy + 0.5 * girsanov
    return KLReport(tuple(j), entropy, ent_bound, girsanov, prop_bound(family, T), kl,
                    kl / math.log(family.size) if family.size > 1 else float("inf"))


def kl_table(family: HypothesisFamily, a, gamma, levy, T=None, workers: int = 1) -> list:
    """:func:`kl_bound_terms` for every ``j`` in ``J_T`` (in ``J_T`` order)."""
    fn = lambda j: kl_bound_terms(family, j, a, gamma, levy, T)
    if workers == 1:
        return [fn(j) for j in family.J]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, family.J))


def drift_difference_profile(family: HypothesisFamily, j, a, gamma, levy, n: int = 81) -> dict:
    """Sup of ``|b_j - b_0|`` inside and outside the bump box.

    Returns the inside maximum with the bound
    ``(8/c_eta) e^{4 eta k} k v sqrt(log T/T)(1/H1 + 1/H2)`` and the fitted
    constant ``c = max_outside / (v sqrt(log T/T))``.
    """
    a = np.asarray(a, float)
    dd = drift_difference_d2(family, j, a @ a.T, gamma, levy)
    c = family.center(j)
    H1, H2 = family.H
    x1 = np.linspace(c[0] - H1, c[0] + H1, n)
    x2 = np.linspace(c[1] - H2, c[1] + H2, n)
    inside = float(np.max(np.abs(dd.on_grid(x1, x2))))
    r1 = _reach(dd.laws, 0) + 2 * H1
    r2 = _reach(dd.laws, 1) + 2 * H2
    y1 = np.linspace(c[0] - r1, c[0] + r1, 2 * n + 1)
    y2 = np.linspace(c[1] - r2, c[1] + r2, 2 * n + 1)
    D = np.abs(dd.on_grid(y1, y2))
    out_mask = (np.abs(y1 - c[0])[:, None] > H1) | (np.abs(y2 - c[1])[None, :] > H2)
    outside = float(np.max(D[out_mask[..., None].repeat(2, -1)])) if out_mask.any() else 0.0
    b = family.base
    rate = math.sqrt(math.log(family.T) / family.T)
    bound = 8 / b.c_eta * math.exp(4 * b.eta * b.k) * b.k * family.v * rate * (1 / H1 + 1 / H2)
    scale = family.v * rate
    return {"inside_max": inside, "inside_bound": bound, "outside_max": outside,
            "outside_c": outside / scale if scale > 0 else 0.0}
