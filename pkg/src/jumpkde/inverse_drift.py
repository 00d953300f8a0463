"""Drift inversion: the drift that makes a prescribed density invariant (d=1).

For constant ``a``, ``gamma`` and Levy density ``F`` the one-dimensional
equation ``dX = b(X) dt + a dB + gamma z (nu - F dz dt)`` has invariant
density ``f`` when ``b f`` integrates the adjoint generator:

    b(x) f(x) = int_{-inf}^x (a^2/2 f'' + A f)(w) dw,
    A f(x)    = int [f(x - gamma z) - f(x) + gamma z f'(x)] F(z) dz.

Swapping the order of integration gives closed forms in terms of the CDF
``G`` of ``f`` (used for ``x < 0``) and its survival function ``S`` (used
for ``x > 0``, where it avoids cancellation in the right tail).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, stats
from scipy.interpolate import CubicHermiteSpline

from .model import AssumptionCheck, AssumptionReport, LevyMeasure, ModelSpec
from .simulate import SimConfig, run_blocks
from .kernel import DensityAccumulator, build_kernel, default_bandwidth

__all__ = [
    "DensitySpec",
    "DriftFunction",
    "ConditionReport",
    "RoundtripReport",
    "QuadratureError",
    "ConsistencyError",
    "adjoint_jump_generator",
    "adjoint_jump_generator_rule",
    "drift_numerator",
    "build_drift",
    "audit_proposition_conditions",
    "stationarity_balance",
    "roundtrip_invariance",
]

# below this |gamma z| the jump integrands are replaced by their Taylor expansion
_TAYLOR_CUT = 1e-4


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ConsistencyError(ArithmeticError):
    """The left and right drift formulas disagree at the origin."""


ConditionReport = AssumptionReport


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """Target density with derivatives, CDF and envelope constants.

    Attributes
    ----------
    f, f1, f2 : callable
        Density and its first two derivatives (vectorised).
    cdf, sf : callable
        ``int_{-inf}^x f`` and ``int_x^inf f``.
    constants : dict
        Keys ``c1, eps, c2, c3, c4, eps_tilde, R`` (``c4`` is the curvature
        constant of the density, not the jump moment).
    scale : float
        Length scale used to size audit grids.
    breaks : tuple
        Points where ``f`` changes regime; quadrature panels are aligned to them.
    """

    f: Callable
    f1: Callable
    f2: Callable
    cdf: Callable
    sf: Callable
    constants: dict = field(default_factory=dict)
    scale: float = 1.0
    label: str = "custom"
    breaks: tuple = ()

    @classmethod
    def gaussian(cls, var: float, **constants) -> "DensitySpec":
        sd = float(np.sqrt(var))
        dist = stats.norm(0.0, sd)
        return cls(
            f=dist.pdf,
            f1=lambda x: -np.asarray(x) / var * dist.pdf(x),
            f2=lambda x: (np.asarray(x) ** 2 / var**2 - 1 / var) * dist.pdf(x),
            cdf=dist.cdf,
            sf=dist.sf,
            constants=dict(constants),
            scale=sd,
            label=f"gaussian(var={var:g})",
        )

    @classmethod
    def from_callables(cls, f, f1, f2, lo: float, hi: float, n: int = 20001, **kw) -> "DensitySpec":
        """Tabulate CDF and survival function of ``f`` on ``[lo, hi]``.

        Mass outside the interval is ignored.
        """
        xs = np.linspace(lo, hi, n)
        t, w = np.polynomial.legendre.leggauss(10)
        a_, b_ = xs[:-1, None], xs[1:, None]
        pieces = np.sum(0.5 * (b_ - a_) * w * f(0.5 * (b_ - a_) * t + 0.5 * (a_ + b_)), axis=1)
        c = np.concatenate([[0.0], np.cumsum(pieces)])
        s = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        fx = f(xs)
        cspl = CubicHermiteSpline(xs, c, fx)
        sspl = CubicHermiteSpline(xs, s, -fx)

        def cdf(x):
            x = np.asarray(x, float)
            return np.where(x <= lo, 0.0, np.where(x >= hi, c[-1], cspl(np.clip(x, lo, hi))))

        def sf(x):
            x = np.asarray(x, float)
            return np.where(x >= hi, 0.0, np.where(x <= lo, s[0], sspl(np.clip(x, lo, hi))))

        return cls(f, f1, f2, cdf, sf, **kw)

    def check(self, lo: Optional[float] = None, hi: Optional[float] = None, n: int = 2001) -> list:
        """Return a list of violated type invariants (empty when valid)."""
        lo = -40 * self.scale if lo is None else lo
        hi = 40 * self.scale if hi is None else hi
        problems = []
        x = np.linspace(lo, hi, n)
        fx = self.f(x)
        if np.any(fx <= 0) or not np.all(np.isfinite(fx)):
            problems.append("f must be positive and finite")
        mass = float(self.cdf(np.array(hi)) + self.sf(np.array(hi)))
        if abs(mass - 1) > 1e-6:
            problems.append(f"mass {mass:.9f} differs from 1")
        e = 1e-5 * self.scale
        for name, d, dd in (("f1", self.f, self.f1), ("f2", self.f1, self.f2)):
            fd = (d(x + e) - d(x - e)) / (2 * e)
            ref = dd(x)
            err = np.abs(fd - ref) / (np.abs(ref) + 1e-3 * np.max(np.abs(ref)))
            if np.max(err) > 1e-4:
                problems.append(f"{name} inconsistent with finite differences (rel. err {np.max(err):.2e})")
        return problems

    def sample(self, rng: np.random.Generator, n: int, half_width: Optional[float] = None) -> np.ndarray:
        """Draws from ``f`` by inverse-CDF interpolation."""
        L = 60 * self.scale if half_width is None else half_width
        xs = np.linspace(-L, L, 40001)
        c = self.cdf(xs)
        c = (c - c[0]) / (c[-1] - c[0])
        return np.interp(rng.random(n), c, xs)


# ---------------------------------------------------------------------------
# adjoint jump operator
# ---------------------------------------------------------------------------


def adjoint_jump_generator(f: DensitySpec, gamma: float, levy: LevyMeasure, x: float, tol: float = 1e-10) -> float:
    """``int [f(x - gamma z) - f(x) + gamma z f'(x)] F(z) dz`` by adaptive quadrature.

    Raises
    ------
    QuadratureError
        If the estimated absolute error exceeds ``tol``.
    """
    if levy.kind == "none" or levy.intensity == 0:
        return 0.0
    x = float(x)
    fx, f1x = float(f.f(x)), float(f.f1(x))

    def integrand(z):
        F = float(levy.density(np.array([z])))
        if F == 0.0:
            return 0.0
        return (float(f.f(x - gamma * z)) - fx + gamma * z * f1x) * F

    total, err = 0.0, 0.0
    Z = levy.support
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in ((-Z, 0.0), (0.0, Z)):
            val, e = integrate.quad(integrand, lo, hi, epsabs=tol / 4, epsrel=1e-12, limit=500)
            total += val
            err += e
    if err > tol:
        raise QuadratureError(f"adjoint generator quadrature at x={x:g} reached only {err:.2e} (requested {tol:.0e})")
    return total


def adjoint_jump_generator_rule(f: DensitySpec, gamma: float, levy: LevyMeasure, x) -> np.ndarray:
    """Vectorised version of :func:`adjoint_jump_generator` on the measure's quadrature rule."""
    x = np.asarray(x, float)
    z, w = levy.quadrature_rule()
    if w.size == 0:
        return np.zeros_like(x)
    gz = gamma * z[:, 0]
    xx = x[..., None]
    small = np.abs(gz) < _TAYLOR_CUT
    full = f.f(xx - gz) - f.f(xx) + gz * f.f1(xx)
    taylor = 0.5 * gz**2 * f.f2(xx)
    return np.sum(w * np.where(small, taylor, full), axis=-1)


def _jump_primitive(f: DensitySpec, gamma: float, levy: LevyMeasure, x: np.ndarray, side: str) -> np.ndarray:
    """``int_{-inf}^x A f`` (side="left") or ``int_x^inf A f`` (side="right")."""
    z, w = levy.quadrature_rule()
    if w.size == 0:
        return np.zeros_like(x)
    gz = gamma * z[:, 0]
    xx = x[..., None]
    small = np.abs(gz) < _TAYLOR_CUT
    fx, f1x, f2x = f.f(xx), f.f1(xx), f.f2(xx)
    if side == "left":
        full = f.cdf(xx - gz) - f.cdf(xx) + gz * fx
        taylor = 0.5 * gz**2 * f1x - gz**3 * f2x / 6.0
    else:
        full = f.sf(xx - gz) - f.sf(xx) - gz * fx
        taylor = -0.5 * gz**2 * f1x + gz**3 * f2x / 6.0
    return np.sum(w * np.where(small, taylor, full), axis=-1)


def drift_numerator(f: DensitySpec, a: float, gamma: float, levy: LevyMeasure, x, side: Optional[str] = None):
    """``b(x) f(x)``; ``side`` forces the left or right formula (default by sign of x)."""
    x = np.asarray(x, float)
    half = 0.5 * a * a * f.f1(x)
    if side == "left":
        return half + _jump_primitive(f, gamma, levy, x, "left")
    if side == "right":
        return half - _jump_primitive(f, gamma, levy, x, "right")
    left = half + _jump_primitive(f, gamma, levy, np.minimum(x, 0.0), "left")
    right = half - _jump_primitive(f, gamma, levy, np.maximum(x, 0.0), "right")
    return np.where(x < 0, left, right)


def stationarity_balance(f: DensitySpec, a: float, gamma: float, levy: LevyMeasure, half_width=None, panels=1600) -> float:
    """Quadrature of ``a^2/2 f'' + A f`` over the line (zero for a valid construction)."""
    L = 60 * f.scale if half_width is None else half_width
    t, w = np.polynomial.legendre.leggauss(16)
    edges = np.union1d(np.linspace(-L, L, panels + 1), [b for b in f.breaks if abs(b) < L])
    lo, hi = edges[:-1, None], edges[1:, None]
    x = (0.5 * (hi - lo) * t + 0.5 * (hi + lo)).ravel()
    ww = (0.5 * (hi - lo) * w).ravel()
    vals = 0.5 * a * a * f.f2(x) + adjoint_jump_generator_rule(f, gamma, levy, x)
    return float(np.sum(ww * vals))


# ---------------------------------------------------------------------------
# drift
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DriftFunction:
    """Drift tabulated on a grid; linear interpolation, constant extension outside."""

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, float)
        return np.interp(x, self.grid, self.values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def lipschitz_estimate(self) -> float:
        return float(np.max(np.abs(np.diff(self.values)) / np.diff(self.grid)))

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "b"])
            for x, b in zip(self.grid, self.values):
                w.writerow([repr(float(x)), repr(float(b))])

    @classmethod
    def from_csv(cls, path: str) -> "DriftFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], {"source": path})

    def a2_fit(self, rho: float) -> tuple:
        """Fit ``x b(x) <= -c1 |x| + c2`` on ``|x| >= rho``; returns ``(c1, c2)``."""
        far = np.abs(self.grid) >= rho
        y = self.grid[far] * self.values[far]
        r = np.abs(self.grid[far])
        slope, _ = np.polyfit(r, y, 1)
        c1 = -float(slope)
        return c1, float(np.max(y + c1 * r))


def default_drift_grid() -> np.ndarray:
    return np.round(np.arange(-3000, 3001) * 0.01, 10)


def build_drift(
    f: DensitySpec,
    a: float,
    gamma: float,
    levy: LevyMeasure,
    grid: Optional[np.ndarray] = None,
    audit: bool = True,
    seam_tol: float = 1e-6,
) -> DriftFunction:
    """Tabulate the drift whose invariant density is ``f``.

    Parameters
    ----------
    f : DensitySpec
    a, gamma : float
        Constant diffusion and jump coefficients.
    levy : LevyMeasure
    grid : array, optional
        Increasing grid; default ``[-30, 30]`` with step 0.01.
    audit : bool
        Refuse to build unless :func:`audit_proposition_conditions` passes.
    seam_tol : float
        Allowed gap between the left and right formulas at the origin.

    Raises
    ------
    ValueError
        ``a == 0``, a failed audit, or a density vanishing on the grid.
    ConsistencyError
        The two one-sided formulas disagree at 0 by more than ``seam_tol``.
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    if levy.dim != 1:
        raise ValueError("drift inversion is one-dimensional")
    if audit:
        rep = audit_proposition_conditions(f, a, gamma, levy)
        if not rep.passed:
            raise ValueError("conditions not satisfied: " + ", ".join(rep.failed()))
    grid = default_drift_grid() if grid is None else np.asarray(grid, float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-d array")
    fx = f.f(grid)
    if np.any(fx <= 0) or not np.all(np.isfinite(fx)):
        i = int(np.argmax(~(fx > 0)))
        raise ValueError(f"density not positive on grid (x={grid[i]:g})")
    left0 = float(drift_numerator(f, a, gamma, levy, np.array(0.0), "left"))
    right0 = float(drift_numerator(f, a, gamma, levy, np.array(0.0), "right"))
    seam = abs(left0 - right0) / float(f.f(np.array(0.0)))
    if seam > seam_tol:
        raise ConsistencyError(f"one-sided drift formulas differ by {seam:.3e} at 0")
    b = drift_numerator(f, a, gamma, levy, grid) / fx
    if not np.all(np.isfinite(b)):
        raise ArithmeticError("non-finite drift value on grid")
    return DriftFunction(grid, b, {"a": a, "gamma": gamma, "levy": levy.label, "density": f.label, "seam": seam})


# ---------------------------------------------------------------------------
# conditions audit
# ---------------------------------------------------------------------------


def audit_proposition_conditions(f: DensitySpec, a: float, gamma: float, levy: LevyMeasure) -> ConditionReport:
    """Check the five sufficient conditions of the drift inversion on grids.

    Condition 4 is read as ``sgn(y) f'(y)/f(y) <= -eps_tilde`` for
    ``|y| > R`` (decay on both sides).
    """
    k = f.constants
    need = ("c1", "eps", "c2", "c3", "c4", "eps_tilde", "R")
    missing = [n for n in need if n not in k]
    if missing:
        return ConditionReport((AssumptionCheck("constants", False, f"missing {missing}"),), dict(k))
    c1, eps, c2, c3, c4hat, et, R = (float(k[n]) for n in need)
    L = max(R, f.scale, 1.0)
    checks = []
    rtol = 1e-9

    # 1: vanishing tails of f and f'
    far = np.array([-60 * L, 60 * L])
    peak = float(np.max(f.f(np.linspace(-L, L, 201))))
    tail = float(np.max(np.abs(np.concatenate([f.f(far), f.f1(far)]))))
    checks.append(AssumptionCheck("1", tail <= 1e-8 * peak, f"max |f|,|f'| at +-{60 * L:g} = {tail:.3g}", value=tail))

    # 2: f(y +- z) <= c1 e^(eps|z|) f(y)
    y = np.linspace(-12 * L, 12 * L, 601)[:, None]
    z = np.linspace(0, 12 * L, 301)[None, :]
    fy = f.f(y)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = np.maximum(f.f(y + z), f.f(y - z)) / (np.exp(eps * z) * fy)
    r = np.where(np.isfinite(r), r, np.inf)
    i2 = np.unravel_index(np.argmax(r), r.shape)
    m2 = float(r[i2])
    checks.append(AssumptionCheck("2", m2 <= c1, f"max f(y+-z)/(e^(eps z) f(y)) = {m2:.4g} vs c1 = {c1:g}",
                                  (float(y[i2[0], 0]), float(z[0, i2[1]])), m2))

    # 3: tail ratios
    yl = np.linspace(-30 * L, 0, 3001)
    yr = -yl[::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rl = f.cdf(yl) / f.f(yl)
        rr = f.sf(yr) / f.f(yr)
    m3 = float(max(np.nanmax(rl), np.nanmax(rr)))
    checks.append(AssumptionCheck("3", m3 < c2, f"max tail ratio = {m3:.4g} vs c2 = {c2:.4g}", value=m3))

    # 4: decay of f'/f beyond R, |f'| <= c3 f, and the eps_tilde gate
    ys = np.linspace(-30 * L, 30 * L, 6001)
    out = np.abs(ys) > R
    fys = f.f(ys)
    pos = fys > 1e-280
    ys, fys = ys[pos], fys[pos]
    out = out[pos]
    logd = f.f1(ys) / fys
    decay = np.sign(ys[out]) * logd[out]
    worst_decay = float(np.max(decay)) if decay.size else -np.inf
    m3b = float(np.max(np.abs(logd)))
    gate = np.inf if levy.c4 == 0 else a * a / (2 * gamma * gamma * levy.c4 * c2 * c4hat * c1)
    ok4 = worst_decay <= -et * (1 - rtol) and m3b <= c3 * (1 + rtol) and et < gate
    checks.append(AssumptionCheck(
        "4", ok4,
        f"max sgn(y)f'/f on |y|>R = {worst_decay:.4g} (need <= {-et:g}); max |f'|/f = {m3b:.4g} (c3 = {c3:g}); "
        f"eps_tilde = {et:g} vs gate {gate:.4g}", value=float(gate)))

    # 5: |f''| <= c4hat eps_tilde^2 f
    r5 = np.abs(f.f2(ys)) / fys
    m5 = float(np.max(r5))
    checks.append(AssumptionCheck("5", m5 <= c4hat * et * et * (1 + rtol),
                                  f"max |f''|/f = {m5:.4g} vs c4 eps_tilde^2 = {c4hat * et * et:.4g}",
                                  (float(ys[int(np.argmax(r5))]),), m5))
    consts = dict(k)
    consts["levy_c4"] = levy.c4
    consts["eps_tilde_gate"] = float(gate)
    return ConditionReport(tuple(checks), consts)


# ---------------------------------------------------------------------------
# round trip
# ---------------------------------------------------------------------------


@dataclass
class RoundtripReport:
    """Simulated-versus-target comparison on a grid of points."""

    points: np.ndarray
    target: np.ndarray
    mean_estimate: np.ndarray
    se: np.ndarray
    sup_error: float
    n_rep: int
    T: float

    @property
    def within(self) -> bool:
        """Whether ``sup |mu_hat - f| <= 4 max SE``."""
        return self.sup_error <= 4 * float(np.max(self.se))


def roundtrip_invariance(
    f: DensitySpec,
    b: DriftFunction,
    a: float,
    gamma: float,
    levy: LevyMeasure,
    sim_cfg: SimConfig,
    kernel_order: int = 1,
    points: Optional[np.ndarray] = None,
    n_rep: int = 50,
    workers: int = 1,
) -> RoundtripReport:
    """Simulate with drift ``b`` from a draw of ``f`` and compare the estimate with ``f``."""
    if sim_cfg.n_steps < 1:
        raise ValueError("empty simulation")
    points = np.linspace(-8, 8, 33) if points is None else np.asarray(points, float)

    def x0(rng, n):
        return f.sample(rng, n)[:, None]

    spec = ModelSpec(1, lambda x: b(x), a, gamma, levy, x0=x0, model_id="inverted_drift")
    kern = build_kernel(kernel_order)
    h = default_bandwidth(sim_cfg.T, 1)
    pts = points[:, None]
    blocks = run_blocks(spec, sim_cfg, n_rep,
                        lambda reps: DensityAccumulator(pts, kern, h, sim_cfg, len(reps)), workers)
    est = np.concatenate(blocks, axis=0)
    mean = est.mean(axis=0)
    se = est.std(axis=0, ddof=1) / np.sqrt(n_rep)
    target = f.f(points)
    return RoundtripReport(points, target, mean, se, float(np.max(np.abs(mean - target))), n_rep, sim_cfg.T)
