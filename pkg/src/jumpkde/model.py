"""Jump-diffusion model specifications and numerical assumption audits.

A model is the SDE

    dX_t = b(X_t) dt + a(X_t) dB_t + gamma(X_{t-}) z (nu(dt, dz) - F(z) dz dt)

in dimension 1 or 2.  Coefficients are vectorised callables acting on arrays
of shape ``(n, d)`` (constant matrices are accepted for ``a`` and ``gamma``),
and the Levy measure ``F`` is carried by :class:`LevyMeasure`.

The audits in this module are desk-scale: global conditions (Lipschitz,
boundedness, drift dissipativity, moment bounds) are checked on finite
grids and reported with witnesses, never certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, special

__all__ = [
    "LevyMeasure",
    "ModelSpec",
    "LyapunovSpec",
    "AssumptionCheck",
    "AssumptionReport",
    "audit_assumptions",
    "check_c4_condition",
    "default_audit_grid",
    "get_model",
    "CATALOGUE",
]

Coefficient = Union[np.ndarray, float, Callable[[np.ndarray], np.ndarray]]


class ModelError(ValueError):
    """Raised for malformed model specifications."""


# ---------------------------------------------------------------------------
# Levy measures
# ---------------------------------------------------------------------------


def _geometric_gl_rule(zmin: float, zmax: float, panels_per_decade: int = 4, order: int = 12):
    """Composite Gauss-Legendre nodes on [zmin, zmax] with geometric panels."""
    n_panels = max(1, int(np.ceil(panels_per_decade * np.log10(zmax / zmin))))
    edges = np.geomspace(zmin, zmax, n_panels + 1)
    t, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()


@dataclass(frozen=True, eq=False)
class LevyMeasure:
    """Levy density ``F`` plus the constants of the jump assumptions.

    Use the constructors :meth:`none`, :meth:`gaussian_compound_poisson`,
    :meth:`tempered_stable` or :meth:`from_density` rather than building the
    dataclass directly.

    Attributes
    ----------
    kind : {"none", "compound_poisson", "tempered_stable_truncated"}
    dim : int
    density : callable
        ``F(z)`` for ``z`` of shape ``(..., dim)``; returns shape ``(...)``.
    alpha : float
        Blumenthal-Getoor bound in (0, 2) used in ``F(z) <= c3/|z|^(d+alpha)``.
    intensity : float
        Total mass of ``F`` (``inf`` for infinite activity).
    c3, eps0, c4 : float
        Envelope and exponential-moment constants.
    symmetric : bool
    """

    kind: str
    dim: int
    density: Callable[[np.ndarray], np.ndarray]
    alpha: float
    intensity: float
    c3: float
    eps0: float
    c4: float
    symmetric: bool
    # simulation data: rate and sampler of the jumps actually simulated
    sim_rate: float = 0.0
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    sim_mean: np.ndarray = field(default_factory=lambda: np.zeros(1))
    cutoff: float = 0.0
    # gaussian compound Poisson parameters (None otherwise)
    gauss_mean: Optional[np.ndarray] = None
    gauss_scale: Optional[np.ndarray] = None
    support: float = 50.0
    label: str = ""
    params: dict = field(default_factory=dict)

    # -- constructors -----------------------------------------------------

    @classmethod
    def none(cls, dim: int = 1) -> "LevyMeasure":
        return cls(
            kind="none",
            dim=dim,
            density=lambda z: np.zeros(np.shape(z)[:-1]),
            alpha=0.5,
            intensity=0.0,
            c3=1.0,
            eps0=1.0,
            c4=0.0,
            symmetric=True,
            sim_mean=np.zeros(dim),
            label="none",
        )

    @classmethod
    def gaussian_compound_poisson(
        cls,
        rate: float,
        scale: Union[float, Sequence[float]] = 1.0,
        mean: Union[float, Sequence[float]] = 0.0,
        dim: int = 1,
        eps0: float = 1.0,
        alpha: float = 0.5,
        c4: Optional[float] = None,
    ) -> "LevyMeasure":
        """Compound Poisson measure ``F = rate * N(mean, diag(scale**2))``.

        ``c3`` is the exact supremum of ``F(z)|z|^(d+alpha)`` (for zero mean)
        and ``c4`` defaults to the quadrature value of the A4 integral.
        """
        if rate < 0:
            raise ModelError("rate must be nonnegative")
        scale = np.broadcast_to(np.asarray(scale, float), (dim,)).copy()
        mean = np.broadcast_to(np.asarray(mean, float), (dim,)).copy()
        if np.any(scale <= 0):
            raise ModelError("scale must be positive")
        norm = rate / np.prod(np.sqrt(2 * np.pi) * scale)

        def density(z, mean=mean, scale=scale, norm=norm):
            z = np.asarray(z, float)
            q = np.sum(((z - mean) / scale) ** 2, axis=-1)
            return norm * np.exp(-0.5 * q)

        def sampler(rng, n, mean=mean, scale=scale):
            return mean + scale * rng.standard_normal((n, len(scale)))

        symmetric = bool(np.all(mean == 0))
        if symmetric and np.all(scale == scale[0]):
            # sup_r r^(d+alpha) exp(-r^2/2s^2) attained at r^2 = (d+alpha) s^2
            s = scale[0]
            r2 = (dim + alpha) * s * s
            c3 = norm * r2 ** ((dim + alpha) / 2) * np.exp(-0.5 * r2 / (s * s))
        else:
            c3 = _numeric_c3(density, dim, alpha, float(np.max(np.abs(mean)) + 10 * np.max(scale)))
        c3 = float(c3) * (1 + 1e-9) if rate > 0 else 1.0
        meas = cls(
            kind="compound_poisson" if rate > 0 else "none",
            dim=dim,
            density=density,
            alpha=alpha,
            intensity=float(rate),
            c3=c3,
            eps0=eps0,
            c4=0.0,
            symmetric=symmetric,
            sim_rate=float(rate),
            sampler=sampler,
            sim_mean=rate * mean,
            gauss_mean=mean,
            gauss_scale=scale,
            support=float(np.max(np.abs(mean)) + 12 * np.max(scale)),
            label=f"cpois_gauss(rate={rate:g}, scale={scale.tolist()})",
        )
        if c4 is None:
            c4 = exponential_moment(meas, eps0)
        object.__setattr__(meas, "c4", float(c4))
        return meas

    @classmethod
    def tempered_stable(
        cls,
        c: float,
        alpha: float,
        theta: float,
        eps0: Optional[float] = None,
        cutoff: Optional[float] = None,
        residual_variance: float = 1e-4,
    ) -> "LevyMeasure":
        """Symmetric tempered stable density ``c exp(-theta|z|)/|z|^(1+alpha)`` (d=1).

        Jumps below ``cutoff`` are dropped in simulation; the default cutoff
        keeps ``int_{|z|<cutoff} z^2 F`` below ``residual_variance``.
        """
        if not 0 < alpha < 2:
            raise ModelError("alpha must lie in (0, 2)")
        if eps0 is None:
            eps0 = theta / 2
        if not 0 < eps0 < theta:
            raise ModelError("eps0 must lie in (0, theta)")
        if cutoff is None:
            cutoff = (residual_variance * (2 - alpha) / (2 * c)) ** (1 / (2 - alpha))

        def density(z):
            r = np.abs(np.asarray(z, float)[..., 0])
            with np.errstate(divide="ignore", invalid="ignore"):
                out = c * np.exp(-theta * r) / r ** (1 + alpha)
            return np.where(r > 0, out, 0.0)

        rate_c = 2 * c * integrate.quad(lambda r: np.exp(-theta * r) / r ** (1 + alpha), cutoff, np.inf)[0]

        def sampler(rng, n):
            # rejection from cutoff + Exp(theta): acceptance (cutoff/z)^(1+alpha)
            out = np.empty(0)
            while out.size < n:
                m = max(16, 2 * (n - out.size))
                z = cutoff + rng.exponential(1 / theta, m)
                keep = rng.random(m) < (cutoff / z) ** (1 + alpha)
                out = np.concatenate([out, z[keep]])
            out = out[:n]
            sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            return (sign * out)[:, None]

        c4 = 2 * c * special.gamma(2 - alpha) / (theta - eps0) ** (2 - alpha)
        return cls(
            kind="tempered_stable_truncated",
            dim=1,
            density=density,
            alpha=alpha,
            intensity=math.inf,
            c3=float(c),
            eps0=float(eps0),
            c4=float(c4),
            symmetric=True,
            sim_rate=float(rate_c),
            sampler=sampler,
            sim_mean=np.zeros(1),
            cutoff=float(cutoff),
            support=float(40 / theta),
            label=f"tempered_stable(c={c:g}, alpha={alpha:g}, theta={theta:g})",
            params=dict(c=c, alpha=alpha, theta=theta, eps0=eps0),
        )

    @classmethod
    def from_density(
        cls,
        density: Callable[[np.ndarray], np.ndarray],
        *,
        dim: int = 1,
        alpha: float = 0.5,
        eps0: float = 1.0,
        c3: float,
        c4: float,
        intensity: Optional[float] = None,
        symmetric: bool = True,
        sampler=None,
        support: float = 50.0,
        label: str = "custom",
    ) -> "LevyMeasure":
        """Wrap an arbitrary finite-intensity density ``F`` (compound Poisson).

        No validity checking happens here; run :func:`audit_assumptions`.
        """
        if intensity is None:
            if dim != 1:
                raise ModelError("intensity must be given for dim=2")
            intensity = integrate.quad(lambda z: float(density(np.array([z]))), -np.inf, np.inf, limit=200)[0]
        if sampler is None and dim == 1:
            sampler = _tabulated_sampler(density, support)
        meas = cls(
            kind="compound_poisson",
            dim=dim,
            density=density,
            alpha=alpha,
            intensity=float(intensity),
            c3=float(c3),
            eps0=float(eps0),
            c4=float(c4),
            symmetric=symmetric,
            sim_rate=float(intensity),
            sampler=sampler,
            sim_mean=np.zeros(dim),
            support=support,
            label=label,
        )
        if not symmetric and dim == 1:
            nodes, weights = meas.quadrature_rule()
            object.__setattr__(meas, "sim_mean", np.array([np.sum(weights * nodes[:, 0])]))
        return meas

    # -- quadrature -------------------------------------------------------

    def quadrature_rule(self, order: int = 64):
        """Nodes ``(k, dim)`` and weights ``(k,)`` with ``sum w g(z) ~ int g F``.

        For integrands vanishing like ``|z|^2`` at the origin the rule is
        accurate also for singular (infinite-activity) densities.
        """
        if self.kind == "none" or self.intensity == 0:
            return np.zeros((0, self.dim)), np.zeros(0)
        if self.gauss_scale is not None:
            t, w = np.polynomial.hermite.hermgauss(order if self.dim == 1 else 24)
            w = w / np.sqrt(np.pi)
            if self.dim == 1:
                nodes = self.gauss_mean + np.sqrt(2) * self.gauss_scale * t[:, None]
                return nodes, self.intensity * w
            t1, t2 = np.meshgrid(t, t, indexing="ij")
            w12 = np.outer(w, w).ravel()
            nodes = self.gauss_mean + np.sqrt(2) * self.gauss_scale * np.stack([t1.ravel(), t2.ravel()], -1)
            return nodes, self.intensity * w12
        if self.dim != 1:
            raise NotImplementedError("quadrature for non-Gaussian measures is implemented for dim=1 only")
        r, wr = _geometric_gl_rule(1e-12, self.support)
        z = np.concatenate([-r[::-1], r])[:, None]
        w = np.concatenate([wr[::-1], wr]) * self.density(z)
        return z, w

    @property
    def infinite_activity(self) -> bool:
        return not np.isfinite(self.intensity)

    def with_cutoff(self, cutoff: float) -> "LevyMeasure":
        """Same measure with a different small-jump cutoff for simulation."""
        if not self.infinite_activity:
            return self
        if not cutoff > 0:
            raise ModelError("infinite-activity measures need a positive small-jump cutoff")
        return LevyMeasure.tempered_stable(cutoff=cutoff, **self.params)

    @property
    def compensator_mean(self) -> np.ndarray:
        """``int z F(z) dz`` over the simulated jumps (the compensator drift)."""
        return np.asarray(self.sim_mean, float).reshape(self.dim)

    def sample_jumps(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n == 0:
            return np.zeros((0, self.dim))
        return np.asarray(self.sampler(rng, n), float).reshape(n, self.dim)


def _numeric_c3(density, dim, alpha, zmax):
    r = np.geomspace(1e-4, zmax, 400)
    if dim == 1:
        z = np.concatenate([-r, r])[:, None]
        rr = np.abs(z[:, 0])
    else:
        th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        R, TH = np.meshgrid(r, th, indexing="ij")
        z = np.stack([R * np.cos(TH), R * np.sin(TH)], -1).reshape(-1, 2)
        rr = R.ravel()
    return np.max(density(z) * rr ** (dim + alpha))


def _tabulated_sampler(density, support, n=20001):
    z = np.linspace(-support, support, n)
    p = density(z[:, None])
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(z))])
    cdf /= cdf[-1]

    def sampler(rng, m):
        return np.interp(rng.random(m), cdf, z)[:, None]

    return sampler


def exponential_moment(levy: LevyMeasure, eps0: float, radius: float = np.inf) -> float:
    """Quadrature of ``int |z|^2 exp(eps0 |z|) F(z) dz`` over ``|z| < radius``."""
    if levy.kind == "none" or levy.intensity == 0:
        return 0.0
    if not np.isfinite(radius) and levy.gauss_scale is not None:
        radius = levy.support
    if levy.dim == 1:
        def g(z):
            f = float(levy.density(np.array([z])))
            return z * z * np.exp(eps0 * abs(z)) * f if f > 0 else 0.0

        hi = radius if np.isfinite(radius) else np.inf
        pos = integrate.quad(g, 0, hi, limit=400, epsabs=1e-13, epsrel=1e-11)[0]
        neg = integrate.quad(g, -hi, 0, limit=400, epsabs=1e-13, epsrel=1e-11)[0]
        return pos + neg
    th, wth = np.polynomial.legendre.leggauss(64)
    th = np.pi * (th + 1)
    wth = np.pi * wth
    dirs = np.stack([np.cos(th), np.sin(th)], -1)

    def radial(r):
        f = np.sum(wth * levy.density(r * dirs))
        return r**3 * np.exp(eps0 * r) * f if f > 0 else 0.0

    hi = radius if np.isfinite(radius) else np.inf
    return integrate.quad(radial, 0, hi, limit=400, epsabs=1e-13, epsrel=1e-11)[0]


# ---------------------------------------------------------------------------
# Model specification
# ---------------------------------------------------------------------------


def _as_coefficient(value: Coefficient, dim: int, name: str):
    if callable(value):
        return value
    arr = np.asarray(value, float)
    if arr.ndim == 0:
        arr = arr * np.eye(dim)
    if arr.shape != (dim, dim):
        raise ModelError(f"{name} must be a ({dim},{dim}) matrix or callable, got shape {arr.shape}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def eval_matrix(coef, x: np.ndarray) -> np.ndarray:
    """Evaluate a constant or callable matrix coefficient on ``x`` of shape (n, d)."""
    if callable(coef):
        return np.asarray(coef(x), float).reshape(x.shape[0], x.shape[1], x.shape[1])
    return np.broadcast_to(coef, (x.shape[0],) + coef.shape)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Coefficients, Levy measure and initial law of a jump-diffusion.

    Parameters
    ----------
    dim : int
        1 or 2.
    drift : callable
        ``b(x)`` mapping ``(n, d)`` to ``(n, d)``.
    diffusion, jump_coeff : array or callable
        Constant ``(d, d)`` matrices (scalars allowed) or callables mapping
        ``(n, d)`` to ``(n, d, d)``.
    levy : LevyMeasure
    x0 : array or callable
        Fixed starting point, or ``x0(rng, n)`` returning ``(n, d)`` draws.
    density : callable, optional
        Closed-form invariant density, ``(n, d) -> (n,)``, when known.
    """

    dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Coefficient
    jump_coeff: Coefficient
    levy: LevyMeasure
    x0: Union[np.ndarray, Callable] = 0.0
    model_id: str = "custom"
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    description: str = ""

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ModelError("only dimensions 1 and 2 are supported")
        if self.levy.dim != self.dim:
            raise ModelError("Levy measure dimension does not match the model")
        object.__setattr__(self, "diffusion", _as_coefficient(self.diffusion, self.dim, "diffusion"))
        object.__setattr__(self, "jump_coeff", _as_coefficient(self.jump_coeff, self.dim, "jump_coeff"))
        if not callable(self.x0):
            x0 = np.broadcast_to(np.asarray(self.x0, float), (self.dim,)).copy()
            x0.flags.writeable = False
            object.__setattr__(self, "x0", x0)

    @property
    def constant_diffusion(self) -> bool:
        return not callable(self.diffusion)

    @property
    def constant_jump_coeff(self) -> bool:
        return not callable(self.jump_coeff)

    def initial_states(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if callable(self.x0):
            return np.asarray(self.x0(rng, n), float).reshape(n, self.dim)
        return np.tile(self.x0, (n, 1))


# ---------------------------------------------------------------------------
# Lyapunov function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LyapunovSpec:
    """Smooth version of ``exp(eps|x|)``.

    Equal to ``exp(eps|x|)`` for ``|x| >= 1``; inside it is the even
    polynomial ``1 + p1 x^2 + p2 x^4 + p3 x^6`` matching value, slope and
    curvature at ``|x| = 1``.
    """

    eps: float
    coeffs: tuple = ()

    @classmethod
    def build(cls, eps: float, eps0: float, gamma_sup: float = 1.0) -> "LyapunovSpec":
        cap = min(eps0 / gamma_sup, eps0)
        if not 0 < eps <= cap:
            raise ModelError(f"eps must lie in (0, {cap:g}]")
        e = np.exp(eps)
        # rows: value, first and second derivative of sum_k p_k x^(2k) at x=1
        A = np.array([[1.0, 1.0, 1.0], [2.0, 4.0, 6.0], [2.0, 12.0, 30.0]])
        rhs = np.array([e - 1.0, eps * e, eps * eps * e])
        return cls(eps=eps, coeffs=tuple(np.linalg.solve(A, rhs)))

    def __call__(self, x):
        x = np.abs(np.asarray(x, float))
        x2 = x * x
        p1, p2, p3 = self.coeffs
        inner = 1.0 + x2 * (p1 + x2 * (p2 + x2 * p3))
        return np.where(x >= 1.0, np.exp(self.eps * x), inner)


# ---------------------------------------------------------------------------
# Assumption audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    detail: str
    witness: Optional[tuple] = None
    value: float = float("nan")


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple
    constants: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = [f"{c.name:4s} {'PASS' if c.passed else 'FAIL'}  {c.detail}" for c in self.checks]
        return "\n".join(lines)


def default_audit_grid(dim: int, half_width: float = 20.0, n: int = 401) -> np.ndarray:
    axis = np.linspace(-half_width, half_width, n)
    if dim == 1:
        return axis[:, None]
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([g1.ravel(), g2.ravel()], -1)


def _first_nonfinite(values, grid):
    bad = ~np.isfinite(values.reshape(values.shape[0], -1)).all(axis=1)
    if bad.any():
        return tuple(grid[np.argmax(bad)])
    return None


def _lipschitz_on_grid(values, grid):
    """Max finite-difference slope between consecutive grid points along each axis."""
    values = values.reshape(values.shape[0], -1)
    dim = grid.shape[1]
    if dim == 1:
        order = np.argsort(grid[:, 0])
        dv = np.linalg.norm(np.diff(values[order], axis=0), axis=1)
        dx = np.diff(grid[order, 0])
        ok = dx > 0
        return float(np.max(dv[ok] / dx[ok])) if ok.any() else 0.0
    n = int(round(np.sqrt(grid.shape[0])))
    if n * n != grid.shape[0]:
        raise ModelError("two-dimensional audit grids must be tensor grids")
    V = values.reshape(n, n, -1)
    G = grid.reshape(n, n, 2)
    best = 0.0
    for axis in (0, 1):
        dv = np.linalg.norm(np.diff(V, axis=axis), axis=-1)
        dx = np.linalg.norm(np.diff(G, axis=axis), axis=-1)
        best = max(best, float(np.max(dv / dx)))
    return best


def _inner(grid, frac=0.5):
    r = np.max(np.abs(grid), axis=1)
    return r <= frac * np.max(r)


def audit_assumptions(
    spec: ModelSpec,
    grid: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    rho: float = 5.0,
) -> AssumptionReport:
    """Audit A1-A6 on a finite grid and return per-assumption verdicts.

    Boundedness and Lipschitz continuity are judged by comparing the
    sup-norm (resp. finite-difference slope) on the whole grid with its value
    on the inner half: linear or faster growth is reported as a failure.
    A2 is fitted as ``<x, b(x)> <= -c1 |x| + c2`` on grid points with
    ``|x| >= rho``.
    """
    if tol <= 0:
        raise ModelError("tol must be positive")
    if grid is None:
        grid = default_audit_grid(spec.dim)
    grid = np.asarray(grid, float).reshape(-1, spec.dim)
    if grid.shape[0] == 0:
        raise ModelError("audit grid is empty")

    checks = []
    constants = {}
    inner = _inner(grid)

    with np.errstate(all="ignore"):
        b = np.asarray(spec.drift(grid), float).reshape(grid.shape)
        a = eval_matrix(spec.diffusion, grid)
        aaT = np.einsum("nij,nkj->nik", a, a)
        gam = eval_matrix(spec.jump_coeff, grid)

    # A1 ------------------------------------------------------------------
    a1_problems = []
    witness = None
    for name, vals in (("b", b), ("aa^T", aaT), ("gamma", gam)):
        bad = _first_nonfinite(np.asarray(vals), grid)
        if bad is not None:
            a1_problems.append(f"{name} non-finite at x={bad}")
            witness = witness or bad
            continue
        flat = np.asarray(vals).reshape(grid.shape[0], -1)
        sup_all = float(np.max(np.linalg.norm(flat, axis=1)))
        sup_in = float(np.max(np.linalg.norm(flat[inner], axis=1)))
        lip_all = _lipschitz_on_grid(flat, grid)
        constants[f"sup_{name}"] = sup_all
        constants[f"lip_{name}"] = lip_all
        if sup_all > 1.5 * sup_in + tol:
            a1_problems.append(f"{name} unbounded (sup grows {sup_in:.3g} -> {sup_all:.3g})")
            witness = witness or tuple(grid[np.argmax(np.linalg.norm(flat, axis=1))])
    if not a1_problems:
        eig_min = float(np.min(np.linalg.eigvalsh(aaT)))
        det_min = float(np.min(np.linalg.det(gam)))
        constants["ellipticity"] = eig_min
        constants["min_det_gamma"] = det_min
        if eig_min < tol:
            i = int(np.argmin(np.linalg.eigvalsh(aaT)[:, 0]))
            a1_problems.append(f"aa^T degenerate (min eigenvalue {eig_min:.3g})")
            witness = tuple(grid[i])
        if det_min <= tol:
            i = int(np.argmin(np.linalg.det(gam)))
            a1_problems.append(f"det(gamma) not positive ({det_min:.3g})")
            witness = witness or tuple(grid[i])
    checks.append(
        AssumptionCheck(
            "A1",
            not a1_problems,
            "; ".join(a1_problems) if a1_problems else "bounded, Lipschitz, elliptic, det(gamma)>0",
            witness,
        )
    )

    # A2 ------------------------------------------------------------------
    r = np.linalg.norm(grid, axis=1)
    far = r >= rho
    if not np.any(far) or not np.all(np.isfinite(b[far])):
        checks.append(AssumptionCheck("A2", False, f"no finite grid points with |x| >= {rho}"))
    else:
        y = np.sum(grid[far] * b[far], axis=1)
        slope, _ = np.polyfit(r[far], y, 1)
        c1 = -float(slope)
        c2 = float(np.max(y + c1 * r[far])) if c1 > 0 else float("inf")
        constants.update(c1=c1, c2=max(c2, tol), rho=rho)
        ok = c1 > tol and np.isfinite(c2)
        worst = tuple(grid[far][np.argmax(y + max(c1, 0) * r[far])])
        checks.append(AssumptionCheck("A2", ok, f"fitted c1={c1:.4g}, c2={c2:.4g} on |x|>={rho}", worst, c1))

    # A3 ------------------------------------------------------------------
    lev = spec.levy
    rr = np.geomspace(1e-3, max(lev.support, 1.0) * 2, 300)
    if spec.dim == 1:
        z = np.concatenate([-rr, rr])[:, None]
        zn = np.abs(z[:, 0])
    else:
        th = np.linspace(0, 2 * np.pi, 48, endpoint=False)
        R, TH = np.meshgrid(rr, th, indexing="ij")
        z = np.stack([R * np.cos(TH), R * np.sin(TH)], -1).reshape(-1, 2)
        zn = R.ravel()
    Fz = np.asarray(lev.density(z), float)
    ratio = Fz * zn ** (spec.dim + lev.alpha)
    ok3 = bool(np.all(np.isfinite(Fz)) and np.all(ratio <= lev.c3 * (1 + 1e-9)) and 0 < lev.alpha < 2)
    i3 = int(np.nanargmax(ratio)) if ratio.size else 0
    checks.append(
        AssumptionCheck("A3", ok3, f"max F(z)|z|^(d+alpha) = {np.nanmax(ratio):.4g} vs c3 = {lev.c3:.4g}",
                        tuple(z[i3]), float(np.nanmax(ratio)))
    )

    # A4 ------------------------------------------------------------------
    if lev.kind == "none" or lev.intensity == 0:
        checks.append(AssumptionCheck("A4", True, "no jumps", value=0.0))
    else:
        radii = [8.0, 16.0, 32.0, 64.0]
        vals = []
        with np.errstate(all="ignore"), _quiet_quad():
            for R_ in radii:
                vals.append(exponential_moment(lev, lev.eps0, R_))
        vals = np.array(vals)
        converged = bool(np.all(np.isfinite(vals)) and abs(vals[-1] - vals[-2]) <= 1e-6 * max(abs(vals[-1]), 1e-300))
        value = float(vals[-1])
        ok4 = converged and value <= lev.c4 * (1 + 1e-9)
        detail = (f"int |z|^2 e^(eps0|z|) F = {value:.4g} <= c4 = {lev.c4:.4g}" if converged
                  else f"exponential moment diverges (radius 32 -> 64: {vals[-2]:.3g} -> {vals[-1]:.3g})")
        checks.append(AssumptionCheck("A4", ok4, detail, value=value))
        constants["A4_integral"] = value

    # A5 ------------------------------------------------------------------
    if abs(lev.alpha - 1.0) > 1e-12 or lev.kind == "none":
        checks.append(AssumptionCheck("A5", True, "alpha != 1, nothing to check"))
    elif spec.dim == 1:
        worst = 0.0
        for lo, hi in ((0.1, 1.0), (0.5, 3.0), (1.0, 10.0)):
            f = lambda s: s * float(lev.density(np.array([s])))
            m = integrate.quad(f, lo, hi)[0] + integrate.quad(f, -hi, -lo)[0]
            worst = max(worst, abs(m))
        checks.append(AssumptionCheck("A5", worst < 1e-8, f"max |int_(r<|z|<R) z F| = {worst:.3g}", value=worst))
    else:
        checks.append(AssumptionCheck("A5", lev.symmetric, "symmetry flag of the measure"))

    # A6 ------------------------------------------------------------------
    if spec.dim == 1:
        order = np.argsort(grid[:, 0])
        xs = grid[order, 0]
        a2 = aaT[order, 0, 0]
        if np.all(np.isfinite(a2)) and xs.size >= 5:
            d1 = np.gradient(a2, xs)
            d2 = np.gradient(d1, xs)
            inner1 = np.abs(xs) <= 0.5 * np.max(np.abs(xs))
            s_all = float(np.max(np.abs(d2)))
            s_in = float(np.max(np.abs(d2[inner1])))
            ok6 = s_all <= 1.5 * s_in + 1e-6 and np.isfinite(s_all)
            checks.append(AssumptionCheck("A6", ok6, f"sup |(a^2)''| = {s_all:.3g}", value=s_all))
        else:
            checks.append(AssumptionCheck("A6", False, "a^2 not finite on grid"))
    return AssumptionReport(tuple(checks), constants)


class _quiet_quad:
    def __enter__(self):
        import warnings

        self._ctx = warnings.catch_warnings()
        self._ctx.__enter__()
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return self

    def __exit__(self, *exc):
        return self._ctx.__exit__(*exc)


def check_c4_condition(a: float, gamma: float, c4: float) -> bool:
    """Whether ``c4 < a^2 / (2 gamma^2 16 28)``, the jump-moment gate of the
    one-dimensional lower-bound construction."""
    if a == 0:
        raise ModelError("a must be nonzero")
    if gamma <= 0:
        raise ModelError("gamma must be positive")
    if c4 <= 0:
        raise ModelError("c4 must be positive")
    return c4 < a * a / (2.0 * gamma * gamma * 16.0 * 28.0)


# ---------------------------------------------------------------------------
# Catalogue
# ---------------------------------------------------------------------------


def _tanh_drift(x):
    return -np.tanh(x)


def _sech2_density_1d(x):
    x = np.asarray(x, float).reshape(-1)
    return 0.5 / np.cosh(x) ** 2


def _sech2_density_2d(x):
    x = np.asarray(x, float).reshape(-1, 2)
    return 0.25 / (np.cosh(x[:, 0]) ** 2 * np.cosh(x[:, 1]) ** 2)


def _build(model_id: str) -> ModelSpec:
    if model_id == "ou_sat_d1":
        return ModelSpec(1, _tanh_drift, 1.0, 1.0, LevyMeasure.none(1), 0.0, model_id, _sech2_density_1d,
                         "b(x) = -tanh(x), a = 1, no jumps; invariant density sech^2(x)/2")
    if model_id == "ou_cpois_d1":
        return ModelSpec(1, _tanh_drift, 1.0, 1.0, LevyMeasure.gaussian_compound_poisson(1.0, 1.0), 0.0, model_id,
                         None, "b(x) = -tanh(x), a = gamma = 1, compound Poisson N(0,1) jumps at rate 1")
    if model_id == "ou_sat_d2":
        return ModelSpec(2, _tanh_drift, 1.0, 1.0, LevyMeasure.none(2), 0.0, model_id, _sech2_density_2d,
                         "b(x) = -tanh(x) componentwise, a = I, no jumps; product sech^2 density")
    if model_id == "ou_cpois_d2":
        return ModelSpec(2, _tanh_drift, 1.0, 1.0, LevyMeasure.gaussian_compound_poisson(1.0, 1.0, dim=2), 0.0,
                         model_id, None, "b(x) = -tanh(x) componentwise, a = gamma = I, N(0,I) jumps at rate 1")
    raise KeyError(f"unknown model id {model_id!r}; known: {', '.join(CATALOGUE)}")


CATALOGUE = ("ou_sat_d1", "ou_cpois_d1", "ou_sat_d2", "ou_cpois_d2")


@lru_cache(maxsize=None)
def get_model(model_id: str) -> ModelSpec:
    """Catalogue model by id (see ``CATALOGUE``)."""
    return _build(model_id)
