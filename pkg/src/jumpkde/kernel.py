"""Compactly supported kernels and the time-average kernel density estimator.

The estimator of the invariant density from a path observed on ``[0, T]`` is

    mu_hat(x) = 1 / (T prod_i h_i) * int_0^T prod_i K((x_i - X_t^i) / h_i) dt,

with the time integral replaced by the trapezoid rule on the simulation grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "KernelSpec",
    "BumpSpec",
    "EstimateConfig",
    "DensityEstimate",
    "DensityAccumulator",
    "build_kernel",
    "build_bump",
    "default_bandwidth",
    "estimate_density",
]


def _poly_moment(k: int) -> float:
    """int_{-1}^{1} (1 - x^2) x^(2k) dx."""
    return 2.0 / (2 * k + 1) - 2.0 / (2 * k + 3)


@dataclass(frozen=True)
class KernelSpec:
    """Even polynomial kernel ``(1 - x^2) * sum_j c_j x^(2j)`` on [-1, 1].

    ``order`` is the number of vanishing moments: ``int K = 1`` and
    ``int x^i K = 0`` for ``i = 1..order``.
    """

    order: int
    coeffs: tuple

    def __call__(self, x):
        x = np.asarray(x, float)
        x2 = x * x
        p = np.zeros_like(x2)
        for c in reversed(self.coeffs):
            p = p * x2 + c
        return np.where(x2 <= 1.0, (1.0 - x2) * p, 0.0)

    def moment(self, i: int) -> float:
        """Exact ``int_{-1}^{1} x^i K(x) dx``."""
        if i % 2:
            return 0.0
        return float(sum(c * _poly_moment(j + i // 2) for j, c in enumerate(self.coeffs)))

    @cached_property
    def sup_norm(self) -> float:
        x = np.linspace(0.0, 1.0, 20001)
        return float(np.max(np.abs(self(x))))

    @cached_property
    def l2_norm_sq(self) -> float:
        t, w = np.polynomial.legendre.leggauss(32)
        return float(np.sum(w * self(t) ** 2))


@lru_cache(maxsize=None)
def build_kernel(order: int) -> KernelSpec:
    """Kernel with ``order`` vanishing moments (``order >= 1``).

    Odd moments vanish by symmetry, so orders ``2m`` and ``2m + 1`` share
    the same kernel.
    """
    order = int(order)
    if order < 1:
        raise ValueError("kernel order must be >= 1")
    n = order // 2 + 1
    A = np.array([[_poly_moment(j + i) for j in range(n)] for i in range(n)])
    rhs = np.zeros(n)
    rhs[0] = 1.0
    return KernelSpec(order, tuple(np.linalg.solve(A, rhs)))


# ---------------------------------------------------------------------------
# zero-mass bump used by the lower-bound hypotheses
# ---------------------------------------------------------------------------


def _psi(x):
    x = np.asarray(x, float)
    inside = np.abs(x) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        out = np.exp(-1.0 / (1.0 - np.where(inside, x * x, 0.0)))
    return np.where(inside, out, 0.0)


@dataclass(frozen=True)
class BumpSpec:
    """Smooth zero-mass bump ``e * psi(x) * (1 - c x^2)`` supported on [-1, 1].

    Here ``psi(x) = exp(-1/(1-x^2))``, so the bump equals 1 at the origin,
    and ``c = int psi / int psi x^2`` makes its integral vanish.
    """

    c: float

    def __call__(self, x):
        x = np.asarray(x, float)
        return math.e * _psi(x) * (1.0 - self.c * x * x)

    def d1(self, x):
        x = np.asarray(x, float)
        inside = np.abs(x) < 1.0
        q = np.where(inside, 1.0 - x * x, 1.0)
        dpsi = _psi(x) * (-2.0 * x / (q * q))
        return np.where(inside, math.e * (dpsi * (1.0 - self.c * x * x) - 2.0 * self.c * x * _psi(x)), 0.0)

    def d2(self, x):
        x = np.asarray(x, float)
        inside = np.abs(x) < 1.0
        q = np.where(inside, 1.0 - x * x, 1.0)
        p = _psi(x)
        dp = p * (-2.0 * x / q**2)
        ddp = p * (4.0 * x * x / q**4 - (2.0 + 6.0 * x * x) / q**3)
        val = ddp * (1.0 - self.c * x * x) - 4.0 * self.c * x * dp - 2.0 * self.c * p
        return np.where(inside, math.e * val, 0.0)

    @cached_property
    def _antiderivative(self):
        xs = np.linspace(-1.0, 1.0, 4001)
        t, w = np.polynomial.legendre.leggauss(20)
        lo, hi = xs[:-1, None], xs[1:, None]
        pieces = np.sum(0.5 * (hi - lo) * w * self(0.5 * (hi - lo) * t + 0.5 * (hi + lo)), axis=1)
        vals = np.concatenate([[0.0], np.cumsum(pieces)])
        return CubicHermiteSpline(xs, vals, self(xs))

    def integral(self, s):
        """``int_{-1}^{s} bump``; zero outside (-1, 1) because the mass vanishes."""
        s = np.asarray(s, float)
        inside = np.abs(s) < 1.0
        return np.where(inside, self._antiderivative(np.clip(s, -1.0, 1.0)), 0.0)

    @cached_property
    def sup_norm(self) -> float:
        x = np.linspace(-1.0, 1.0, 40001)
        return float(np.max(np.abs(self(x))))

    @cached_property
    def l2_norm_sq(self) -> float:
        return float(self._gl(lambda x: self(x) ** 2))

    def _gl(self, fn, n=200):
        t, w = np.polynomial.legendre.leggauss(n)
        return np.sum(w * fn(t))


@lru_cache(maxsize=None)
def build_bump() -> BumpSpec:
    t, w = np.polynomial.legendre.leggauss(400)
    p = _psi(t)
    return BumpSpec(float(np.sum(w * p) / np.sum(w * p * t * t)))


# ---------------------------------------------------------------------------
# estimator
# ---------------------------------------------------------------------------


def default_bandwidth(T: float, dim: int) -> np.ndarray:
    """``T^(-1/2)`` in dimension 1, ``(log T / T)^(1/2)`` per axis in dimension 2."""
    if T <= 1:
        raise ValueError("T must exceed 1")
    if dim == 1:
        return np.array([T**-0.5])
    if dim == 2:
        return np.full(2, math.sqrt(math.log(T) / T))
    raise ValueError("dim must be 1 or 2")


@dataclass(frozen=True)
class EstimateConfig:
    """Kernel order, evaluation points and (optional) bandwidth of an estimate."""

    points: np.ndarray
    kernel_order: int = 1
    bandwidth: Optional[Union[float, Sequence[float]]] = None

    def resolved_bandwidth(self, T: float, dim: int) -> np.ndarray:
        if self.bandwidth is None:
            return default_bandwidth(T, dim)
        h = np.broadcast_to(np.asarray(self.bandwidth, float), (dim,)).copy()
        if np.any(h <= 0):
            raise ValueError("bandwidth must be positive")
        return h


@dataclass
class DensityEstimate:
    """Estimated density at ``points`` (m, d); ``values`` is (m,) or (n_rep, m)."""

    points: np.ndarray
    values: np.ndarray
    bandwidth: np.ndarray
    T: float
    kernel_order: int
    meta: dict = field(default_factory=dict)


def _kernel_sum(kernel, points, states, weights, h, max_elems=1 << 21):
    """``sum_k w_k prod_i K((p_i - X_k^i)/h_i)`` for states (m, nb, d) -> (nb, P)."""
    m, nb, d = states.shape
    P = points.shape[0]
    out = np.zeros((nb, P))
    step = max(1, max_elems // max(1, m * nb))
    for p0 in range(0, P, step):
        pts = points[p0:p0 + step]
        prod = np.ones((m, nb, pts.shape[0]))
        for i in range(d):
            prod *= kernel((pts[None, None, :, i] - states[:, :, None, i]) / h[i])
        out[:, p0:p0 + step] = np.einsum("k,knp->np", weights, prod)
    return out


class DensityAccumulator:
    """Streaming observer (see :func:`jumpkde.simulate.run_blocks`).

    Accumulates the trapezoid-weighted kernel sums of a block of replications
    and returns the estimates, shape ``(n_block, P)``.
    """

    def __init__(self, points, kernel: KernelSpec, bandwidth, sim_cfg, n_block: int):
        self.points = np.asarray(points, float)
        self.kernel = kernel
        self.h = np.asarray(bandwidth, float)
        self.cfg = sim_cfg
        self.acc = np.zeros((n_block, self.points.shape[0]))

    def update(self, k, states):
        w = self.cfg.trapezoid_weights(k)
        self.acc += _kernel_sum(self.kernel, self.points, states, w, self.h)

    def result(self):
        return self.acc / (self.cfg.T * np.prod(self.h))


def estimate_density(path, cfg: EstimateConfig) -> DensityEstimate:
    """Estimate the invariant density from one recorded path.

    Parameters
    ----------
    path : PathRecord
        Times ``t`` (n,) starting at 0 and states ``x`` (n, d).
    cfg : EstimateConfig
    """
    t = np.asarray(path.t, float)
    x = np.asarray(path.x, float)
    if x.ndim == 1:
        x = x[:, None]
    d = x.shape[1]
    points = np.asarray(cfg.points, float).reshape(-1, d)
    if t.size < 2:
        raise ValueError("path needs at least two samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("path contains non-finite states")
    T = float(t[-1] - t[0])
    h = cfg.resolved_bandwidth(T, d)
    dtv = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += 0.5 * dtv
    w[1:] += 0.5 * dtv
    kern = build_kernel(cfg.kernel_order)
    vals = _kernel_sum(kern, points, x[:, None, :], w, h)[0] / (T * np.prod(h))
    return DensityEstimate(points, vals, h, T, cfg.kernel_order)
