"""Monte Carlo campaigns: convergence rates, asymptotic normality and mixing.

All campaigns are driven by :func:`jumpkde.simulate.run_blocks`, so their
outputs depend only on the seeds and the block layout, never on the number
of worker threads.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from .kernel import DensityAccumulator, build_kernel, default_bandwidth
from .model import ModelSpec
from .simulate import SimConfig, run_blocks

__all__ = [
    "RiskReport",
    "CltReport",
    "MixingReport",
    "BlockingReport",
    "ReferenceUnavailable",
    "stationary_density_1d",
    "long_run_reference",
    "reference_density",
    "rate_study",
    "clt_study",
    "estimate_gu",
    "blocking_check",
    "study_seed",
]


class ReferenceUnavailable(ValueError):
    """No closed-form or numerical reference density for the model."""


def study_seed(seed: int, *keys: int) -> int:
    """Derive an independent 63-bit seed from a base seed and integer keys."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(2, np.uint64)[0] >> np.uint64(1))


# ---------------------------------------------------------------------------
# reference densities
# ---------------------------------------------------------------------------


def stationary_density_1d(spec: ModelSpec, half_width: float = 20.0, n: int = 2401):
    """Invariant density of a 1-d model with constant ``a`` and ``gamma``.

    Solves the discretised stationary forward equation

        -(b mu)' + a^2/2 mu'' + int [mu(x - gamma z) - mu(x) + gamma z mu'(x)] F(z) dz = 0

    with central differences on ``[-half_width, half_width]`` and the jump
    integral as a column-normalised convolution matrix (mass is conserved
    exactly on the grid), then imposes ``int mu = 1`` in place of one
    balance row.

    Returns
    -------
    x, mu : ndarray
    """
    if spec.dim != 1 or not (spec.constant_diffusion and spec.constant_jump_coeff):
        raise ReferenceUnavailable("finite-difference reference needs a 1-d model with constant a and gamma")
    lev = spec.levy
    if lev.infinite_activity:
        raise ReferenceUnavailable("finite-difference reference needs finite jump intensity")
    a = float(spec.diffusion[0, 0])
    g = float(spec.jump_coeff[0, 0])
    x = np.linspace(-half_width, half_width, n)
    dx = x[1] - x[0]
    b = np.asarray(spec.drift(x[:, None]), float)[:, 0]
    D1 = (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * dx)
    D2 = (np.eye(n, k=1) - 2 * np.eye(n) + np.eye(n, k=-1)) / dx**2
    A = -D1 @ np.diag(b) + 0.5 * a * a * D2
    if lev.sim_rate > 0:
        # C[i, k]: probability that a jump from x_k lands in cell i
        diff = (x[:, None] - x[None, :]) / g
        C = lev.density(diff[..., None]) * dx / abs(g)
        C /= C.sum(axis=0, keepdims=True)
        A += lev.sim_rate * (C - np.eye(n)) + g * float(lev.compensator_mean[0]) * D1
    # the generator has a one-dimensional kernel: swap one (redundant) balance
    # row for the normalisation
    A[n // 2] = dx
    rhs = np.zeros(n)
    rhs[n // 2] = 1.0
    return x, np.linalg.solve(A, rhs)


class _BatchObserver:
    """Kernel sums per time batch of a single replication (for batch-means SE)."""

    def __init__(self, points, kernel, h, cfg, n_batches):
        self.points, self.kernel, self.h, self.cfg = points, kernel, h, cfg
        self.edges = np.linspace(0, cfg.n_steps + 1, n_batches + 1).astype(int)
        self.acc = np.zeros((n_batches, points.shape[0]))

    def update(self, k, states):
        from .kernel import _kernel_sum

        w = self.cfg.trapezoid_weights(k)
        batch = np.searchsorted(self.edges, k, side="right") - 1
        for bi in np.unique(batch):
            sel = batch == bi
            self.acc[bi] += _kernel_sum(self.kernel, self.points, states[sel], w[sel], self.h)[0]

    def result(self):
        return self.acc


def long_run_reference(
    spec: ModelSpec,
    x,
    T: float = 1e6,
    dt: float = 0.01,
    seed: int = 0,
    cache_dir: Optional[str] = None,
    n_batches: int = 50,
):
    """Reference density from one long run with ``h = T^{-1/2}``.

    The standard error comes from batch means.  Results are cached in
    ``cache_dir`` (when given) under a key built from the model id and all
    run parameters.

    Returns
    -------
    mu, se : ndarray
    """
    pts = np.asarray(x, float).reshape(-1, spec.dim)
    key = json.dumps({"model": spec.model_id, "x": pts.tolist(), "T": T, "dt": dt, "seed": seed, "nb": n_batches})
    path = None
    if cache_dir is not None:
        digest = hashlib.sha256(key.encode()).hexdigest()[:16]
        path = os.path.join(cache_dir, f"reference_{spec.model_id}_{digest}.npz")
        if os.path.exists(path):
            with np.load(path) as z:
                return z["mu"], z["se"]
    cfg = SimConfig(T=T, dt=dt, seed=seed, block_size=1)
    h = default_bandwidth(T, spec.dim) if spec.dim == 1 else np.full(spec.dim, T ** (-1 / (2 + spec.dim)))
    kern = build_kernel(1)
    (sums,) = run_blocks(spec, cfg, 1, lambda reps: _BatchObserver(pts, kern, h, cfg, n_batches))
    norm = np.prod(h)
    blen = np.diff(np.linspace(0, T, n_batches + 1))
    per_batch = sums / (blen[:, None] * norm)
    mu = sums.sum(axis=0) / (T * norm)
    se = per_batch.std(axis=0, ddof=1) / math.sqrt(n_batches)
    if path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        np.savez(path, mu=mu, se=se, key=key)
    return mu, se


def reference_density(spec: ModelSpec, x) -> float:
    """Closed form if the model carries one, else the finite-difference solve."""
    pts = np.asarray(x, float).reshape(-1, spec.dim)
    if spec.density is not None:
        return float(spec.density(pts)[0])
    if spec.dim == 1:
        grid, mu = stationary_density_1d(spec)
        return float(np.interp(pts[0, 0], grid, mu))
    raise ReferenceUnavailable(
        f"no reference density for model {spec.model_id!r}; pass `reference=` "
        "(for instance from long_run_reference)"
    )


# ---------------------------------------------------------------------------
# rate study
# ---------------------------------------------------------------------------


@dataclass
class RiskReport:
    """Per-horizon risk decomposition at one point and the fitted log-log slope."""

    T_grid: np.ndarray
    bandwidth: np.ndarray
    mse: np.ndarray
    bias2: np.ndarray
    variance: np.ndarray
    se: np.ndarray
    n_rep: int
    fitted_slope: float
    slope_se: float
    reference: float
    dim: int
    estimates: list = field(default_factory=list, repr=False)

    @property
    def T_var(self) -> np.ndarray:
        return self.T_grid * self.variance

    @property
    def compensated(self) -> np.ndarray:
        """``mse T / log T``, flat under the two-dimensional rate."""
        return self.mse * self.T_grid / np.log(self.T_grid)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["T", "h", "n_rep", "mse", "bias2", "variance", "se", "T_var", "mse_T_over_logT",
                        "fitted_slope", "slope_se"])
            for i, T in enumerate(self.T_grid):
                w.writerow([repr(float(T)), repr(float(self.bandwidth[i])), self.n_rep, repr(float(self.mse[i])),
                            repr(float(self.bias2[i])), repr(float(self.variance[i])), repr(float(self.se[i])),
                            repr(float(self.T_var[i])), repr(float(self.compensated[i])),
                            repr(float(self.fitted_slope)), repr(float(self.slope_se))])


def _replicate_estimates(spec, cfg, points, kern, h, n_rep, workers):
    blocks = run_blocks(spec, cfg, n_rep, lambda reps: DensityAccumulator(points, kern, h, cfg, len(reps)), workers)
    return np.concatenate(blocks, axis=0)


def rate_study(
    spec: ModelSpec,
    T_grid: Sequence[float],
    x=0.0,
    n_rep: int = 200,
    seed: int = 0,
    kernel_order: int = 1,
    reference: Optional[float] = None,
    dt: float = 0.002,
    burn_in: float = 10.0,
    workers: int = 1,
) -> RiskReport:
    """Mean squared error of the estimator at ``x`` across horizons.

    Parameters
    ----------
    spec : ModelSpec
    T_grid : sequence of float
        Increasing horizons, geometric with ratio >= 2, at least 4 of them.
    x : float or array
        Evaluation point.
    reference : float, optional
        True density at ``x``; resolved by :func:`reference_density` if omitted.
    dt : float
        Euler step.  The discretisation adds a variance term of order
        ``dt / sqrt(T)`` to ``T Var``, so the default is finer than the
        simulation default.

    Returns
    -------
    RiskReport
        Bandwidths follow :func:`jumpkde.kernel.default_bandwidth`.
    """
    T_grid = np.asarray(T_grid, float)
    if T_grid.size < 4:
        raise ValueError("T_grid needs at least 4 horizons")
    if np.any(T_grid[1:] / T_grid[:-1] < 2 - 1e-12):
        raise ValueError("T_grid must be geometric with ratio >= 2")
    if n_rep < 2:
        raise ValueError("n_rep must be >= 2")
    pts = np.asarray(x, float).reshape(1, spec.dim)
    mu = reference_density(spec, pts) if reference is None else float(reference)
    kern = build_kernel(kernel_order)
    mse, bias2, var, se, hs, ests = [], [], [], [], [], []
    for i, T in enumerate(T_grid):
        cfg = SimConfig(T=float(T), dt=dt, burn_in=burn_in, seed=study_seed(seed, i))
        h = default_bandwidth(T, spec.dim)
        est = _replicate_estimates(spec, cfg, pts, kern, h, n_rep, workers)[:, 0]
        err2 = (est - mu) ** 2
        mse.append(err2.mean())
        bias2.append((est.mean() - mu) ** 2)
        var.append(est.var())
        se.append(err2.std(ddof=1) / math.sqrt(n_rep))
        hs.append(h[0])
        ests.append(est)
    mse, se = np.array(mse), np.array(se)
    slope, slope_se = _weighted_slope(np.log(T_grid), np.log(mse), se / mse)
    return RiskReport(T_grid, np.array(hs), mse, np.array(bias2), np.array(var), se, n_rep, slope, slope_se,
                      mu, spec.dim, ests)


def _weighted_slope(x, y, sy):
    w = 1.0 / np.maximum(sy, 1e-300) ** 2
    X = np.stack([np.ones_like(x), x], axis=1)
    cov = np.linalg.inv(X.T @ (w[:, None] * X))
    beta = cov @ (X.T @ (w * y))
    return float(beta[1]), float(math.sqrt(cov[1, 1]))


# ---------------------------------------------------------------------------
# mixing: g_u and the long-run covariance
# ---------------------------------------------------------------------------


@dataclass
class MixingReport:
    """Lag cross-covariances of kernel-smoothed occupation and their integrals.

    ``ghat[i, j, l]`` estimates ``g_u(x_i, y_j)`` at ``u = u_grid[l]``, with
    standard errors ``ghat_se`` from the spread across independent paths.
    ``sigma[i, j]`` is the two-sided integral ``int_{-U}^{U}`` of the lag
    covariance, the long-run covariance of ``sqrt(T) mu_hat``.
    """

    x_list: np.ndarray
    y_list: np.ndarray
    u_grid: np.ndarray
    ghat: np.ndarray
    ghat_se: np.ndarray
    rho_hat: np.ndarray
    wcl1_integral: np.ndarray
    wcl2_integral: np.ndarray
    sigma: np.ndarray
    sigma_se: np.ndarray
    tail_residual: np.ndarray
    u0: float
    bandwidth: float
    n_paths: int

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "u", "ghat", "ghat_se"])
            for i, xv in enumerate(self.x_list):
                for j, yv in enumerate(self.y_list):
                    for l, u in enumerate(self.u_grid):
                        w.writerow([repr(float(xv)), repr(float(yv)), repr(float(u)),
                                    repr(float(self.ghat[i, j, l])), repr(float(self.ghat_se[i, j, l]))])


class _SeriesObserver:
    """Kernel series ``K_h(x - X_t)`` of every replication of a block."""

    def __init__(self, points, kernel, h):
        self.points, self.kernel, self.h = points, kernel, h
        self.chunks = []

    def update(self, k, states):
        u = (self.points[None, None, :] - states[:, :, 0, None]) / self.h
        self.chunks.append(self.kernel(u) / self.h)

    def result(self):
        return np.concatenate(self.chunks, axis=0)  # (N, nb, P)


def _lag_crosscov(A, max_lag):
    """``C[p, q, l] = mean_s (A_p(s) - m_p)(A_q(s + l) - m_q)`` for lags 0..max_lag."""
    N, P = A.shape
    A = A - A.mean(axis=0)
    nfft = 1 << int(math.ceil(math.log2(N + max_lag + 1)))
    Fa = np.fft.rfft(A, nfft, axis=0)
    out = np.empty((P, P, max_lag + 1))
    norm = N - np.arange(max_lag + 1)
    for p in range(P):
        for q in range(P):
            c = np.fft.irfft(np.conj(Fa[:, p]) * Fa[:, q], nfft)[: max_lag + 1]
            out[p, q] = c / norm
    return out


def estimate_gu(
    spec: ModelSpec,
    x_list,
    y_list,
    u_grid,
    n_rep: int = 20,
    seed: int = 0,
    T_path: float = 2000.0,
    dt: float = 0.01,
    h: Optional[float] = None,
    kernel_order: int = 1,
    u0: float = 2.0,
    min_pairs: int = 100,
    workers: int = 1,
) -> MixingReport:
    """Estimate ``g_u(x, y) = mu(x) p_u(x, y) - mu(x) mu(y)`` from stationary pairs.

    ``mu_hat(x) p_hat_u(x, y)`` is the kernel estimate of the joint density
    of ``(X_s, X_{s+u})`` harvested along ``n_rep`` independent paths of
    length ``T_path``; subtracting ``mu_hat(x) mu_hat(y)`` gives the lag-``u``
    cross-covariance of the kernel series, computed by FFT.

    Raises
    ------
    ValueError
        For d != 1, lags outside ``(0, T_path/2]`` or fewer than
        ``min_pairs`` samples in some kernel window.
    """
    if spec.dim != 1:
        raise ValueError("estimate_gu is one-dimensional")
    x_list = np.atleast_1d(np.asarray(x_list, float))
    y_list = np.atleast_1d(np.asarray(y_list, float))
    u_grid = np.atleast_1d(np.asarray(u_grid, float))
    if np.any(u_grid < 0) or u_grid.max() > T_path / 2:
        raise ValueError("u_grid must lie in [0, T_path/2]")
    h = T_path ** -0.4 if h is None else float(h)
    pts = np.unique(np.concatenate([x_list, y_list]))
    kern = build_kernel(kernel_order)
    cfg = SimConfig(T=T_path, dt=dt, seed=seed, block_size=8)
    series = run_blocks(spec, cfg, n_rep, lambda reps: _SeriesObserver(pts, kern, h), workers)
    series = np.concatenate(series, axis=1)  # (N, n_rep, P)
    hits = np.min((series > 0).sum(axis=0))
    if hits < min_pairs:
        raise ValueError(f"only {hits} samples fall in some kernel window; at least {min_pairs} are required "
                         "(increase T_path, n_rep or the bandwidth)")
    lags = np.round(u_grid / dt).astype(int)
    L = int(max(lags.max(), 1))
    per_path = np.stack([_lag_crosscov(series[:, r, :], L) for r in range(n_rep)])  # (R, P, P, L+1)
    ix = np.searchsorted(pts, x_list)
    iy = np.searchsorted(pts, y_list)
    C = per_path[:, ix][:, :, iy]  # (R, nx, ny, L+1)
    Cyx = np.swapaxes(per_path[:, iy][:, :, ix], 1, 2)  # C_yx(l) = cov(A_y(s), A_x(s+l))
    ghat = C[..., lags].mean(axis=0)
    ghat_se = C[..., lags].std(axis=0, ddof=1) / math.sqrt(n_rep)
    # two-sided trapezoid integral of the lag covariance over [-L dt, L dt]
    tw = np.ones(L + 1)
    tw[-1] = 0.5
    sig_paths = dt * (C[..., 0] + np.sum(tw[1:] * (C[..., 1:] + Cyx[..., 1:]), axis=-1))
    sigma = sig_paths.mean(axis=0)
    sigma_se = sig_paths.std(axis=0, ddof=1) / math.sqrt(n_rep)

    mean_abs = np.abs(C.mean(axis=0))
    ul = np.arange(L + 1) * dt
    first = ul <= u0
    wcl1 = trapezoid(mean_abs[..., first], ul[first], axis=-1)
    second = ul >= u0
    wcl2 = trapezoid(mean_abs[..., second], ul[second], axis=-1) if L * dt > u0 else np.zeros(mean_abs.shape[:2])
    rho = np.full(mean_abs.shape[:2], np.nan)
    resid = np.zeros(mean_abs.shape[:2])
    se_all = C.std(axis=0, ddof=1) / math.sqrt(n_rep)
    for i in range(mean_abs.shape[0]):
        for j in range(mean_abs.shape[1]):
            sig = (ul > u0) & (mean_abs[i, j] > 3 * se_all[i, j]) & (mean_abs[i, j] > 0)
            if sig.sum() >= 5:
                slope, icpt = np.polyfit(ul[sig], np.log(mean_abs[i, j][sig]), 1)
                rho[i, j] = -slope
                if slope < 0:
                    resid[i, j] = math.exp(icpt + slope * ul[-1]) / -slope
    return MixingReport(x_list, y_list, u_grid, ghat, ghat_se, rho, wcl1, wcl2, sigma, sigma_se, resid, u0, h, n_rep)


# ---------------------------------------------------------------------------
# CLT study
# ---------------------------------------------------------------------------


@dataclass
class CltReport:
    """Empirical covariance of ``sqrt(T)(mu_hat - mean)`` versus the long-run covariance."""

    points: np.ndarray
    n_rep: int
    T: float
    bandwidth: float
    empirical_cov: np.ndarray
    empirical_cov_se: np.ndarray
    sigma_hat: np.ndarray
    sigma_hat_se: np.ndarray
    normality_pvalues: np.ndarray
    scaled: np.ndarray = field(repr=False, default=None)

    def z_scores(self) -> np.ndarray:
        """``(Sigma_emp - sigma_hat) / combined SE`` entrywise."""
        return (self.empirical_cov - self.sigma_hat) / np.sqrt(self.empirical_cov_se**2 + self.sigma_hat_se**2)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "x_i", "x_j", "empirical_cov", "empirical_cov_se", "sigma_hat", "sigma_hat_se",
                        "ks_pvalue_i"])
            m = len(self.points)
            for i in range(m):
                for j in range(m):
                    w.writerow([i, j, repr(float(self.points[i])), repr(float(self.points[j])),
                                repr(float(self.empirical_cov[i, j])), repr(float(self.empirical_cov_se[i, j])),
                                repr(float(self.sigma_hat[i, j])), repr(float(self.sigma_hat_se[i, j])),
                                repr(float(self.normality_pvalues[i]))])


def clt_study(
    spec: ModelSpec,
    T: float,
    points,
    n_rep: int = 500,
    epsilon: float = 0.1,
    seed: int = 0,
    kernel_order: int = 1,
    dt: float = 0.01,
    gu_paths: int = 20,
    gu_T: float = 2000.0,
    u_max: float = 20.0,
    workers: int = 1,
) -> CltReport:
    """Check asymptotic normality of ``sqrt(T)(mu_hat(x_i) - E mu_hat(x_i))``.

    The bandwidth is ``T^{-(1/2 - epsilon)}``; ``E mu_hat`` is replaced by the
    across-replication mean.  ``sigma_hat`` comes from :func:`estimate_gu`
    on ``gu_paths`` independent paths with the same bandwidth.
    """
    if spec.dim != 1:
        raise ValueError("clt_study is one-dimensional")
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    if n_rep < 100:
        raise ValueError("n_rep must be >= 100 for a usable covariance estimate")
    pts = np.atleast_1d(np.asarray(points, float))
    if len(np.unique(pts)) != len(pts):
        raise ValueError("points must be distinct")
    h = T ** -(0.5 - epsilon)
    kern = build_kernel(kernel_order)
    cfg = SimConfig(T=T, dt=dt, seed=study_seed(seed, 0))
    est = _replicate_estimates(spec, cfg, pts[:, None], kern, np.array([h]), n_rep, workers)
    Z = math.sqrt(T) * (est - est.mean(axis=0))
    emp = Z.T @ Z / (n_rep - 1)
    # SE of a sample covariance under normality: sqrt((S_ij^2 + S_ii S_jj)/(n-1))
    d = np.diag(emp)
    if np.any(d <= 0):
        raise ValueError(f"estimates at {pts[d <= 0].tolist()} never vary; the path does not reach those points")
    emp_se = np.sqrt((emp**2 + np.outer(d, d)) / (n_rep - 1))
    pvals = np.array([stats.kstest(Z[:, i] / math.sqrt(d[i]), "norm").pvalue for i in range(len(pts))])
    mix = estimate_gu(spec, pts, pts, [u_max], n_rep=gu_paths, seed=study_seed(seed, 1), T_path=gu_T, dt=dt, h=h,
                      kernel_order=kernel_order, workers=workers)
    return CltReport(pts, n_rep, T, h, emp, emp_se, mix.sigma, mix.sigma_se, pvals, Z)


# ---------------------------------------------------------------------------
# blocking
# ---------------------------------------------------------------------------


@dataclass
class BlockingReport:
    """Block sums ``Y[r, i, p]`` and the partial averages ``(1/(b Delta)) E[S_b^p S_b^q]``."""

    points: np.ndarray
    delta: float
    block_sums: np.ndarray
    partial: np.ndarray
    partial_se: np.ndarray


def blocking_check(paths, points, delta: float, h: float, kernel_order: int = 1, center=None) -> BlockingReport:
    """Split each path into blocks of length ``delta`` and accumulate block sums.

    ``Y_i = int_{block i} (K_h(x - X_t) - c) dt`` with ``c`` the per-point
    centring (the pooled mean occupation by default).  ``partial[b-1, p, q]``
    averages ``S_b^p S_b^q / (b delta)`` over paths, where ``S_b`` is the sum
    of the first ``b`` blocks; it approaches the long-run covariance.
    """
    if not 1 <= delta < 2:
        raise ValueError("block length must lie in [1, 2)")
    paths = [paths] if not isinstance(paths, (list, tuple)) else list(paths)
    pts = np.atleast_1d(np.asarray(points, float))
    kern = build_kernel(kernel_order)
    series = []
    for p in paths:
        t = np.asarray(p.t, float)
        if t[-1] - t[0] < 2:
            raise ValueError("path length must be at least 2")
        dtv = np.diff(t)
        if not np.allclose(dtv, dtv[0]):
            raise ValueError("blocking needs a uniform time grid")
        A = kern((pts[None, :] - np.asarray(p.x)[:, :1]) / h) / h
        series.append((t - t[0], A, dtv[0]))
    if center is None:
        center = np.mean([A.mean(axis=0) for _, A, _ in series], axis=0)
    center = np.broadcast_to(np.asarray(center, float), pts.shape)
    n = min(int(math.floor(t[-1] / delta)) for t, _, _ in series)
    Y = np.zeros((len(series), n, len(pts)))
    for r, (t, A, dt) in enumerate(series):
        idx = np.minimum((t / delta).astype(int), n)
        w = np.full(t.shape, dt)
        w[0] = w[-1] = 0.5 * dt
        contrib = w[:, None] * (A - center)
        for p in range(len(pts)):
            Y[r, :, p] = np.bincount(idx, weights=contrib[:, p], minlength=n + 1)[:n]
    S = np.cumsum(Y, axis=1)
    prod = S[:, :, :, None] * S[:, :, None, :] / (delta * np.arange(1, n + 1))[None, :, None, None]
    partial = prod.mean(axis=0)
    se = prod.std(axis=0, ddof=1) / math.sqrt(len(series)) if len(series) > 1 else np.full(partial.shape, np.nan)
    return BlockingReport(pts, delta, Y, partial, se)
