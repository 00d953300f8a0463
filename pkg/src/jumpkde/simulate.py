"""Euler-Maruyama simulation of jump-diffusions with compound-Poisson jumps.

Each replication owns a counter-based Philox stream derived from
``SeedSequence([seed, rep])``.  Replications are advanced together in
fixed-size blocks; the block layout depends only on the replication count
and ``SimConfig.block_size``, so results are bit-identical for any number
of worker threads.

Paths are usually too long to keep in memory.  :func:`iter_chunks` streams
the post-burn-in states of a block chunk by chunk, and :func:`run_blocks`
feeds those chunks to an observer (a density accumulator, a path recorder,
...) per block.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .model import ModelSpec, eval_matrix

__all__ = [
    "SimConfig",
    "PathRecord",
    "SimulationError",
    "stream_seed",
    "make_rng",
    "iter_chunks",
    "run_blocks",
    "simulate_path",
    "simulate_ensemble",
    "write_paths_csv",
]


class SimulationError(ArithmeticError):
    """A simulated state became non-finite."""


@dataclass(frozen=True)
class SimConfig:
    """Discretisation and RNG settings.

    Attributes
    ----------
    T : float
        Observation horizon (after burn-in).
    dt : float
        Euler step.
    burn_in : float
        Simulated time discarded before the observation window.
    seed : int
        Base seed; replication ``r`` uses ``SeedSequence([seed, r])``.
    record_every : int
        Thinning of recorded paths (estimators always use every step).
    block_size : int
        Replications advanced together; part of the reproducibility contract.
    chunk_steps : int
        Steps of noise drawn at once per replication.  Like ``block_size`` it
        fixes the order of draws, so changing it changes the paths.
    small_jump_cutoff : float, optional
        Override of the measure's cutoff for infinite-activity jumps; jumps
        below it are dropped.  ``None`` keeps the measure's default.
    """

    T: float
    dt: float = 0.01
    burn_in: float = 10.0
    seed: int = 0
    record_every: int = 1
    block_size: int = 128
    chunk_steps: int = 2048
    small_jump_cutoff: Optional[float] = None

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.record_every < 1 or self.block_size < 1 or self.chunk_steps < 1:
            raise ValueError("record_every, block_size and chunk_steps must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.small_jump_cutoff is not None and self.small_jump_cutoff < 0:
            raise ValueError("small_jump_cutoff must be nonnegative")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def n_burn(self) -> int:
        return int(round(self.burn_in / self.dt))

    def trapezoid_weights(self, k: np.ndarray) -> np.ndarray:
        """Trapezoid weights for sample indices ``k`` in ``0..n_steps``."""
        w = np.full(k.shape, self.dt)
        w[(k == 0) | (k == self.n_steps)] = 0.5 * self.dt
        return w


@dataclass
class PathRecord:
    """A recorded trajectory: times ``t`` (n,) and states ``x`` (n, d)."""

    t: np.ndarray
    x: np.ndarray
    rep: int = 0
    meta: dict = field(default_factory=dict)


def stream_seed(seed: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(rep)])


def make_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(stream_seed(seed, rep)))


def _draw_chunk(spec: ModelSpec, rng: np.random.Generator, m: int, dt: float):
    """Brownian increments and summed jump sizes for ``m`` steps of one replication."""
    d = spec.dim
    dw = rng.standard_normal((m, d)) * np.sqrt(dt)
    jumps = np.zeros((m, d))
    lev = spec.levy
    if lev.sim_rate > 0:
        counts = rng.poisson(lev.sim_rate * dt, m)
        total = int(counts.sum())
        if total:
            sizes = lev.sample_jumps(rng, total)
            np.add.at(jumps, np.repeat(np.arange(m), counts), sizes)
    return dw, jumps


def iter_chunks(spec: ModelSpec, cfg: SimConfig, reps: Sequence[int]) -> Iterator[tuple]:
    """Yield ``(k, states)`` for the post-burn-in samples of a block.

    ``k`` holds sample indices in ``0..cfg.n_steps`` and ``states`` has shape
    ``(len(k), len(reps), d)``.  Sample ``k`` is the state at time ``k*dt``
    after the burn-in.
    """
    reps = list(reps)
    spec = resolve_cutoff(spec, cfg)
    nb, d = len(reps), spec.dim
    rngs = [make_rng(cfg.seed, r) for r in reps]
    x = np.concatenate([spec.initial_states(g, 1) for g in rngs], axis=0)
    dt = cfg.dt
    n_burn, n_states = cfg.n_burn, cfg.n_burn + cfg.n_steps + 1
    const_a, const_g = spec.constant_diffusion, spec.constant_jump_coeff
    comp = spec.levy.compensator_mean * dt
    drift = spec.drift

    s = 0
    dw = np.empty((cfg.chunk_steps, nb, d))
    jm = np.empty((cfg.chunk_steps, nb, d))
    buf = np.empty((cfg.chunk_steps, nb, d))
    while s < n_states:
        m = min(cfg.chunk_steps, n_states - s)
        for j, g in enumerate(rngs):
            dw[:m, j], jm[:m, j] = _draw_chunk(spec, g, m, dt)
        if const_a and const_g:
            gam = spec.jump_coeff
            noise = dw[:m] @ spec.diffusion.T + (jm[:m] - comp) @ gam.T
            for i in range(m):
                buf[i] = x
                x = x + drift(x) * dt + noise[i]
        else:
            for i in range(m):
                buf[i] = x
                a = eval_matrix(spec.diffusion, x)
                g_ = eval_matrix(spec.jump_coeff, x)
                x = (x + drift(x) * dt + np.einsum("nij,nj->ni", a, dw[i])
                     + np.einsum("nij,nj->ni", g_, jm[i] - comp))
        if not np.all(np.isfinite(buf[:m])):
            i, j = np.argwhere(~np.isfinite(buf[:m]).all(axis=2))[0]
            raise SimulationError(
                f"non-finite state in replication {reps[j]} at step {s + i - n_burn} "
                f"(t={(s + i - n_burn) * dt:.6g}, negative means burn-in)"
            )
        lo = max(0, n_burn - s)
        if lo < m:
            yield np.arange(s + lo, s + m) - n_burn, buf[lo:m]
        s += m


def resolve_cutoff(spec: ModelSpec, cfg: SimConfig) -> ModelSpec:
    """Apply ``cfg.small_jump_cutoff`` to an infinite-activity measure."""
    lev = spec.levy
    if lev.infinite_activity:
        cut = lev.cutoff if cfg.small_jump_cutoff is None else cfg.small_jump_cutoff
        if not cut > 0:
            raise ValueError("infinite-activity jumps need small_jump_cutoff > 0")
        if cut != lev.cutoff:
            return replace(spec, levy=lev.with_cutoff(cut))
    return spec


def blocks_for(n_rep: int, block_size: int) -> list:
    return [list(range(b, min(b + block_size, n_rep))) for b in range(0, n_rep, block_size)]


def run_blocks(
    spec: ModelSpec,
    cfg: SimConfig,
    n_rep: int,
    observer_factory: Callable[[list], object],
    workers: int = 1,
) -> list:
    """Stream every block through a fresh observer and return their results.

    ``observer_factory(reps)`` must return an object with ``update(k, states)``
    and ``result()``; results come back in block order.
    """
    if n_rep < 1:
        raise ValueError("n_rep must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def one(reps):
        obs = observer_factory(reps)
        for k, states in iter_chunks(spec, cfg, reps):
            obs.update(k, states)
        return obs.result()

    blocks = blocks_for(n_rep, cfg.block_size)
    if workers == 1 or len(blocks) == 1:
        return [one(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, blocks))


class _Recorder:
    def __init__(self, cfg: SimConfig, reps):
        self.cfg, self.reps = cfg, reps
        self.t, self.x = [], []

    def update(self, k, states):
        keep = (k % self.cfg.record_every) == 0
        self.t.append(k[keep] * self.cfg.dt)
        self.x.append(states[keep].copy())

    def result(self):
        t = np.concatenate(self.t)
        x = np.concatenate(self.x, axis=0)
        return [PathRecord(t, x[:, j, :], rep) for j, rep in enumerate(self.reps)]


def simulate_ensemble(spec: ModelSpec, cfg: SimConfig, n_rep: int, workers: int = 1) -> list:
    """Record ``n_rep`` independent paths (thinned by ``cfg.record_every``)."""
    out = run_blocks(spec, cfg, n_rep, lambda reps: _Recorder(cfg, reps), workers)
    paths = [p for block in out for p in block]
    for p in paths:
        p.meta.update(model_id=spec.model_id, dt=cfg.dt, T=cfg.T, seed=cfg.seed)
    return paths


def simulate_path(spec: ModelSpec, cfg: SimConfig, rep: int = 0) -> PathRecord:
    """Record a single path driven by the stream of replication ``rep``."""
    (path,) = _record(spec, cfg, [rep])
    path.meta.update(model_id=spec.model_id, dt=cfg.dt, T=cfg.T, seed=cfg.seed)
    return path


def _record(spec, cfg, reps):
    rec = _Recorder(cfg, list(reps))
    for k, states in iter_chunks(spec, cfg, reps):
        rec.update(k, states)
    return rec.result()


def write_paths_csv(path: str, record: PathRecord) -> None:
    """Write ``t,x1[,x2]`` rows with round-trip float formatting."""
    d = record.x.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(record.t, record.x):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def read_paths_csv(path: str) -> PathRecord:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PathRecord(data[:, 0], data[:, 1:], meta={"source": os.path.abspath(path)})
