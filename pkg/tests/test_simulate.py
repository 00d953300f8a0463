import math

import numpy as np
import pytest

from jumpkde.model import LevyMeasure, ModelSpec, get_model
from jumpkde.simulate import (
    SimConfig,
    SimulationError,
    read_paths_csv,
    run_blocks,
    simulate_ensemble,
    simulate_path,
    write_paths_csv,
)


def euler_ou_stationary_variance(theta, a, dt, jump_var=0.0):
    """Stationary variance of X' = (1 - theta dt) X + a dW + J (per-step noise variance a^2 dt + jump_var dt)."""
    return (a * a + jump_var) * dt / (1 - (1 - theta * dt) ** 2)


class _SquareMean:
    def __init__(self, cfg, n):
        self.cfg = cfg
        self.acc = np.zeros(n)

    def update(self, k, states):
        self.acc += self.cfg.trapezoid_weights(k) @ states[:, :, 0] ** 2

    def result(self):
        return self.acc / self.cfg.T


@pytest.mark.parametrize("rate", [0.0, 1.0])
def test_euler_ou_variance_oracle(rate):
    dt = 0.05
    lev = LevyMeasure.gaussian_compound_poisson(rate, 0.8) if rate else LevyMeasure.none(1)
    spec = ModelSpec(1, lambda x: -x, 1.0, 1.0, lev, model_id="ou")
    cfg = SimConfig(T=200.0, dt=dt, burn_in=10.0, seed=11, block_size=64)
    per_rep = np.concatenate(run_blocks(spec, cfg, 128, lambda reps: _SquareMean(cfg, len(reps))))
    target = euler_ou_stationary_variance(1.0, 1.0, dt, rate * 0.64)
    se = per_rep.std(ddof=1) / math.sqrt(per_rep.size)
    assert abs(per_rep.mean() - target) < 4 * se


def test_pure_jump_variance():
    lev = LevyMeasure.gaussian_compound_poisson(1.0, 1.0)
    spec = ModelSpec(1, lambda x: 0 * x, 0.0, 1.0, lev)
    cfg = SimConfig(T=10.0, dt=0.1, burn_in=0.0, seed=5, record_every=100)
    ends = np.array([p.x[-1, 0] for p in simulate_ensemble(spec, cfg, 2000)])
    # compound Poisson sum: variance rate*T*s^2 = 10, fourth central moment 3*100 + 10*3
    se = math.sqrt((330 - 100) / ends.size)
    assert abs(ends.var() - 10.0) < 4 * se


def test_bit_identical_across_workers():
    spec = get_model("ou_cpois_d2")
    cfg = SimConfig(T=5.0, dt=0.01, burn_in=1.0, seed=3, block_size=4)
    one = simulate_ensemble(spec, cfg, 10, workers=1)
    four = simulate_ensemble(spec, cfg, 10, workers=4)
    for p, q in zip(one, four):
        assert p.rep == q.rep
        np.testing.assert_array_equal(p.x, q.x)


def test_single_path_matches_ensemble_member():
    spec = get_model("ou_cpois_d1")
    cfg = SimConfig(T=3.0, dt=0.01, burn_in=0.5, seed=9, block_size=3)
    ens = simulate_ensemble(spec, cfg, 7)
    np.testing.assert_array_equal(simulate_path(spec, cfg, rep=5).x, ens[5].x)


def test_streams_differ_between_replications_and_seeds():
    spec = get_model("ou_sat_d1")
    cfg = SimConfig(T=2.0, dt=0.01, seed=1)
    a, b = simulate_ensemble(spec, cfg, 2)
    c = simulate_path(spec, SimConfig(T=2.0, dt=0.01, seed=2))
    assert not np.array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_chunk_size_is_part_of_the_stream_contract():
    spec = get_model("ou_cpois_d1")
    base = SimConfig(T=4.0, dt=0.01, seed=4)
    small = SimConfig(T=4.0, dt=0.01, seed=4, chunk_steps=37)
    np.testing.assert_array_equal(simulate_path(spec, small).x, simulate_path(spec, small).x)
    assert not np.array_equal(simulate_path(spec, base).x, simulate_path(spec, small).x)


def test_record_every_thins():
    spec = get_model("ou_sat_d1")
    cfg = SimConfig(T=1.0, dt=0.01, seed=0, record_every=10)
    p = simulate_path(spec, cfg)
    np.testing.assert_allclose(p.t, np.arange(11) * 0.1)
    assert p.x.shape == (11, 1)


def test_trapezoid_weights_sum_to_horizon():
    cfg = SimConfig(T=7.3, dt=0.01)
    k = np.arange(cfg.n_steps + 1)
    assert cfg.trapezoid_weights(k).sum() == pytest.approx(7.3, rel=1e-12)


def test_csv_roundtrip_is_exact(tmp_path):
    spec = get_model("ou_cpois_d2")
    p = simulate_path(spec, SimConfig(T=1.0, dt=0.01, seed=2))
    f = tmp_path / "p.csv"
    write_paths_csv(str(f), p)
    assert f.read_text().splitlines()[0] == "t,x1,x2"
    q = read_paths_csv(str(f))
    np.testing.assert_array_equal(q.t, p.t)
    np.testing.assert_array_equal(q.x, p.x)


def test_explosion_is_reported():
    spec = ModelSpec(1, lambda x: x**3, 1.0, 1.0, LevyMeasure.none(1), x0=3.0)
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(SimulationError, match="non-finite state in replication 0"):
        simulate_path(spec, SimConfig(T=10.0, dt=0.01, burn_in=0.0))


def test_tempered_stable_simulation_runs():
    lev = LevyMeasure.tempered_stable(0.5, 0.5, 2.0)
    spec = ModelSpec(1, lambda x: -x, 1.0, 1.0, lev)
    p = simulate_path(spec, SimConfig(T=5.0, dt=0.01, seed=1))
    assert np.all(np.isfinite(p.x))
    with pytest.raises(ValueError):
        simulate_path(spec, SimConfig(T=1.0, dt=0.01, small_jump_cutoff=0.0))


@pytest.mark.parametrize(
    "kw",
    [dict(T=0.0), dict(T=1.0, dt=0.0), dict(T=1.0, dt=2.0), dict(T=1.0, burn_in=-1.0), dict(T=1.0, seed=-1),
     dict(T=1.0, record_every=0)],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_run_blocks_validation():
    spec = get_model("ou_sat_d1")
    with pytest.raises(ValueError):
        run_blocks(spec, SimConfig(T=1.0), 0, None)
    with pytest.raises(ValueError):
        run_blocks(spec, SimConfig(T=1.0), 1, None, workers=0)
