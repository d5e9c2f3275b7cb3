"""Acceptance suite: one test per criterion, at the stated tolerances.

Gates 6-8 run desk-scale training and take several minutes in total.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import stats
from scipy.special import j0

from ntnbeam import channel as ch
from ntnbeam import diffnum as dn
from ntnbeam import fft as fft_mod
from ntnbeam.actor import ActorConfig, act, build_actor, forward, sample_action
from ntnbeam.baselines import PrecodeProblem, mrt, sum_rate, wmmse, zf
from ntnbeam.bench import config as cfgmod
from ntnbeam.bench.complexity import wmmse_ops
from ntnbeam.bench.scenarios import run_scenario, transfer_train
from ntnbeam.diffnum import check_gradients
from ntnbeam.learn import desk_config, evaluate, posterior, train, transfer_layers
from ntnbeam.learn.train import _streams, init_actors

TREND_SEEDS = range(10)
TRANSFER_SEEDS = range(5)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _trend_ok(values):
    """``values[s, i]``: seed ``s``, condition ``i`` ordered from the one
    expected highest.  Adjacent steps must not increase, except at most one
    increase that lies within the 95% half-width of the paired difference."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    inversions = 0
    for i in range(values.shape[1] - 1):
        d = values[:, i + 1] - values[:, i]
        if d.mean() <= 0:
            continue
        half = stats.t.ppf(0.975, n - 1) * d.std(ddof=1) / math.sqrt(n)
        if d.mean() > half:
            return False
        inversions += 1
    return inversions <= 1


def test_gate1_numerics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    errs = {}
    x, W, b = rng.standard_normal((3, 5)), rng.standard_normal((4, 5)), rng.standard_normal(4)
    w = rng.standard_normal((3, 4))
    errs["dense"] = check_gradients(lambda a, c, d: dn.tsum(dn.dense(a, c, d) * w), [x, W, b])
    v = rng.standard_normal((3, 4))
    v[np.abs(v) < 1e-3] = 0.5
    errs["relu"] = check_gradients(lambda a: dn.tsum(dn.relu(a) * w), [v])
    errs["softmax"] = check_gradients(lambda a: dn.tsum(dn.softmax(a, axis=1) * w), [v])
    xs = rng.standard_normal((2, 2, 4, 6))
    zr, zi = rng.standard_normal((3, 2, 2, 3)), rng.standard_normal((3, 2, 2, 3))
    ws = rng.standard_normal((2, 3, 4, 6))
    errs["spectral"] = check_gradients(
        lambda a, c, d: dn.tsum(dn.real(dn.ifft2(dn.spectral_multiply(dn.fft2(a), dn.make_complex(c, d)))) * ws),
        [xs, zr, zi])
    mu, ls, eps = rng.standard_normal((2, 3, 4)), rng.standard_normal((2, 3, 1)), rng.standard_normal((2, 3, 4))
    wg = rng.standard_normal((2, 3, 4))

    def gauss(m, s):
        a, lp = dn.gaussian_sample(m, s, eps, batch_dims=1)
        return dn.tsum(a * wg) + dn.tsum(lp)

    errs["gaussian"] = check_gradients(gauss, [mu, ls])
    cfg = ActorConfig(3, 4, modes=(2, 3), width=3, hidden=6)
    actor = build_actor(cfg, rng)
    names = list(actor.params)
    state = rng.standard_normal((2, 2, 3, 4))
    eps_a = {k: rng.standard_normal(m.shape) for k, m in forward(actor, state).mu.items()}

    def full(*ts):
        for n, t in zip(names, ts):
            actor.params[n] = t
        smp = sample_action(forward(actor, state), eps_a)
        return dn.tsum(dn.abs2(smp.W)) + dn.tsum(smp.log_prob) * 0.1

    errs["actor"] = check_gradients(full, [actor.params[n].data.copy() for n in names], h=1e-6)
    elapsed = time.perf_counter() - t0
    assert max(errs.values()) < 1e-4, errs
    assert elapsed < 30.0


def test_gate2_transform():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_rt, worst_pv = 0.0, 0.0
    for shape in [(4, 8), (16, 64), (6, 36), (5, 7), (8, 20)]:
        x = _cn(rng, (3,) + shape)
        X = fft_mod.fft2(x)
        worst_rt = max(worst_rt, np.max(np.abs(fft_mod.ifft2(X) - x)))
        e = np.sum(np.abs(x) ** 2)
        worst_pv = max(worst_pv, abs(np.sum(np.abs(X) ** 2) / (shape[0] * shape[1]) - e) / e)
    assert worst_rt < 1e-10 and worst_pv < 1e-10
    assert time.perf_counter() - t0 < 5.0


def test_gate3_channel_statistics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    n = 100_000
    rho = ch.doppler_rho(1.0, 1.8e9, 0.02)
    s0 = ch.init_nlos(rng, (n,), rho)
    s1 = ch.step_nlos(s0, rng)
    acf = np.mean(s1.nlos * np.conj(s0.nlos)).real / np.mean(np.abs(s0.nlos) ** 2)
    assert abs(acf - rho) < 0.02
    los = ch.steering_vector(0.4, 1.0, 1)
    g = ch.compose_channel(np.broadcast_to(los, (n, 1)), ch.complex_normal(rng, (n, 1)), 10.0, np.ones(n))[:, 0]
    ratio = np.abs(g.mean()) ** 2 / np.var(g)
    assert abs(ratio / 10.0 - 1.0) < 0.05
    L = rng.uniform(1e-12, 1e-10, n)
    h = ch.compose_channel(np.broadcast_to(los, (n, 1)), ch.complex_normal(rng, (n, 1)), 10.0, L)
    for xi in (0.8, 0.6):
        ht = ch.corrupt_csi(h, ch.CsiNoiseModel.additive(xi), rng, np.sqrt(L))
        assert abs(np.mean(np.abs(ht) ** 2) / np.mean(np.abs(h) ** 2) - 1.0) < 0.03
    assert time.perf_counter() - t0 < 60.0


def test_gate4_deterministic_values():
    assert abs(10 * math.log10(ch.large_scale_gain(20e3, 2.7e9)) + 127.09) < 0.01
    assert abs(10 * math.log10(ch.large_scale_gain(2e3, 1.8e9)) + 103.57) < 0.01
    rho = ch.doppler_rho(1.0, 1.8e9, 0.02)
    assert abs(rho - j0(0.754)) < 1e-3 and abs(rho - 0.863) < 1e-3
    mu, var = posterior(1.0, 1.0, 0.0, 1.0, beta=2.0)
    assert abs(var - 2 / 3) < 1e-12 and abs(mu - 4 / 3) < 1e-12


def test_gate5_baselines():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    for _ in range(100):
        U, N = int(rng.integers(1, 6)), 6
        pr = PrecodeProblem(_cn(rng, (U, N)), float(rng.uniform(0.01, 1.0)), 10.0)
        G = pr.H @ zf(pr).T
        off = G - np.diag(np.diag(G))
        assert np.max(np.abs(off)) / np.max(np.abs(np.diag(G))) < 1e-10
        W, trace = wmmse(pr)
        assert np.all(np.diff(trace) >= -1e-9)
        r = sum_rate(pr.H, W, pr.noise)
        assert r >= sum_rate(pr.H, zf(pr), pr.noise) and r >= sum_rate(pr.H, mrt(pr), pr.noise)
    pr = PrecodeProblem(_cn(rng, (1, 8)), 0.1, 5.0)
    closed = math.log2(1 + pr.p_max * np.linalg.norm(pr.H) ** 2 / pr.noise)
    assert abs(sum_rate(pr.H, wmmse(pr)[0], pr.noise) - closed) < 1e-6
    assert time.perf_counter() - t0 < 120.0


@pytest.mark.slow
def test_gate6_learning():
    t0 = time.perf_counter()
    cfg = desk_config(episodes=200, T=50)
    res = train(cfg)
    r = res.rewards
    gain = r[-50:].mean() / r[:10].mean()
    untrained = init_actors(cfg, _streams(cfg.seed)[0])
    trained = evaluate(res.actors, cfg.system, episodes=100, T=cfg.T, seed=1000).per_episode
    base = evaluate(untrained, cfg.system, episodes=100, T=cfg.T, seed=1000).per_episode
    p = stats.ttest_rel(trained, base, alternative="greater").pvalue
    elapsed = time.perf_counter() - t0
    print(f"gain {gain:.3f} trained {trained.mean():.3f} untrained {base.mean():.3f} p {p:.2e} {elapsed:.0f}s")
    assert gain >= 1.3
    assert p < 0.05
    assert elapsed < 600.0


@pytest.mark.slow
def test_gate7_trends():
    xis = (1.0, 0.8, 0.6)
    spacings = (6000.0, 5000.0, 4000.0, 3000.0, 2000.0)
    ranks = (3, 2, 1)
    by_xi, by_l, by_rank = [], [], []
    for seed in TREND_SEEDS:
        cfg = desk_config(seed=seed)
        actors = train(cfg).actors
        ev = dict(episodes=10, T=cfg.T, seed=500 + seed)
        by_xi.append([evaluate(actors, cfg.replace(xi=x).system, **ev).mean for x in xis])
        by_l.append([evaluate(actors, cfg.replace(l=l).system, **ev).mean for l in spacings])
        row = []
        for j in ranks:
            lrd = train(cfg.replace(rank_haps=j)).actors
            row.append(evaluate(lrd, cfg.system, **ev).mean)
            obs = np.random.default_rng(seed).standard_normal((2, cfg.system.U, cfg.system.N_haps))
            W = act(lrd["haps"], obs, np.random.default_rng(seed))
            assert np.linalg.matrix_rank(W) <= j
        by_rank.append(row)
    print("xi", np.mean(by_xi, 0), "l", np.mean(by_l, 0), "rank", np.mean(by_rank, 0))
    assert _trend_ok(by_xi), np.mean(by_xi, 0)
    assert _trend_ok(by_l), np.mean(by_l, 0)
    assert _trend_ok(by_rank), np.mean(by_rank, 0)


@pytest.mark.slow
def test_gate8_transfer():
    rng = np.random.default_rng(4)
    cfg = desk_config()
    src = init_actors(cfg, rng)["laps"]
    tgt = init_actors(cfg, rng)["haps"]
    before = {f"{k}.w": tgt.params[f"{k}.w"].data.copy() for k in tgt.transfer_layers()}
    for layer, (mu_p, var_p) in transfer_layers(src, tgt, beta=2.0).items():
        s, h = src.params[f"{layer}.w"].data, before[f"{layer}.w"]
        want = posterior(s.mean(), s.var(), h.mean(), h.var(), 2.0)
        w = tgt.params[f"{layer}.w"].data
        assert abs(w.mean() - want[0]) < 1e-9 and abs(w.var() - want[1]) < 1e-9
        assert abs(mu_p - want[0]) < 1e-9 and abs(var_p - want[1]) < 1e-9
    full, moved = [], []
    for seed in TRANSFER_SEEDS:
        c = desk_config(seed=seed)
        base = train(c)
        tr = transfer_train(c, base.actors["laps"], beta=1.0)
        ev = dict(episodes=20, T=c.T, seed=700 + seed)
        full.append(evaluate(base.actors, c.system, **ev).haps_rate.mean())
        moved.append(evaluate(tr.actors, c.system, **ev).haps_rate.mean())
    print("full", np.mean(full), "transfer", np.mean(moved))
    assert np.mean(moved) >= 0.9 * np.mean(full)


def test_gate9_complexity():
    assert wmmse_ops(16, 64, 100) == 421068800


def test_gate10_reproducibility(tmp_path):
    tiny = ["train.hidden=32", "train.episodes=3", "train.T=6", "eval.episodes=3", "eval.T=4"]
    for scenario in ("train_curve", "rate_vs_slot", "baseline_only", "sweep_lrd"):
        cfg = cfgmod.resolve({"preset": "desk", "scenario": scenario, "values": [1, 2]}, tiny)
        first = run_scenario(cfg, tmp_path)
        csv_first = (tmp_path / f"{scenario}.csv").read_bytes()
        doc = json.loads((tmp_path / f"{scenario}.manifest.json").read_text())
        again = run_scenario(cfgmod.resolve(doc), tmp_path)
        assert (tmp_path / f"{scenario}.csv").read_bytes() == csv_first
        assert again["csv_sha256"] == first["csv_sha256"]
