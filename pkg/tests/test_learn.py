import json

import numpy as np
import pytest

from ntnbeam import diffnum as dn
from ntnbeam.actor import ActorConfig, build_actor, forward, sample_action
from ntnbeam.diffnum import Adam, Tape
from ntnbeam.learn import (
    Episode,
    ReplayBuffer,
    SystemConfig,
    Transition,
    actor_loss,
    desk_config,
    evaluate,
    evaluate_baseline,
    load_checkpoint,
    posterior,
    regenerate_batch,
    save_checkpoint,
    surrogate_reward,
    train,
    transfer_layers,
)
from ntnbeam.learn.checkpoint import CheckpointError
from ntnbeam.learn.env import planes_to_complex
from ntnbeam.learn.train import fno_parameter_names, init_actors

TINY = dict(hidden=16, width=4, episodes=2, T=4)


def _states(rng, b, U, N):
    return rng.standard_normal((b, 2, U, N)) * 1e-6


class TestBuffer:
    def test_fifo_and_counts(self, rng):
        buf = ReplayBuffer(3)
        for i in range(5):
            buf.push(Transition(np.zeros(1), np.zeros(1), float(i)))
        assert len(buf) == 3
        assert [t.reward for t in buf.contents()] == [2.0, 3.0, 4.0]
        got = buf.sample(3, rng)
        assert sorted(t.reward for t in got) == [2.0, 3.0, 4.0]
        assert buf.transactions == 5 + 3

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            ReplayBuffer(0)
        with pytest.raises(ValueError):
            ReplayBuffer(2).sample(1, rng)


class TestEpisode:
    def test_shapes_and_power(self, rng):
        sysc = SystemConfig(B=2, K=2, N_laps=4, N_haps=8)
        ep = Episode(sysc, rng)
        snap = ep.channels()
        assert snap.H_laps.shape == (2, 4, 4) and snap.H_haps.shape == (4, 8)
        obs = ep.observe(snap)
        assert obs.laps.shape == (2, 2, 2, 4) and obs.haps.shape == (2, 4, 8)
        np.testing.assert_allclose(planes_to_complex(obs.laps[1]), snap.H_laps[1, 2:4])
        ep.step()
        assert ep.t == 1

    def test_stream_determinism(self):
        sysc = SystemConfig(B=2, K=2, N_laps=4, N_haps=8, csi="additive", xi=0.8)
        a = Episode(sysc, np.random.default_rng(3))
        b = Episode(sysc, np.random.default_rng(3))
        np.testing.assert_array_equal(a.observe(a.channels()).haps, b.observe(b.channels()).haps)


class TestLoss:
    def _actor(self, rng, U=2, N=4):
        return build_actor(ActorConfig.fitted(U, N, hidden=8, width=3), rng)

    def test_surrogate_matches_linkrate(self, rng):
        H = (rng.standard_normal((1, 3, 4)) + 1j * rng.standard_normal((1, 3, 4))) * 1e-5
        W = rng.standard_normal((1, 3, 4)) + 1j * rng.standard_normal((1, 3, 4))
        r = surrogate_reward(dn.Tensor(W), H, 10.0, 1e-10).data
        Wn = W[0] * np.sqrt(10.0 / np.sum(np.abs(W) ** 2))
        G = np.abs(H[0] @ Wn.T) ** 2
        sig = np.diag(G)
        want = np.mean(np.log2(1 + sig / (G.sum(axis=1) - sig + 1e-10)))
        np.testing.assert_allclose(r, [want], rtol=1e-12)

    def test_gamma_zero_is_negative_reward(self, rng):
        actor = self._actor(rng)
        s = _states(rng, 3, 2, 4)
        eps = {k: rng.standard_normal(v.shape) for k, v in forward(actor, s).mu.items()}
        loss, info = actor_loss(s, actor, 0.0, 40.0, 1e-13, eps)
        np.testing.assert_allclose(float(loss.data), -np.mean(info["reward"]))

    def test_componentwise(self, rng):
        actor = self._actor(rng)
        s = _states(rng, 1, 2, 4)
        eps = {k: rng.standard_normal(v.shape) for k, v in forward(actor, s).mu.items()}
        smp = sample_action(forward(actor, s), eps)
        r = surrogate_reward(smp.W, planes_to_complex(s), 40.0, 1e-13).data
        loss, _ = actor_loss(s, actor, 0.4, 40.0, 1e-13, eps, entropy="sum")
        np.testing.assert_allclose(float(loss.data), 0.4 * smp.log_prob.data[0] - r[0])
        loss_m, _ = actor_loss(s, actor, 0.4, 40.0, 1e-13, eps, entropy="mean")
        np.testing.assert_allclose(float(loss_m.data), 0.4 * smp.log_prob.data[0] / 16 - r[0])

    def test_gradient_through_surrogate(self, rng):
        # one user: gradient of the loss w.r.t. a head mean
        H = (rng.standard_normal((1, 1, 3)) + 1j * rng.standard_normal((1, 1, 3)))
        ls = np.full((1, 1, 1), -1.0)
        er, ei = rng.standard_normal((1, 1, 3)), rng.standard_normal((1, 1, 3))

        def build(mr, mi):
            a, lpa = dn.gaussian_sample(mr, ls, er, batch_dims=1)
            b, lpb = dn.gaussian_sample(mi, ls, ei, batch_dims=1)
            r = surrogate_reward(dn.make_complex(a, b), H, 1.0, 1.0)
            return dn.mean((lpa + lpb) * 0.4 - r)

        err = dn.check_gradients(build, [rng.standard_normal((1, 1, 3)), rng.standard_normal((1, 1, 3))])
        assert err < 1e-3

    def test_empty_batch(self, rng):
        with pytest.raises(ValueError):
            actor_loss(np.zeros((0, 2, 2, 4)), self._actor(rng), 0.4, 1.0, 1.0, rng)

    @pytest.mark.parametrize("clamp", ["hard", "soft"])
    def test_entropy_raises_log_std(self, clamp):
        # per-coordinate weighting; the summed form drives both runs to the clamp here
        s = _states(np.random.default_rng(1), 8, 2, 4)
        entropy = "mean"
        out = {}
        for gamma in (0.1, 0.4):
            actor = build_actor(ActorConfig.fitted(2, 4, hidden=8, width=3, clamp=clamp), np.random.default_rng(0))
            opt = Adam(actor.params, lr=1e-2)
            r = np.random.default_rng(2)
            for _ in range(150):
                opt.zero_grad()
                with Tape() as tape:
                    loss, info = actor_loss(s, actor, gamma, 40.0, 1e-13, r, entropy)
                tape.backward(loss)
                opt.step()
            out[gamma] = info["log_std"]
        assert out[0.4] > out[0.1]


class TestTransfer:
    def test_posterior_example(self):
        mu, var = posterior(1.0, 1.0, 0.0, 1.0, beta=2.0)
        assert abs(var - 2 / 3) < 1e-12 and abs(mu - 4 / 3) < 1e-12

    def test_posterior_errors(self):
        with pytest.raises(ValueError):
            posterior(0.0, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            posterior(0.0, 1.0, 0.0, 1.0, beta=0.0)

    def test_layer_moments(self, rng):
        src = build_actor(ActorConfig.fitted(2, 4, hidden=16), rng)
        tgt = build_actor(ActorConfig.fitted(4, 8, modes=(8, 20), hidden=16), rng)
        z_before = tgt.params["fno.z_re"].data.copy()
        b_before = tgt.params["hidden.b"].data.copy()
        like = {f"{k}.w": tgt.params[f"{k}.w"].data.copy() for k in tgt.transfer_layers()}
        moments = transfer_layers(src, tgt, beta=1.5)
        for layer, (mu_p, var_p) in moments.items():
            s, h = src.params[f"{layer}.w"].data, like[f"{layer}.w"]
            want = posterior(s.mean(), s.var(), h.mean(), h.var(), 1.5)
            np.testing.assert_allclose((mu_p, var_p), want, rtol=1e-12)
            w = tgt.params[f"{layer}.w"].data
            assert abs(w.mean() - mu_p) < 1e-9 and abs(w.var() - var_p) < 1e-9
            z = (h - h.mean()) / h.std()
            np.testing.assert_allclose((w - w.mean()) / w.std(), z, atol=1e-9)
        np.testing.assert_array_equal(tgt.params["fno.z_re"].data, z_before)
        np.testing.assert_array_equal(tgt.params["hidden.b"].data, b_before)


class TestTrain:
    def test_zero_updates(self):
        cfg = desk_config(**{**TINY, "episodes": 1, "eta": 10})
        res = train(cfg)
        ref = init_actors(cfg, np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(4)[0]))
        assert res.updates == 0
        for k in ("laps", "haps"):
            for n, t in res.actors[k].params.items():
                np.testing.assert_array_equal(t.data, ref[k].params[n].data)

    def test_deterministic(self):
        a = train(desk_config(**TINY))
        b = train(desk_config(**TINY))
        np.testing.assert_array_equal(a.rewards, b.rewards)
        assert a.updates == 2
        assert a.buffers["laps"].pushes == 2 * 4 * 2 and a.buffers["haps"].pushes == 2 * 4

    def test_frozen_layer_untouched(self):
        cfg = desk_config(**TINY)
        base = train(cfg)
        res = train(cfg, actors=base.actors, trainable={"laps": [], "haps": fno_parameter_names(base.actors["haps"])})
        for n, t in res.actors["laps"].params.items():
            np.testing.assert_array_equal(t.data, base.actors["laps"].params[n].data)
        np.testing.assert_array_equal(res.actors["haps"].params["hidden.w"].data,
                                      base.actors["haps"].params["hidden.w"].data)
        assert np.any(res.actors["haps"].params["fno.z_re"].data != base.actors["haps"].params["fno.z_re"].data)

    def test_regenerate_mode(self, rng):
        cfg = desk_config(**TINY, mode="regenerate", batch=3)
        res = train(cfg)
        assert res.buffers["laps"].transactions == 0 and res.updates == 2
        batch = regenerate_batch(cfg, 3, rng, res.actors)
        assert len(batch["laps"]) == 3 and batch["haps"][0].state.shape == (2, 4, 8)

    def test_checkpoints(self, tmp_path):
        cfg = desk_config(**{**TINY, "episodes": 3, "eta_ckpt": 2})
        res = train(cfg, checkpoint_dir=tmp_path)
        assert [p.name for p in res.checkpoints] == ["episode_00002.json", "episode_00003.json"]

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            desk_config(mode="online")
        with pytest.raises(ValueError):
            desk_config(lr=0.0)


class TestCheckpoint:
    @pytest.mark.parametrize("encoding", ["base64-f64le", "list"])
    def test_round_trip_bit_exact(self, tmp_path, encoding):
        cfg = desk_config(**TINY)
        res = train(cfg)
        p = save_checkpoint(tmp_path / "c.json", res.actors, {"a": 1}, 2, res.optimizers, encoding)
        actors, opts, doc = load_checkpoint(p)
        assert doc["episode"] == 2
        for k in ("laps", "haps"):
            assert actors[k].config == res.actors[k].config
            for n, t in res.actors[k].params.items():
                assert actors[k].params[n].data.tobytes() == t.data.tobytes()
            assert opts[k].step == res.optimizers[k].step
            for n, m in res.optimizers[k].m.items():
                assert opts[k].m[n].tobytes() == m.tobytes()

    def test_bad_files(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "missing.json")
        (tmp_path / "x.json").write_text("{not json")
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "x.json")
        (tmp_path / "y.json").write_text(json.dumps({"format_version": "other"}))
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "y.json")


class TestEvaluate:
    def test_paired_streams(self):
        cfg = desk_config(**TINY)
        actors = train(cfg).actors
        a = evaluate(actors, cfg.system, episodes=2, T=3, seed=5)
        b = evaluate(actors, cfg.system, episodes=2, T=3, seed=5)
        np.testing.assert_array_equal(a.sum_rate, b.sum_rate)
        np.testing.assert_allclose(a.sum_rate, a.laps_rate + a.haps_rate)
        assert a.per_slot.shape == (3,) and a.ci95() >= 0

    def test_geometry_mismatch(self):
        actors = train(desk_config(**TINY)).actors
        with pytest.raises(ValueError, match="geometry"):
            evaluate(actors, SystemConfig(B=2, K=3, N_laps=4, N_haps=8), episodes=1, T=1)

    def test_baselines_order(self):
        sysc = SystemConfig(B=2, K=2, N_laps=4, N_haps=8)
        res = {m: evaluate_baseline(m, sysc, episodes=2, T=3) for m in ("mrt", "zf", "wmmse")}
        assert res["wmmse"].mean > res["mrt"].mean
        with pytest.raises(ValueError):
            evaluate_baseline("dft", sysc, 1, 1)
