"""Actor-only training loop for the LAPS and HAPS policies."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ntnbeam.actor import ActorNetwork, build_actor, forward, sample_action
from ntnbeam.diffnum import Adam, Tape
from ntnbeam.learn.buffer import ReplayBuffer, Transition
from ntnbeam.learn.checkpoint import save_checkpoint
from ntnbeam.learn.config import TrainConfig
from ntnbeam.learn.env import Episode
from ntnbeam.learn.loss import actor_loss

log = logging.getLogger(__name__)

LAYERS = ("laps", "haps")


@dataclass
class TrainResult:
    actors: dict
    rewards: np.ndarray  # per-episode mean shared reward
    sum_rates: np.ndarray  # per-episode mean network sum rate
    updates: int  # update rounds in which at least one actor stepped
    buffers: dict
    optimizers: dict
    history: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)


def config_document(config: TrainConfig) -> dict:
    """JSON-ready view of a training config."""
    return _jsonable(dataclasses.asdict(config))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _streams(seed: int):
    init, env, policy, update = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(s) for s in (init, env, policy, update))


def init_actors(config: TrainConfig, rng: np.random.Generator) -> dict:
    return {"laps": build_actor(config.laps_actor_config(), rng), "haps": build_actor(config.haps_actor_config(), rng)}


def rollout_slot(episode: Episode, actors: dict, rng: np.random.Generator):
    """Observe, act and score one slot; returns ``(snapshot, obs, W_laps, W_haps, report)``."""
    snap = episode.channels()
    obs = episode.observe(snap)
    W_laps = sample_action(forward(actors["laps"], obs.laps), rng).W.data
    W_haps = sample_action(forward(actors["haps"], obs.haps), rng).W.data[0]
    report = episode.rates(snap, W_laps, W_haps)
    return snap, obs, W_laps, W_haps, report


def regenerate_batch(config: TrainConfig, batch_size: int, rng: np.random.Generator, actors: dict) -> dict:
    """Fresh synthetic transitions: each comes from an independently drawn
    network (new user drop, shadowing and fading), acted on by ``actors``.

    Returns ``{"laps": [...], "haps": [...]}`` with ``batch_size`` each; the
    LAPS transition of a sample is taken from a uniformly chosen cluster.
    """
    out = {"laps": [], "haps": []}
    B = config.system.B
    for _ in range(batch_size):
        ep = Episode(config.system, rng)
        _, obs, W_laps, W_haps, rep = rollout_slot(ep, actors, rng)
        b = int(rng.integers(B))
        out["laps"].append(Transition(obs.laps[b], W_laps[b], rep.reward, ("laps", b)))
        out["haps"].append(Transition(obs.haps, W_haps, rep.reward, ("haps", 0)))
    return out


def _update(actor, opt, transitions, gamma, p_max, noise, rng, entropy):
    states = np.stack([tr.state for tr in transitions])
    opt.zero_grad()
    for t in actor.params.values():
        t.grad = None
    with Tape() as tape:
        loss, info = actor_loss(states, actor, gamma, p_max, noise, rng, entropy)
    tape.backward(loss)
    opt.step()
    return float(loss.data), info


def train(config: TrainConfig, checkpoint_dir=None, actors: dict | None = None,
          trainable: dict | None = None, progress=None) -> TrainResult:
    """Run ``config.episodes`` episodes of ``config.T`` slots.

    Every ``eta`` slots each trainable actor takes one Adam step on a
    mini-batch sampled from its buffer (or regenerated); every ``eta_ckpt``
    episodes a checkpoint is written when ``checkpoint_dir`` is given.

    ``actors`` supplies initial networks (copied); ``trainable`` maps layer
    name to an iterable of parameter names to optimise (``None`` entry:
    all; empty: frozen).
    """
    sysc = config.system
    rng_init, rng_env, rng_pol, rng_upd = _streams(config.seed)
    nets = init_actors(config, rng_init)
    if actors is not None:
        for k, a in actors.items():
            nets[k] = a.copy()
    trainable = trainable or {}
    opts = {}
    for k in LAYERS:
        names = trainable.get(k)
        params = nets[k].params if names is None else {n: nets[k].params[n] for n in names}
        opts[k] = Adam(params, lr=config.lr)
    gammas = {"laps": config.gamma, "haps": config.gamma_haps}
    budgets = {"laps": sysc.p_laps, "haps": sysc.p_haps}
    buffers = {k: ReplayBuffer(config.buffer_capacity) for k in LAYERS}
    rewards, sum_rates, history, ckpts = [], [], [], []
    updates = 0
    for e in range(config.episodes):
        ep = Episode(sysc, rng_env)
        ep_rewards, ep_sum, info_ep = [], [], {}
        for t in range(config.T):
            _, obs, W_laps, W_haps, rep = rollout_slot(ep, nets, rng_pol)
            r = rep.reward
            ep_rewards.append(r)
            ep_sum.append(rep.sum_rate)
            if config.mode == "buffer":
                for b in range(sysc.B):
                    buffers["laps"].push(Transition(obs.laps[b], W_laps[b], r, ("laps", b)))
                buffers["haps"].push(Transition(obs.haps, W_haps, r, ("haps", 0)))
            ep.step()
            if (t + 1) % config.eta:
                continue
            if config.mode == "regenerate":
                fresh = regenerate_batch(config, config.batch, rng_upd, nets)
            stepped = False
            for k in LAYERS:
                if not opts[k].params:
                    continue
                stepped = True
                if config.mode == "buffer":
                    batch = buffers[k].sample(min(config.batch, len(buffers[k])), rng_upd)
                else:
                    batch = fresh[k]
                loss, info = _update(nets[k], opts[k], batch, gammas[k], budgets[k], sysc.noise, rng_upd,
                                     config.entropy)
                info_ep[k] = {"loss": loss, "log_std": info["log_std"]}
            updates += stepped
        rewards.append(float(np.mean(ep_rewards)))
        sum_rates.append(float(np.mean(ep_sum)))
        history.append({"episode": e, "reward": rewards[-1], "sum_rate": sum_rates[-1], **info_ep})
        if progress is not None:
            progress(history[-1])
        log.debug("episode %d reward %.4f", e, rewards[-1])
        if checkpoint_dir is not None and (e + 1) % config.eta_ckpt == 0:
            ckpts.append(save_checkpoint(Path(checkpoint_dir) / f"episode_{e + 1:05d}.json", nets,
                                         config_document(config), e + 1,
                                         {k: o.state for k, o in opts.items()}))
    if checkpoint_dir is not None and config.episodes % config.eta_ckpt:
        ckpts.append(save_checkpoint(Path(checkpoint_dir) / f"episode_{config.episodes:05d}.json", nets,
                                     config_document(config), config.episodes,
                                     {k: o.state for k, o in opts.items()}))
    return TrainResult(nets, np.array(rewards), np.array(sum_rates), updates, buffers,
                       {k: o.state for k, o in opts.items()}, history, ckpts)


def fno_parameter_names(actor: ActorNetwork) -> list[str]:
    """Backbone parameters (the part retrained after a transfer)."""
    return [k for k in actor.params if k.startswith(("fno.", "cnn"))]
