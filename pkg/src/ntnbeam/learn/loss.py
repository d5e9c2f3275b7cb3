"""Entropy-regularised actor loss with a pathwise reward surrogate."""

from __future__ import annotations

import numpy as np

from ntnbeam import diffnum as dn
from ntnbeam.actor import ActorNetwork, forward, sample_action
from ntnbeam.learn.env import planes_to_complex


def surrogate_reward(W, H: np.ndarray, p_max: float, noise: float, external=None):
    """Differentiable mean rate of one BS from its own CSI.

    ``W`` is a complex tensor ``[b, rows, N]`` (pre-normalisation) and ``H``
    the complex CSI ``[b, rows, N]``.  Only beams of this BS interfere;
    ``external`` optionally adds a fixed per-user interference power.
    Channels are expressed in units of the noise amplitude internally.
    """
    H = np.asarray(H) / np.sqrt(noise)
    rows = H.shape[-2]
    power = dn.tsum(dn.abs2(W), axis=(1, 2), keepdims=True)
    Wn = W * dn.sqrt(p_max / power)
    G = dn.abs2(dn.matmul(H, dn.swapaxes(Wn, 1, 2)))  # [b, user, beam]
    eye = np.eye(rows)
    signal = dn.tsum(G * eye, axis=2)
    interference = dn.tsum(G * (1.0 - eye), axis=2)
    floor = 1.0 if external is None else 1.0 + np.asarray(external) / noise
    rates = dn.log2(dn.div(signal, interference + floor) + 1.0)
    return dn.mean(rates, axis=1)


def actor_loss(states, actor: ActorNetwork, gamma: float, p_max: float, noise: float, rng_or_eps,
               entropy: str = "sum"):
    """``mean(gamma * log_prob - reward)`` over a batch of states.

    With ``entropy="mean"`` the log-density is divided by the number of
    sampled coordinates, so ``gamma`` weighs a per-coordinate entropy.

    Returns ``(loss, info)`` where ``info`` holds the per-sample log-probs,
    rewards and mean log-std as plain arrays.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 4 or states.shape[0] == 0:
        raise ValueError("actor_loss needs a non-empty batch of [2, rows, N] states")
    heads = forward(actor, states)
    sample = sample_action(heads, rng_or_eps)
    reward = surrogate_reward(sample.W, planes_to_complex(states), p_max, noise)
    if entropy not in ("sum", "mean"):
        raise ValueError(f"unknown entropy normalisation {entropy!r}")
    scale = gamma if entropy == "sum" else gamma / actor.config.action_size()
    loss = dn.mean(sample.log_prob * scale - reward)
    log_std = np.mean([np.mean(v.data) for v in heads.log_std.values()])
    info = {"log_prob": sample.log_prob.data.copy(), "reward": reward.data.copy(), "log_std": float(log_std)}
    return loss, info
