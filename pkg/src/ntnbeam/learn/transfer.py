"""Conjugate-Gaussian transfer of layer statistics between actors."""

from __future__ import annotations

import numpy as np

from ntnbeam.actor import ActorNetwork


def posterior(mu_l, var_l, mu_h, var_h, beta=1.0):
    """Gaussian posterior of a prior ``(mu_l, var_l)`` tempered by ``beta``
    and a likelihood ``(mu_h, var_h)``; returns ``(mu_p, var_p)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if var_l <= 0 or var_h <= 0:
        raise ValueError("degenerate prior/likelihood: zero variance")
    var_p = 1.0 / (1.0 / (beta * var_l) + 1.0 / var_h)
    mu_p = var_p * (beta * mu_l / var_l + mu_h / var_h)
    return mu_p, var_p


def transfer_layers(source: ActorNetwork, target: ActorNetwork, beta: float = 1.0, likelihood: dict | None = None):
    """Set the hidden-layer and head weights of ``target`` to the posterior
    moments, preserving each weight's z-score.

    The prior comes from ``source``; the likelihood from ``likelihood``
    (name -> array, e.g. a snapshot of the target's initial weights) or from
    the target's current weights.  Biases and backbone parameters are left
    alone.  Returns ``{layer: (mu_p, var_p)}``.
    """
    out = {}
    for layer in target.transfer_layers():
        name = f"{layer}.w"
        if name not in source.params:
            raise ValueError(f"source actor has no layer {layer!r}")
        src = source.params[name].data
        tgt = target.params[name]
        like = tgt.data if likelihood is None else np.asarray(likelihood[name])
        mu_l, var_l = float(src.mean()), float(src.var())
        mu_h, var_h = float(like.mean()), float(like.var())
        mu_p, var_p = posterior(mu_l, var_l, mu_h, var_h, beta)
        z = (like - mu_h) / np.sqrt(var_h)
        tgt.data = mu_p + np.sqrt(var_p) * z
        out[layer] = (mu_p, var_p)
    return out
