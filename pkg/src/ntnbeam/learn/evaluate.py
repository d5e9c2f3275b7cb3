"""Frozen-policy and classical-baseline evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ntnbeam import baselines
from ntnbeam.learn.checkpoint import load_checkpoint
from ntnbeam.learn.config import SystemConfig
from ntnbeam.learn.env import Episode
from ntnbeam.learn.train import rollout_slot
from ntnbeam.linkrate import normalize_power


@dataclass
class EvalResult:
    sum_rate: np.ndarray  # [episodes, T] network sum rate per slot
    laps_rate: np.ndarray  # [episodes, T] LAPS-layer sum rate
    haps_rate: np.ndarray  # [episodes, T] HAPS-layer sum rate

    @property
    def per_episode(self) -> np.ndarray:
        return self.sum_rate.mean(axis=1)

    @property
    def per_slot(self) -> np.ndarray:
        return self.sum_rate.mean(axis=0)

    @property
    def mean(self) -> float:
        return float(self.sum_rate.mean())

    def ci95(self) -> float:
        """Normal-approximation half-width over episode means."""
        x = self.per_episode
        if x.size < 2:
            return 0.0
        return float(1.96 * x.std(ddof=1) / np.sqrt(x.size))


def _streams(seed):
    env, policy = np.random.SeedSequence([seed, 0xE7A1]).spawn(2)
    return np.random.default_rng(env), np.random.default_rng(policy)


def check_geometry(actors: dict, system: SystemConfig):
    want = {"laps": (system.K, system.N_laps), "haps": (system.U, system.N_haps)}
    for k, (rows, n) in want.items():
        cfg = actors[k].config
        if (cfg.users, cfg.antennas) != (rows, n):
            raise ValueError(
                f"{k} actor geometry ({cfg.users} users, {cfg.antennas} antennas) does not match "
                f"the evaluation config ({rows}, {n})"
            )


def evaluate(actors: dict, system: SystemConfig, episodes: int = 500, T: int = 50, seed: int = 0) -> EvalResult:
    """Roll out stochastic actions of frozen ``actors``; no parameter changes.

    The environment stream depends only on ``seed``, so two policies
    evaluated with the same seed face identical channel sequences.
    """
    check_geometry(actors, system)
    rng_env, rng_pol = _streams(seed)
    out = np.zeros((3, episodes, T))
    for e in range(episodes):
        ep = Episode(system, rng_env)
        for t in range(T):
            _, _, _, _, rep = rollout_slot(ep, actors, rng_pol)
            out[:, e, t] = rep.sum_rate, rep.laps_rate.sum(), rep.haps_rate.sum()
            ep.step()
    return EvalResult(*out)


def evaluate_checkpoint(path, system: SystemConfig, episodes=500, T=50, seed=0) -> EvalResult:
    actors, _, _ = load_checkpoint(path)
    return evaluate(actors, system, episodes, T, seed)


PRECODERS = {"mrt": baselines.mrt, "zf": baselines.zf, "wmmse": lambda p: baselines.wmmse(p)[0]}


def evaluate_baseline(method: str, system: SystemConfig, episodes: int = 500, T: int = 50, seed: int = 0) -> EvalResult:
    """Per-BS classical precoding on perfect CSI.

    Each LAPS solves its own K-user problem; WMMSE treats the power it
    received from the other LAPS beams in the previous slot as extra noise.
    The HAPS solves its U-user problem.
    """
    if method not in PRECODERS:
        raise ValueError(f"unknown baseline {method!r}; choose from {sorted(PRECODERS)}")
    solve = PRECODERS[method]
    rng_env, _ = _streams(seed)
    B, K = system.B, system.K
    noise = system.noise
    out = np.zeros((3, episodes, T))
    for e in range(episodes):
        ep = Episode(system, rng_env)
        prev = None
        for t in range(T):
            snap = ep.channels()
            ep.observe(snap)  # keep the environment stream aligned with policy rollouts
            W_laps = np.zeros((B, K, system.N_laps), dtype=complex)
            for b in range(B):
                users = slice(b * K, (b + 1) * K)
                ext = None
                if prev is not None and method == "wmmse":
                    amp = np.einsum("cun,ckn->cuk", snap.H_laps[:, users], prev)
                    gains = np.abs(amp) ** 2
                    gains[b] = 0.0
                    ext = gains.sum(axis=(0, 2))
                prob = baselines.PrecodeProblem(snap.H_laps[b, users], noise, system.p_laps, external=ext)
                W_laps[b] = normalize_power(solve(prob), system.p_laps)
            W_haps = normalize_power(solve(baselines.PrecodeProblem(snap.H_haps, noise, system.p_haps)), system.p_haps)
            rep = ep.rates(snap, W_laps, W_haps)
            out[:, e, t] = rep.sum_rate, rep.laps_rate.sum(), rep.haps_rate.sum()
            prev = W_laps
            ep.step()
    return EvalResult(*out)
