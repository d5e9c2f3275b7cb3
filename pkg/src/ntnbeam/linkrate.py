"""Power normalisation, per-layer SINR, dual-connectivity rates and reward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateBeamformer(ValueError):
    pass


@dataclass
class BeamformingSet:
    """``laps`` is ``[B, K, N_b]`` (row ``k`` is w_{b,k}^T); ``haps`` is ``[U, N_b0]``."""

    laps: np.ndarray
    haps: np.ndarray
    p_laps: float = 40.0
    p_haps: float = 100.0

    def normalized(self) -> "BeamformingSet":
        laps = np.stack([normalize_power(w, self.p_laps) for w in self.laps])
        return BeamformingSet(laps, normalize_power(self.haps, self.p_haps), self.p_laps, self.p_haps)


@dataclass
class RateReport:
    laps_rate: np.ndarray  # [U]
    haps_rate: np.ndarray  # [U]

    @property
    def per_user(self) -> np.ndarray:
        return self.laps_rate + self.haps_rate

    @property
    def sum_rate(self) -> float:
        return float(self.per_user.sum())

    @property
    def reward(self) -> float:
        return float(self.per_user.mean())


def normalize_power(W, p_max: float) -> np.ndarray:
    """Scale ``W`` so that the sum of squared row norms equals ``p_max``."""
    W = np.asarray(W)
    total = float(np.sum(np.abs(W) ** 2))
    if total == 0.0 or not np.isfinite(total):
        raise DegenerateBeamformer("degenerate beamformer")
    return W * np.sqrt(p_max / total)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def laps_gains(H_laps: np.ndarray, W_laps: np.ndarray) -> np.ndarray:
    """``G[b, u, k] = |h_{b,u} w_{b,k}|^2`` for every LAPS ``b``, user ``u``, beam ``k``."""
    return np.abs(np.einsum("bun,bkn->buk", H_laps, W_laps)) ** 2


def sinr_laps(u: int, H_laps: np.ndarray, W_laps: np.ndarray, noise: float, K: int | None = None) -> float:
    """SINR of user ``u`` on its LAPS link.

    ``H_laps[b, u]`` is the channel from LAPS ``b`` to user ``u``; users are
    ordered cluster-major so user ``u`` sits in cluster ``u // K`` as beam
    ``u % K``.  Every other LAPS-layer beam interferes.
    """
    K = W_laps.shape[1] if K is None else K
    b, k = divmod(u, K)
    g = np.abs(np.einsum("bn,bkn->bk", H_laps[:, u], W_laps)) ** 2
    signal = g[b, k]
    g[b, k] = 0.0
    return float(signal / (g.sum() + noise))


def sinr_haps(u: int, h: np.ndarray, W_haps: np.ndarray, noise: float) -> float:
    """SINR of user ``u`` on the HAPS link; ``h`` is that user's HAPS channel."""
    g = np.abs(W_haps @ h) ** 2
    signal = g[u]
    g[u] = 0.0
    return float(signal / (g.sum() + noise))


def laps_sinr_all(H_laps, W_laps, noise, external=None):
    B, K, _ = W_laps.shape
    G = laps_gains(H_laps, W_laps)  # [B, U, K]
    u = np.arange(B * K)
    signal = G[u // K, u, u % K].copy()
    G[u // K, u, u % K] = 0.0
    interference = G.sum(axis=(0, 2))
    if external is not None:
        interference = interference + external
    return signal / (interference + noise)


def haps_sinr_all(H_haps, W_haps, noise):
    G = np.abs(H_haps @ W_haps.T) ** 2  # [U, U']
    signal = np.diag(G).copy()
    np.fill_diagonal(G, 0.0)
    return signal / (G.sum(axis=1) + noise)


def evaluate_rates(H_laps: np.ndarray, H_haps: np.ndarray, beams: BeamformingSet, noise: float) -> RateReport:
    """Per-user dual-connectivity rates (bps/Hz) for normalised ``beams``."""
    laps = np.log2(1.0 + laps_sinr_all(H_laps, beams.laps, noise))
    haps = np.log2(1.0 + haps_sinr_all(H_haps, beams.haps, noise))
    return RateReport(laps, haps)
