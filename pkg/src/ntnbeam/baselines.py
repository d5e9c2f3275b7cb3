"""Perfect-CSI precoders: matched filter, zero forcing and weighted MMSE.

All precoders return ``W`` with one row per user (``w_u^T``) so that the
received amplitude of beam ``v`` at user ``u`` is ``H[u] @ W[v]``, matching
the convention of :mod:`ntnbeam.linkrate`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PrecodeProblem:
    H: np.ndarray  # [users, antennas]
    noise: float
    p_max: float
    max_iter: int = 100
    external: np.ndarray | None = None  # per-user interference power treated as noise

    def __post_init__(self):
        if self.p_max <= 0:
            raise ValueError("power budget must be positive")
        if np.asarray(self.H).ndim != 2:
            raise ValueError("H must be a users x antennas matrix")

    @property
    def noise_vector(self) -> np.ndarray:
        n = np.full(self.H.shape[0], float(self.noise))
        return n if self.external is None else n + np.asarray(self.external, dtype=float)


def sum_rate(H, W, noise) -> float:
    """Sum of ``log2(1 + SINR_u)`` with per-user noise ``noise`` (scalar or vector)."""
    G = np.abs(H @ W.T) ** 2
    sig = np.diag(G)
    interf = G.sum(axis=1) - sig
    return float(np.sum(np.log2(1.0 + sig / (interf + noise))))


def mrt(problem: PrecodeProblem) -> np.ndarray:
    H = np.asarray(problem.H)
    norms = np.linalg.norm(H, axis=1)
    if np.any(norms == 0):
        raise ValueError("MRT undefined for an all-zero channel row")
    return np.conj(H) / norms[:, None] * np.sqrt(problem.p_max / H.shape[0])


def zf(problem: PrecodeProblem, rcond: float = 1e-12) -> np.ndarray:
    H = np.asarray(problem.H)
    U, N = H.shape
    if U > N:
        raise ValueError("ZF infeasible: more users than antennas")
    s = np.linalg.svd(H, compute_uv=False)
    if s[-1] <= rcond * s[0]:
        raise ValueError("ZF infeasible: channel matrix is rank deficient")
    P = H.conj().T @ np.linalg.inv(H @ H.conj().T)  # columns are beams
    P = P / np.linalg.norm(P, axis=0, keepdims=True)
    return P.T * np.sqrt(problem.p_max / U)


def _full_power(W, p_max):
    return W * np.sqrt(p_max / np.sum(np.abs(W) ** 2))


def _transmit_update(H, g, u, p_max):
    """Minimise the weighted MSE over ``W`` under ``sum ||w||^2 <= p_max``."""
    U, N = H.shape
    c = u * np.abs(g) ** 2
    A = (H.conj().T * c) @ H  # sum_j c_j h_j^H h_j
    Bm = (H.conj().T * (u * np.conj(g)))  # column k: u_k g_k^* h_k^H
    lam, V = np.linalg.eigh(A)
    lam = np.maximum(lam, 0.0)
    VB = V.conj().T @ Bm
    mass = np.sum(np.abs(VB) ** 2, axis=1)

    def power(mu):
        return float(np.sum(mass / (lam + mu) ** 2))

    if lam.min() > 1e-14 * max(lam.max(), 1e-300) and power(0.0) <= p_max:
        mu = 0.0
    else:
        lo, hi = 0.0, max(1e-12, np.sqrt(mass.sum() / p_max))
        while power(hi) > p_max:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if power(mid) > p_max:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        mu = hi
    Wcols = V @ (VB / (lam + mu)[:, None])
    return Wcols.T


def wmmse(problem: PrecodeProblem, init: np.ndarray | None = None, tol: float = 1e-8):
    """Weighted-MMSE sum-rate precoder (alternating receiver / weight /
    transmitter updates with a bisection on the power multiplier).

    Returns ``(W, trace)``: the best iterate (at full power) and the sum
    rate after each iteration, starting with the initial point.
    """
    H = np.asarray(problem.H, dtype=complex)
    U, N = H.shape
    noise = problem.noise_vector
    if np.any(noise <= 0):
        raise ValueError("noise power must be positive")
    if init is None:
        cands = [mrt(problem)]
        if U <= N:
            try:
                cands.append(zf(problem))
            except ValueError:
                pass
        init = max(cands, key=lambda w: sum_rate(H, w, noise))
    W = np.asarray(init, dtype=complex)
    if not np.isclose(np.sum(np.abs(W) ** 2), problem.p_max, rtol=1e-12, atol=0.0):
        W = _full_power(W, problem.p_max)
    best_W, best = W, sum_rate(H, W, noise)
    trace = [best]
    prev = best
    for _ in range(problem.max_iter):
        R = H @ W.T  # R[k, j] = h_k w_j
        total = np.sum(np.abs(R) ** 2, axis=1) + noise
        sig = np.diag(R)
        g = np.conj(sig) / total
        e = 1.0 - np.abs(sig) ** 2 / total
        u = 1.0 / np.maximum(e, 1e-300)
        W = _full_power(_transmit_update(H, g, u, problem.p_max), problem.p_max)
        rate = sum_rate(H, W, noise)
        if rate > best:
            best_W, best = W, rate
        trace.append(rate)
        if abs(rate - prev) <= tol * max(abs(prev), 1e-300):
            break
        prev = rate
    return best_W, np.array(trace)
