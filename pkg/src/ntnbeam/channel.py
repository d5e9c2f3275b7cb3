"""Channel generation: free-space loss with shadowing, Rician small-scale
fading with a Jakes-correlated diffuse part, UPA steering, and CSI errors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0

SPEED_OF_LIGHT = 3e8


@dataclass(frozen=True)
class ChannelParams:
    f_laps: float = 1.8e9
    f_haps: float = 2.7e9
    c: float = SPEED_OF_LIGHT
    rician_x: float = 10.0
    shadow_var_db: float = 3.0
    T_c: float = 0.02
    N_laps: int = 36
    N_haps: int = 64

    def __post_init__(self):
        if self.rician_x < 0:
            raise ValueError("Rician factor must be non-negative")
        if self.f_laps <= 0 or self.f_haps <= 0:
            raise ValueError("carrier frequencies must be positive")
        for n in (self.N_laps, self.N_haps):
            array_shape(n)


@dataclass
class FadingState:
    """Diffuse (NLoS) component of one link, unit per-entry variance."""

    nlos: np.ndarray
    rho: float

    def __post_init__(self):
        if abs(self.rho) > 1:
            raise ValueError("|rho| must not exceed 1")


@dataclass(frozen=True)
class CsiNoiseModel:
    kind: str = "perfect"  # perfect | additive | multiplicative
    xi: float = 1.0
    shape: float = 10.0
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in ("perfect", "additive", "multiplicative"):
            raise ValueError(f"unknown CSI model {self.kind!r}")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("Gamma shape and scale must be positive")

    @classmethod
    def additive(cls, xi):
        return cls("additive", xi=xi)

    @classmethod
    def multiplicative(cls, shape=10.0, scale=0.1):
        return cls("multiplicative", shape=shape, scale=scale)


def _side(n: int) -> int:
    s = math.isqrt(int(n))
    if n < 1 or s * s != n:
        raise ValueError(f"antenna count {n} is not a perfect square")
    return s


def array_shape(n: int) -> tuple[int, int]:
    """Most nearly square ``(horizontal, vertical)`` factorisation of ``n``.

    Perfect squares give the square UPA; other counts (e.g. 8 -> 2 x 4)
    give a rectangular array.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"antenna count {n} must be positive")
    a = math.isqrt(n)
    while n % a:
        a -= 1
    return a, n // a


def large_scale_gain(d, f_c: float, shadow_db=0.0, c: float = SPEED_OF_LIGHT):
    """Linear path gain ``(c / 4 pi f d)^2 * 10^(-shadow/10)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("non-positive distance")
    gain = (c / (4.0 * np.pi * f_c * d)) ** 2 * 10.0 ** (-np.asarray(shadow_db, dtype=float) / 10.0)
    return float(gain) if gain.ndim == 0 else gain


def steering_vector(theta, phi, N_b: int, shape: tuple[int, int] | None = None) -> np.ndarray:
    """UPA response ``a (x) b`` with half-wavelength spacing.

    Vectorised over ``theta``/``phi``: the antenna axis is appended last.
    ``N_b`` must be a perfect square unless an explicit ``shape``
    (horizontal, vertical element counts) is given.
    """
    if shape is None:
        side = _side(N_b)
        shape = (side, side)
    elif shape[0] * shape[1] != N_b:
        raise ValueError(f"array shape {shape} does not hold {N_b} elements")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    # d/lambda = 1/2 on both axes
    d_h = 0.5 * np.cos(theta) * np.sin(phi)
    d_v = 0.5 * np.cos(theta) * np.cos(phi)
    a = np.exp(2j * np.pi * d_h[..., None] * np.arange(shape[0]))
    b = np.exp(2j * np.pi * d_v[..., None] * np.arange(shape[1]))
    return (a[..., :, None] * b[..., None, :]).reshape(theta.shape + (N_b,))


def doppler_rho(v: float, f_c: float, T_c: float, c: float = SPEED_OF_LIGHT) -> float:
    """Lag-one correlation ``J0(2 pi f_D T_c)``, negative values clamped to 0."""
    if v < 0:
        raise ValueError("velocity must be non-negative")
    f_d = v * f_c / c
    return max(0.0, float(j0(2.0 * np.pi * f_d * T_c)))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def init_nlos(rng, shape, rho: float) -> FadingState:
    return FadingState(complex_normal(rng, shape), rho)


def step_nlos(state: FadingState, rng: np.random.Generator) -> FadingState:
    rho = state.rho
    if rho == 1.0:
        return FadingState(state.nlos.copy(), rho)
    z = complex_normal(rng, state.nlos.shape)
    return FadingState(rho * state.nlos + math.sqrt(1.0 - rho * rho) * z, rho)


def small_scale(los, nlos, X: float) -> np.ndarray:
    los = np.asarray(los)
    nlos = np.asarray(nlos)
    if los.shape != nlos.shape:
        raise ValueError("LoS and NLoS components differ in length")
    return math.sqrt(X / (1.0 + X)) * los + math.sqrt(1.0 / (1.0 + X)) * nlos


def compose_channel(los, nlos, X: float, L) -> np.ndarray:
    """Rician mix of LoS/NLoS parts scaled by the square root of the path gain."""
    amp = np.sqrt(np.asarray(L, dtype=float))
    return small_scale(los, nlos, X) * amp[..., None]


def corrupt_csi(h, model: CsiNoiseModel, rng: np.random.Generator, scale=1.0) -> np.ndarray:
    """Imperfect CSI estimate of ``h``.

    ``scale`` is the amplitude of the small-scale process inside ``h`` (the
    square root of the path gain): the additive error is drawn with unit
    per-entry variance in small-scale units and scaled by it.
    """
    h = np.asarray(h)
    if model.kind == "perfect":
        return h.copy()
    if model.kind == "additive":
        if model.xi == 1.0:
            return h.copy()
        e = complex_normal(rng, h.shape) * np.asarray(scale, dtype=float)[..., None]
        return model.xi * h + math.sqrt(1.0 - model.xi**2) * e
    e = rng.gamma(model.shape, model.scale, size=h.shape)
    return h * e


def state_matrix(channels) -> np.ndarray:
    """Stack per-user channel rows into a ``[2, users, antennas]`` real tensor."""
    rows = [np.asarray(h) for h in channels]
    if len({r.shape for r in rows}) > 1:
        raise ValueError("ragged channel list")
    H = np.stack(rows)
    if H.ndim != 2:
        raise ValueError("channels must be vectors")
    return np.stack([H.real, H.imag]).astype(float)
