"""Gaussian beamforming policies with a Fourier-operator (or small CNN)
backbone, a shared hidden layer and four output heads.

A state is a real ``[2, rows, N]`` tensor (real and imaginary CSI planes for
the ``rows`` served users over ``N`` antennas); a batch stacks states along a
leading axis.  The action is a complex ``[rows, N]`` beamforming matrix,
either emitted directly or as a rank-``j`` product ``Q @ O``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ntnbeam import diffnum as dn
from ntnbeam.diffnum import Tensor

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0


@dataclass(frozen=True)
class ActorConfig:
    users: int
    antennas: int
    backbone: str = "fno"
    width: int = 8
    modes: tuple = (4, 12)
    hidden: int = 512
    rank: int | None = None
    kernel: int = 3
    cnn_channels: tuple = (8, 8)
    clamp: str = "hard"  # hard (clip) | soft (tanh squash)

    def __post_init__(self):
        if self.backbone not in ("fno", "cnn"):
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if self.users < 1 or self.antennas < 1:
            raise ValueError("users and antennas must be positive")
        if self.width < 1 or self.hidden < 1:
            raise ValueError("width and hidden size must be positive")
        m_h, m_w = self.modes
        if self.backbone == "fno":
            if m_h < 1 or m_w < 1:
                raise ValueError(f"invalid mode counts {self.modes}")
            if m_h > self.users or m_w > self.antennas:
                raise ValueError(
                    f"mode counts {self.modes} exceed state size ({self.users}, {self.antennas})"
                )
        if self.backbone == "cnn" and (self.kernel < 1 or self.kernel % 2 == 0):
            raise ValueError("CNN kernel size must be odd and positive")
        if self.clamp not in ("soft", "hard"):
            raise ValueError(f"unknown log-std clamp {self.clamp!r}")
        if self.rank is not None and not 1 <= self.rank < min(self.users, self.antennas):
            raise ValueError(f"LRD rank {self.rank} must satisfy 1 <= j < min(users, antennas)")

    @classmethod
    def fitted(cls, users, antennas, modes=(4, 12), **kw):
        """Config whose mode counts are clipped to the state size."""
        modes = (min(modes[0], users), min(modes[1], antennas))
        return cls(users=users, antennas=antennas, modes=modes, **kw)

    @property
    def feature_channels(self) -> int:
        return self.width if self.backbone == "fno" else self.cnn_channels[-1]

    def head_sizes(self) -> dict:
        """Real output count of each head, keyed by head name."""
        U, N, j = self.users, self.antennas, self.rank
        if j is None:
            return {"mu_re": U * N, "mu_im": U * N, "ls_re": U, "ls_im": U}
        return {
            "q_mu_re": U * j, "q_mu_im": U * j, "q_ls_re": U, "q_ls_im": U,
            "o_mu_re": j * N, "o_mu_im": j * N, "o_ls_re": j, "o_ls_im": j,
        }

    def action_size(self) -> int:
        """Real degrees of freedom of one sampled action."""
        return sum(v for k, v in self.head_sizes().items() if "_mu_" in f"_{k}")


@dataclass
class ActorNetwork:
    config: ActorConfig
    params: dict = field(default_factory=dict)

    def named_arrays(self) -> dict:
        return {k: t.data for k, t in self.params.items()}

    def transfer_layers(self) -> list[str]:
        """Prefixes of the hidden layer and output heads."""
        return ["hidden"] + list(self.config.head_sizes())

    def copy(self) -> "ActorNetwork":
        return ActorNetwork(self.config, {k: Tensor(t.data.copy(), requires_grad=True, name=k) for k, t in self.params.items()})

    def num_parameters(self) -> int:
        return int(sum(t.data.size for t in self.params.values()))


@dataclass
class Heads:
    """Head outputs for a batch: means ``[b, rows, cols]`` and log-stds ``[b, rows, 1]``."""

    mu: dict
    log_std: dict


@dataclass
class PolicySample:
    W: Tensor  # complex [b, users, antennas]
    log_prob: Tensor  # [b]
    eps: dict


def _gauss(rng, shape, std):
    return rng.standard_normal(shape) * std


def build_actor(config: ActorConfig, rng: np.random.Generator) -> ActorNetwork:
    """Draw initial parameters: dense weights ~ N(0, 2/fan_in), zero biases,
    spectral weights with standard deviation ``1/(C_in m_h m_w)``."""
    p = {}
    U, N = config.users, config.antennas
    if config.backbone == "fno":
        m_h, m_w = config.modes
        std = 1.0 / (2 * m_h * m_w)
        p["fno.z_re"] = _gauss(rng, (config.width, 2, m_h, m_w), std)
        p["fno.z_im"] = _gauss(rng, (config.width, 2, m_h, m_w), std)
    else:
        c_in = 2
        k = config.kernel
        for i, c_out in enumerate(config.cnn_channels, start=1):
            p[f"cnn{i}.w"] = _gauss(rng, (c_out, c_in, k, k), np.sqrt(2.0 / (c_in * k * k)))
            p[f"cnn{i}.b"] = np.zeros(c_out)
            c_in = c_out
    flat = config.feature_channels * U * N
    p["hidden.w"] = _gauss(rng, (config.hidden, flat), np.sqrt(2.0 / flat))
    p["hidden.b"] = np.zeros(config.hidden)
    for name, size in config.head_sizes().items():
        p[f"{name}.w"] = _gauss(rng, (size, config.hidden), np.sqrt(2.0 / config.hidden))
        p[f"{name}.b"] = np.zeros(size)
    return ActorNetwork(config, {k: Tensor(v, requires_grad=True, name=k) for k, v in p.items()})


def normalize_state(state) -> np.ndarray:
    """Divide each sample by its RMS so that physical CSI magnitudes
    (around 1e-6) enter the network at unit scale."""
    s = np.asarray(state, dtype=float)
    axes = tuple(range(s.ndim - 3, s.ndim))
    rms = np.sqrt(np.mean(s * s, axis=axes, keepdims=True))
    return s / np.where(rms > 0, rms, 1.0)


def _backbone(actor: ActorNetwork, x: Tensor) -> Tensor:
    p = actor.params
    if actor.config.backbone == "fno":
        Z = dn.make_complex(p["fno.z_re"], p["fno.z_im"])
        Y = dn.spectral_multiply(dn.fft2(x), Z)
        return dn.relu(dn.real(dn.ifft2(Y)))
    h = x
    for i in range(1, len(actor.config.cnn_channels) + 1):
        h = dn.relu(dn.conv2d(h, p[f"cnn{i}.w"], p[f"cnn{i}.b"]))
    return h


def _clamp_log_std(x, kind):
    if kind == "hard":
        return dn.clip(x, LOG_STD_MIN, LOG_STD_MAX)
    half = 0.5 * (LOG_STD_MAX - LOG_STD_MIN)
    return (dn.tanh(x) + 1.0) * half + LOG_STD_MIN


def _signed_softmax(logits: Tensor, axis) -> Tensor:
    return dn.softmax(logits, axis=axis) * 2.0 - 1.0


def forward(actor: ActorNetwork, state) -> Heads:
    """Head outputs for a state ``[2, U, N]`` or a batch ``[b, 2, U, N]``.

    Mean heads pass through a softmax then the affine map ``2s - 1``: over
    antennas for each row of a direct or ``O`` head, over users for each
    latent column of a ``Q`` head.  Log-std heads are linear, then clipped
    to ``[LOG_STD_MIN, LOG_STD_MAX]`` (or squashed into it by a tanh when
    the config asks for a soft clamp).
    """
    cfg = actor.config
    s = np.asarray(state, dtype=float)
    if s.ndim == 3:
        s = s[None]
    if s.shape[1:] != (2, cfg.users, cfg.antennas):
        raise ValueError(f"state shape {s.shape[1:]} does not match actor geometry (2, {cfg.users}, {cfg.antennas})")
    b = s.shape[0]
    p = actor.params
    feat = _backbone(actor, Tensor(normalize_state(s)))
    h = dn.relu(dn.dense(dn.reshape(feat, (b, -1)), p["hidden.w"], p["hidden.b"]))
    U, N, j = cfg.users, cfg.antennas, cfg.rank
    mu, log_std = {}, {}
    for name in cfg.head_sizes():
        out = dn.dense(h, p[f"{name}.w"], p[f"{name}.b"])
        if "_mu_" not in f"_{name}":
            log_std[name] = dn.reshape(_clamp_log_std(out, cfg.clamp), (b, -1, 1))
        elif name.startswith("q_"):
            mu[name] = _signed_softmax(dn.reshape(out, (b, U, j)), axis=1)
        elif name.startswith("o_"):
            mu[name] = _signed_softmax(dn.reshape(out, (b, j, N)), axis=2)
        else:
            mu[name] = _signed_softmax(dn.reshape(out, (b, U, N)), axis=2)
    return Heads(mu, log_std)


def _ls_name(mu_name):
    return mu_name.replace("mu_", "ls_")


def sample_action(heads: Heads, rng_or_eps) -> PolicySample:
    """Reparameterised draw of the beamforming matrix and its log-density.

    ``rng_or_eps`` is a generator or a dict of standard-normal arrays keyed
    by mean-head name.
    """
    if isinstance(rng_or_eps, dict):
        eps = {k: np.asarray(v, dtype=float) for k, v in rng_or_eps.items()}
    else:
        eps = {k: rng_or_eps.standard_normal(m.shape) for k, m in heads.mu.items()}
    parts, log_prob = {}, None
    for name, m in heads.mu.items():
        a, lp = dn.gaussian_sample(m, heads.log_std[_ls_name(name)], eps[name], batch_dims=1)
        parts[name] = a
        log_prob = lp if log_prob is None else log_prob + lp
    if "mu_re" in parts:
        W = dn.make_complex(parts["mu_re"], parts["mu_im"])
    else:
        Q = dn.make_complex(parts["q_mu_re"], parts["q_mu_im"])
        O = dn.make_complex(parts["o_mu_re"], parts["o_mu_im"])
        W = lrd_compose(Q, O)
    return PolicySample(W, log_prob, eps)


def lrd_compose(Q, O):
    """``W = Q @ O`` for ``Q [.., users, j]`` and ``O [.., j, antennas]``."""
    Q, O = dn.as_tensor(Q), dn.as_tensor(O)
    if Q.shape[-1] != O.shape[-2]:
        raise ValueError(f"inner dimensions differ: Q {Q.shape}, O {O.shape}")
    return dn.matmul(Q, O)


def act(actor: ActorNetwork, state, rng) -> np.ndarray:
    """Sample one complex beamforming matrix without recording gradients."""
    heads = forward(actor, state)
    return sample_action(heads, rng).W.data[0]
