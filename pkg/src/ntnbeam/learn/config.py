"""System and training configuration with Table II defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ntnbeam.actor import ActorConfig
from ntnbeam.channel import ChannelParams, CsiNoiseModel
from ntnbeam.linkrate import dbm_to_watts
from ntnbeam.topology import ClusterLayout


@dataclass(frozen=True)
class SystemConfig:
    B: int = 4
    K: int = 4
    q: float = 2000.0
    l: float = 6000.0
    laps_altitude: float = 2000.0
    haps_altitude: float = 20000.0
    haps_jitter: float = 500.0
    velocity: float = 1.0
    N_laps: int = 36
    N_haps: int = 64
    f_laps: float = 1.8e9
    f_haps: float = 2.7e9
    rician_x: float = 10.0
    shadow_var_db: float = 3.0
    T_c: float = 0.02
    noise_dbm: float = -100.0
    p_laps: float = 40.0
    p_haps: float = 100.0
    csi: str = "additive"
    xi: float = 1.0
    gamma_shape: float = 10.0
    gamma_scale: float = 0.1

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.velocity < 0:
            raise ValueError("velocity must be non-negative")
        if self.p_laps <= 0 or self.p_haps <= 0:
            raise ValueError("power budgets must be positive")
        # delegate remaining checks
        self.layout()
        self.channel_params()
        self.csi_model()

    @property
    def U(self) -> int:
        return self.B * self.K

    @property
    def noise(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def layout(self) -> ClusterLayout:
        return ClusterLayout(self.B, self.q, self.l, self.laps_altitude, self.haps_altitude, self.haps_jitter)

    def channel_params(self) -> ChannelParams:
        return ChannelParams(self.f_laps, self.f_haps, rician_x=self.rician_x, shadow_var_db=self.shadow_var_db,
                             T_c=self.T_c, N_laps=self.N_laps, N_haps=self.N_haps)

    def csi_model(self) -> CsiNoiseModel:
        if self.csi == "multiplicative":
            return CsiNoiseModel("multiplicative", shape=self.gamma_shape, scale=self.gamma_scale)
        return CsiNoiseModel(self.csi, xi=self.xi)


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 200
    T: int = 50
    eta: int = 4
    eta_ckpt: int = 10
    batch: int = 32
    lr: float = 4e-4
    gamma: float = 0.4
    gamma_haps: float = 0.4
    buffer_capacity: int = 10000
    mode: str = "buffer"  # buffer | regenerate
    entropy: str = "mean"  # mean | sum over sampled coordinates
    clamp: str = "hard"  # hard (clip) | soft (tanh squash)
    seed: int = 0
    backbone: str = "fno"
    width: int = 8
    modes_laps: tuple = (4, 12)
    modes_haps: tuple = (8, 20)
    hidden: int = 512
    rank_laps: int | None = None
    rank_haps: int | None = None
    system: SystemConfig = field(default_factory=SystemConfig)

    def __post_init__(self):
        if self.episodes < 0 or self.T < 1:
            raise ValueError("episodes must be >= 0 and T >= 1")
        if self.eta < 1 or self.eta_ckpt < 1:
            raise ValueError("update and checkpoint periods must be >= 1")
        if self.batch < 1 or self.buffer_capacity < 1:
            raise ValueError("batch size and buffer capacity must be positive")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.gamma < 0 or self.gamma_haps < 0:
            raise ValueError("entropy coefficients must be non-negative")
        if self.entropy not in ("sum", "mean"):
            raise ValueError(f"unknown entropy normalisation {self.entropy!r}")
        if self.mode not in ("buffer", "regenerate"):
            raise ValueError(f"unknown training mode {self.mode!r}")
        self.laps_actor_config()
        self.haps_actor_config()

    def laps_actor_config(self) -> ActorConfig:
        s = self.system
        return ActorConfig.fitted(s.K, s.N_laps, self.modes_laps, backbone=self.backbone, width=self.width,
                                  hidden=self.hidden, rank=self.rank_laps, clamp=self.clamp)

    def haps_actor_config(self) -> ActorConfig:
        s = self.system
        return ActorConfig.fitted(s.U, s.N_haps, self.modes_haps, backbone=self.backbone, width=self.width,
                                  hidden=self.hidden, rank=self.rank_haps, clamp=self.clamp)

    def replace(self, **changes) -> "TrainConfig":
        sys_changes = {k: changes.pop(k) for k in list(changes) if k in _SYSTEM_FIELDS}
        system = dataclasses.replace(self.system, **sys_changes) if sys_changes else self.system
        return dataclasses.replace(self, system=system, **changes)


_SYSTEM_FIELDS = {f.name for f in dataclasses.fields(SystemConfig)}


def desk_config(**changes) -> TrainConfig:
    """Small geometry for tests and CI: B=2, K=2, 4/8 antennas, T=20, 50 episodes."""
    base = TrainConfig(episodes=50, T=20, system=SystemConfig(B=2, K=2, N_laps=4, N_haps=8))
    return base.replace(**changes)
