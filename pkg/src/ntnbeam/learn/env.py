"""Episode simulator: geometry, per-link channels and agent observations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ntnbeam import channel as ch
from ntnbeam.learn.config import SystemConfig
from ntnbeam.linkrate import BeamformingSet, RateReport, evaluate_rates
from ntnbeam.topology import distances_and_angles, init_episode, step_mobility


@dataclass
class Snapshot:
    """True channels of one slot with the amplitudes used for CSI errors."""

    H_laps: np.ndarray  # [B, U, N]
    H_haps: np.ndarray  # [U, N0]
    amp_laps: np.ndarray  # [B, U]
    amp_haps: np.ndarray  # [U]


@dataclass
class Observation:
    laps: np.ndarray  # [B, 2, K, N] local imperfect CSI
    haps: np.ndarray  # [2, U, N0]


class Episode:
    """One episode of the two-tier network.

    Shadowing is drawn once per link and held; LoS phases follow the users;
    the diffuse parts evolve by the AR(1) recursion.
    """

    def __init__(self, system: SystemConfig, rng: np.random.Generator, topology=None):
        self.system = system
        self.rng = rng
        self.params = system.channel_params()
        self.csi = system.csi_model()
        self.topology = topology if topology is not None else init_episode(system.layout(), system.K, system.velocity, rng)
        B, U = system.B, system.U
        sd = np.sqrt(system.shadow_var_db)
        self.shadow_laps = rng.normal(0.0, sd, (B, U))
        self.shadow_haps = rng.normal(0.0, sd, U)
        p = self.params
        self.nlos_laps = ch.init_nlos(rng, (B, U, p.N_laps), ch.doppler_rho(system.velocity, p.f_laps, p.T_c))
        self.nlos_haps = ch.init_nlos(rng, (U, p.N_haps), ch.doppler_rho(system.velocity, p.f_haps, p.T_c))
        self.t = 0

    def channels(self) -> Snapshot:
        p = self.params
        xy = self.topology.user_positions()
        d, th, ph = distances_and_angles(self.topology.laps_positions, xy)
        L = ch.large_scale_gain(d, p.f_laps, self.shadow_laps, p.c)
        H_laps = ch.compose_channel(ch.steering_vector(th, ph, p.N_laps, ch.array_shape(p.N_laps)), self.nlos_laps.nlos, p.rician_x, L)
        d0, th0, ph0 = distances_and_angles(self.topology.haps_position[None], xy)
        L0 = ch.large_scale_gain(d0[0], p.f_haps, self.shadow_haps, p.c)
        H_haps = ch.compose_channel(ch.steering_vector(th0[0], ph0[0], p.N_haps, ch.array_shape(p.N_haps)), self.nlos_haps.nlos, p.rician_x, L0)
        return Snapshot(H_laps, H_haps, np.sqrt(L), np.sqrt(L0))

    def observe(self, snap: Snapshot) -> Observation:
        s = self.system
        Ht_laps = ch.corrupt_csi(snap.H_laps, self.csi, self.rng, snap.amp_laps)
        Ht_haps = ch.corrupt_csi(snap.H_haps, self.csi, self.rng, snap.amp_haps)
        local = np.stack([Ht_laps[b, b * s.K:(b + 1) * s.K] for b in range(s.B)])  # [B, K, N]
        laps = np.stack([local.real, local.imag], axis=1)
        haps = np.stack([Ht_haps.real, Ht_haps.imag])
        return Observation(laps, haps)

    def step(self):
        self.topology = step_mobility(self.topology, self.system.T_c, self.rng)
        self.nlos_laps = ch.step_nlos(self.nlos_laps, self.rng)
        self.nlos_haps = ch.step_nlos(self.nlos_haps, self.rng)
        self.t += 1

    def rates(self, snap: Snapshot, W_laps, W_haps) -> RateReport:
        s = self.system
        beams = BeamformingSet(np.asarray(W_laps), np.asarray(W_haps), s.p_laps, s.p_haps).normalized()
        return evaluate_rates(snap.H_laps, snap.H_haps, beams, s.noise)


def planes_to_complex(state: np.ndarray) -> np.ndarray:
    """Inverse of the two-plane state layout: ``[..., 2, r, n]`` -> ``[..., r, n]``."""
    state = np.asarray(state)
    return state[..., 0, :, :] + 1j * state[..., 1, :, :]
