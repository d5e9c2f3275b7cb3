"""Episode geometry: cluster grid, platform placement and user mobility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

MAX_REDRAWS = 64


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterLayout:
    """Square grid of LAPS clusters with one HAPS above the centroid.

    Distances are in meters.  Cluster centers sit on a row-major grid with
    ``ceil(sqrt(B))`` columns and spacing ``l``.
    """

    B: int = 4
    q: float = 2000.0
    l: float = 6000.0
    laps_altitude: float = 2000.0
    haps_altitude: float = 20000.0
    haps_jitter_radius: float = 500.0

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.q <= 0:
            raise ValueError("cluster radius q must be positive")
        if self.l < 0:
            raise ValueError("cluster spacing l must be non-negative")
        if self.laps_altitude <= 0 or self.haps_altitude <= 0:
            raise ValueError("altitudes must be positive")
        if self.haps_jitter_radius < 0:
            raise ValueError("jitter radius must be non-negative")

    @property
    def grid_shape(self) -> tuple[int, int]:
        cols = math.ceil(math.sqrt(self.B))
        rows = math.ceil(self.B / cols)
        return rows, cols

    def centers(self) -> np.ndarray:
        """Cluster centers as a ``[B, 2]`` array."""
        _, cols = self.grid_shape
        idx = np.arange(self.B)
        return np.stack([(idx % cols) * self.l, (idx // cols) * self.l], axis=1).astype(float)

    def centroid(self) -> np.ndarray:
        return self.centers().mean(axis=0)


@dataclass
class UserState:
    position: np.ndarray
    cluster_id: int
    direction: float
    velocity: float


@dataclass
class NetworkTopology:
    layout: ClusterLayout
    laps_positions: np.ndarray  # [B, 3]
    haps_position: np.ndarray  # [3]
    users: list[UserState] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.users) // self.layout.B

    @property
    def U(self) -> int:
        return len(self.users)

    def cluster_users(self, b: int) -> list[int]:
        """Indices of the users served by LAPS ``b`` (the set U_b)."""
        return [i for i, u in enumerate(self.users) if u.cluster_id == b]

    def user_positions(self) -> np.ndarray:
        return np.array([u.position for u in self.users])


def _uniform_in_disc(rng, center, radius, size):
    r = radius * np.sqrt(rng.random(size))
    a = rng.uniform(0.0, 2.0 * np.pi, size)
    return center + np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)


def init_episode(layout: ClusterLayout, K: int, v: float, rng: np.random.Generator) -> NetworkTopology:
    """Drop ``K`` users uniformly in every cluster and jitter the HAPS."""
    if K < 1:
        raise ValueError("K must be >= 1")
    centers = layout.centers()
    laps = np.column_stack([centers, np.full(layout.B, layout.laps_altitude)])
    jitter = _uniform_in_disc(rng, layout.centroid(), layout.haps_jitter_radius, 1)[0]
    haps = np.array([jitter[0], jitter[1], layout.haps_altitude])
    users = []
    for b in range(layout.B):
        pos = _uniform_in_disc(rng, centers[b], layout.q, K)
        dirs = rng.uniform(0.0, 2.0 * np.pi, K)
        users.extend(UserState(pos[k], b, float(dirs[k]), float(v)) for k in range(K))
    return NetworkTopology(layout, laps, haps, users)


def step_mobility(topology: NetworkTopology, T_c: float, rng: np.random.Generator | None = None) -> NetworkTopology:
    """Advance every user by ``v*T_c`` along its heading.

    A move that would leave the cluster disc triggers uniform redraws of the
    heading (at most ``MAX_REDRAWS``); if none fits, the user holds position.
    """
    if T_c <= 0:
        raise ValueError("T_c must be positive")
    centers = topology.layout.centers()
    q = topology.layout.q
    moved = []
    for u in topology.users:
        step = u.velocity * T_c
        center = centers[u.cluster_id]
        heading = u.direction
        new = u.position + step * np.array([math.cos(heading), math.sin(heading)])
        if np.hypot(*(new - center)) > q:
            new = u.position
            for _ in range(MAX_REDRAWS):
                if rng is None:
                    raise ValueError("boundary redraw requires a random stream")
                cand = rng.uniform(0.0, 2.0 * np.pi)
                trial = u.position + step * np.array([math.cos(cand), math.sin(cand)])
                if np.hypot(*(trial - center)) <= q:
                    heading, new = cand, trial
                    break
        moved.append(replace(u, position=new, direction=float(heading)))
    return replace(topology, users=moved)


def distance(bs_position, user) -> float:
    """3-D distance from a base station to a ground user (user altitude 0)."""
    pos = user.position if isinstance(user, UserState) else np.asarray(user, dtype=float)
    bs = np.asarray(bs_position, dtype=float)
    return float(math.sqrt((bs[0] - pos[0]) ** 2 + (bs[1] - pos[1]) ** 2 + bs[2] ** 2))


def angles(bs_position, user) -> tuple[float, float]:
    """Elevation (from the horizontal plane) and azimuth of ``user`` seen from the BS."""
    pos = user.position if isinstance(user, UserState) else np.asarray(user, dtype=float)
    bs = np.asarray(bs_position, dtype=float)
    dx, dy = pos[0] - bs[0], pos[1] - bs[1]
    d = math.sqrt(dx * dx + dy * dy + bs[2] * bs[2])
    if d == 0.0:
        raise GeometryError("degenerate geometry: user coincides with the base station")
    theta = math.asin(min(1.0, abs(bs[2]) / d))
    phi = 0.0 if dx == 0.0 and dy == 0.0 else math.atan2(dy, dx)
    return theta, phi


def distances_and_angles(bs_positions: np.ndarray, user_xy: np.ndarray):
    """Vectorised :func:`distance`/:func:`angles` for ``[S,3]`` stations and ``[U,2]`` users.

    Returns ``(d, theta, phi)``, each ``[S, U]``.
    """
    bs = np.atleast_2d(bs_positions)
    dx = user_xy[None, :, 0] - bs[:, None, 0]
    dy = user_xy[None, :, 1] - bs[:, None, 1]
    h = np.broadcast_to(bs[:, None, 2], dx.shape)
    d = np.sqrt(dx * dx + dy * dy + h * h)
    if np.any(d == 0.0):
        raise GeometryError("degenerate geometry: user coincides with the base station")
    theta = np.arcsin(np.minimum(1.0, np.abs(h) / d))
    phi = np.where((dx == 0.0) & (dy == 0.0), 0.0, np.arctan2(dy, dx))
    return d, theta, phi
