"""FIFO replay buffer with a transaction counter."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Transition:
    state: np.ndarray  # [2, rows, N] imperfect CSI planes
    action: np.ndarray  # complex [rows, N]
    reward: float
    tag: Any = None  # agent label, e.g. ("laps", b) or ("haps", 0)


class ReplayBuffer:
    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("buffer capacity must be positive")
        self.capacity = capacity
        self._items = deque(maxlen=capacity)
        self.pushes = 0
        self.samples = 0

    def __len__(self):
        return len(self._items)

    @property
    def transactions(self) -> int:
        """Total pushes plus sampled transitions."""
        return self.pushes + self.samples

    def push(self, transition: Transition):
        self._items.append(transition)
        self.pushes += 1

    def sample(self, n: int, rng: np.random.Generator) -> list[Transition]:
        """``n`` distinct transitions drawn uniformly."""
        if n > len(self._items):
            raise ValueError(f"cannot sample {n} transitions from a buffer holding {len(self._items)}")
        idx = rng.choice(len(self._items), size=n, replace=False)
        self.samples += n
        return [self._items[i] for i in idx]

    def contents(self) -> list[Transition]:
        return list(self._items)
