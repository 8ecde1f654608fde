"""Containers for sampled trajectories and jump ledgers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class JumpLedger:
    """Jumps with ``|size| > threshold`` on a time window, ordered by time."""

    threshold: float
    times: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.sizes.shape:
            raise ValueError("jump times and sizes must have equal length")

    def __len__(self) -> int:
        return int(self.times.size)

    def shifted(self, offset: float) -> JumpLedger:
        return JumpLedger(self.threshold, self.times + offset, self.sizes)

    @staticmethod
    def concat(ledgers: list[JumpLedger], threshold: float) -> JumpLedger:
        if not ledgers:
            return JumpLedger(threshold, np.empty(0), np.empty(0))
        return JumpLedger(
            threshold,
            np.concatenate([led.times for led in ledgers]),
            np.concatenate([led.sizes for led in ledgers]),
        )


@dataclass
class PathRecord:
    """A sample path observed on an increasing time grid.

    ``channels`` holds extra per-time traces recorded alongside the values
    (for instance the running terms of the Ito decomposition).
    """

    times: np.ndarray
    values: np.ndarray
    ledger: JumpLedger | None = None
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    diverged: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError(
                f"times and values differ in length ({self.times.size} vs {self.values.size})"
            )

    def __len__(self) -> int:
        return int(self.times.size)

    def value_at(self, t: float, channel: str | None = None) -> float:
        """Value at the last recorded time not after ``t`` (cadlag reading)."""
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k < 0:
            raise ValueError(f"time {t} precedes the first recorded time {self.times[0]}")
        data = self.values if channel is None else self.channels[channel]
        return float(data[k])
