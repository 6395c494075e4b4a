"""In-memory data model: image stacks, biosignals and stimulus schedules.

Stacks are stored as ``float32`` arrays in ``[channel, time, row, col]``
order. Channel 0 holds the structural dye and channel 1 the functional dye.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

STRUCTURAL = 0
FUNCTIONAL = 1

DEFAULT_FRAME_PERIOD_S = 0.125


@dataclass(frozen=True, eq=False)
class ImageStack:
    """Four-dimensional intensity array with frame timing.

    Parameters
    ----------
    data : ndarray, shape (channels, frames, rows, cols)
        Finite, non-negative fluorescence intensities. Converted to a
        read-only ``float32`` array.
    frame_period_s : float
        Seconds between consecutive frames.
    """

    data: np.ndarray
    frame_period_s: float = DEFAULT_FRAME_PERIOD_S

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, copy=True)
        if arr.ndim != 4:
            raise ValueError(f"stack data must be 4-D (channel, time, row, col), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"every stack dimension must be >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("stack data contains NaN or Inf")
        if not (self.frame_period_s > 0 and np.isfinite(self.frame_period_s)):
            raise ValueError(f"frame_period_s must be > 0, got {self.frame_period_s}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "frame_period_s", float(self.frame_period_s))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    @property
    def rows(self) -> int:
        return self.data.shape[2]

    @property
    def cols(self) -> int:
        return self.data.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    def channel(self, index: int) -> np.ndarray:
        """Read-only ``(T, R, C)`` view of one channel."""
        if not 0 <= index < self.channels:
            raise IndexError(f"channel {index} out of range for {self.channels}-channel stack")
        return self.data[index]

    def with_channel(self, index: int, values: np.ndarray) -> "ImageStack":
        """Return a new stack with one channel replaced."""
        self.channel(index)
        data = np.array(self.data, copy=True)
        data[index] = values
        return ImageStack(data, self.frame_period_s)

    def times_s(self) -> np.ndarray:
        return np.arange(self.frames) * self.frame_period_s

    def __eq__(self, other):
        if not isinstance(other, ImageStack):
            return NotImplemented
        return (
            self.frame_period_s == other.frame_period_s
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )

    __hash__ = None


def frame_at(stack: ImageStack, channel: int, t: int) -> np.ndarray:
    """Return the ``(R, C)`` frame of ``channel`` at time index ``t``."""
    if not 0 <= channel < stack.channels:
        raise IndexError(f"channel {channel} out of range [0, {stack.channels})")
    if not 0 <= t < stack.frames:
        raise IndexError(f"time index {t} out of range [0, {stack.frames})")
    return stack.data[channel, t]


@dataclass(frozen=True)
class BioSignal:
    sample_rate_hz: float
    samples: np.ndarray
    label: str = "value"

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("biosignal samples must be a non-empty 1-D series")
        if not np.all(np.isfinite(samples)):
            raise ValueError("biosignal samples must be finite")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class StimSchedule:
    """Trial onsets plus the fixed within-trial shock pattern.

    Shocks within a trial are spaced onset-to-onset by ``inter_shock_gap_ms``.
    """

    trial_starts_s: Sequence[float] = field(default_factory=tuple)
    shocks_per_trial: int = 12
    shock_duration_ms: float = 1.0
    inter_shock_gap_ms: float = 167.0
    current_mA: float = 1.5

    def __post_init__(self):
        starts = tuple(float(s) for s in self.trial_starts_s)
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("trial_starts_s must be strictly increasing")
        if self.shocks_per_trial < 1:
            raise ValueError("shocks_per_trial must be >= 1")
        if self.inter_shock_gap_ms < 0:
            raise ValueError("inter_shock_gap_ms must be >= 0")
        object.__setattr__(self, "trial_starts_s", starts)

    def to_dict(self) -> dict:
        return {
            "trial_starts_s": list(self.trial_starts_s),
            "shocks_per_trial": self.shocks_per_trial,
            "shock_duration_ms": self.shock_duration_ms,
            "inter_shock_gap_ms": self.inter_shock_gap_ms,
            "current_mA": self.current_mA,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StimSchedule":
        return cls(**d)


def shock_times(sched: StimSchedule) -> list[float]:
    """Onset time in seconds of every shock, trial by trial."""
    gap_s = sched.inter_shock_gap_ms / 1000.0
    return [start + k * gap_s for start in sched.trial_starts_s for k in range(sched.shocks_per_trial)]
