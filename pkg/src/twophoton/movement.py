"""Brain-movement time series and their Levene comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientFramesError
from .registration import AlignmentResult
from .stack import DEFAULT_FRAME_PERIOD_S
from .stats import LeveneReport, levene

FRAMEDIFF = "framediff"
SHIFTMAG = "shiftmag"


@dataclass(frozen=True)
class MovementSeries:
    values: np.ndarray
    kind: str
    frame_period_s: float = DEFAULT_FRAME_PERIOD_S

    def __post_init__(self):
        if self.kind not in (FRAMEDIFF, SHIFTMAG):
            raise ValueError(f"unknown movement kind {self.kind!r}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    def times_s(self) -> np.ndarray:
        # frame-difference t sits between frames t and t+1; stamp it at t+1
        offset = 1 if self.kind == FRAMEDIFF else 0
        return (np.arange(self.values.size) + offset) * self.frame_period_s

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.times_s().tolist(), self.values.tolist()))


def framediff_series(ch, frame_period_s: float = DEFAULT_FRAME_PERIOD_S) -> MovementSeries:
    """Sum of absolute pixel differences between consecutive frames."""
    ch = np.asarray(ch)
    if ch.ndim != 3:
        raise ValueError(f"channel must be (T, R, C), got shape {ch.shape}")
    if ch.shape[0] < 2:
        raise InsufficientFramesError(f"frame differences need at least 2 frames, got {ch.shape[0]}")
    data = ch.astype(np.float64)
    vals = np.abs(np.diff(data, axis=0)).reshape(ch.shape[0] - 1, -1).sum(axis=1)
    return MovementSeries(vals, FRAMEDIFF, frame_period_s)


def shiftmag_series(res: AlignmentResult, frame_period_s: float = DEFAULT_FRAME_PERIOD_S) -> MovementSeries:
    """Translation magnitude ``sqrt(dx^2 + dy^2)`` per frame."""
    p = res.params()
    return MovementSeries(np.hypot(p[:, 0], p[:, 1]), SHIFTMAG, frame_period_s)


def window_means(series: MovementSeries, window_s: float) -> np.ndarray:
    """Average the series over consecutive non-overlapping windows of ``window_s`` seconds.

    A trailing partial window is dropped.
    """
    n = int(round(window_s / series.frame_period_s))
    if n < 1:
        raise ValueError(f"window {window_s}s is shorter than one frame")
    full = series.values.size // n
    return series.values[: full * n].reshape(full, n).mean(axis=1)


def movement_levene(rest: MovementSeries, stim: MovementSeries, center: str = "mean",
                    window_s: float | None = None) -> LeveneReport:
    """Two-group Levene test of resting vs stimulated movement.

    With ``window_s`` the groups are the per-window means instead of the raw
    per-frame values.
    """
    if rest.kind != stim.kind:
        raise ValueError(f"movement kinds differ: {rest.kind} vs {stim.kind}")
    if window_s is None:
        a, b = rest.values, stim.values
    else:
        a, b = window_means(rest, window_s), window_means(stim, window_s)
    return levene([a, b], center=center)
