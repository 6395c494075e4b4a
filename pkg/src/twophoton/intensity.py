"""Mean equalization, per-pixel statistics and condition difference maps.

All functions take a channel as a ``(T, R, C)`` array, typically
``stack.channel(i)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrameError, InsufficientFramesError


@dataclass(frozen=True)
class PixelStats:
    """Per-pixel temporal mean and sample variance (denominator ``T - 1``).

    ``valid`` marks the pixels included in the statistics; excluded pixels hold
    zero in both maps. ``None`` means every pixel counts.
    """

    mean_map: np.ndarray
    var_map: np.ndarray
    frames_used: int
    valid: np.ndarray | None = None


@dataclass(frozen=True)
class EqualizationReport:
    standard: float
    frame_means_before: np.ndarray
    frame_means_after: np.ndarray
    total_var_before: float
    total_var_after: float
    reduction_pct: float

    def to_json(self) -> dict:
        return {
            "standard": self.standard,
            "frame_means_before": [float(v) for v in self.frame_means_before],
            "frame_means_after": [float(v) for v in self.frame_means_after],
            "total_var_before": self.total_var_before,
            "total_var_after": self.total_var_after,
            "reduction_pct": self.reduction_pct,
        }


def _as_channel(ch) -> np.ndarray:
    ch = np.asarray(ch)
    if ch.ndim != 3:
        raise ValueError(f"channel must be (T, R, C), got shape {ch.shape}")
    return ch


def frame_means(ch) -> np.ndarray:
    """Arithmetic mean of each frame, accumulated in float64."""
    ch = _as_channel(ch)
    return ch.reshape(ch.shape[0], -1).astype(np.float64).mean(axis=1)


def pixel_stats(ch, valid: np.ndarray | None = None) -> PixelStats:
    ch = _as_channel(ch)
    T = ch.shape[0]
    if T < 2:
        raise InsufficientFramesError(f"pixel statistics need at least 2 frames, got {T}")
    data = ch.astype(np.float64)
    mean = data.mean(axis=0)
    var = np.sum((data - mean) ** 2, axis=0) / (T - 1)
    if valid is not None:
        valid = np.asarray(valid, dtype=bool)
        if valid.shape != mean.shape:
            raise ValueError(f"valid mask shape {valid.shape} != frame shape {mean.shape}")
        mean = np.where(valid, mean, 0.0)
        var = np.where(valid, var, 0.0)
    return PixelStats(mean, var, T, valid)


def total_variance(ps: PixelStats) -> float:
    """Sum of per-pixel variances."""
    return float(np.sum(ps.var_map))


def variance_reduction_pct(before: float, after: float) -> float:
    if not before > 0:
        raise ValueError(f"baseline variance must be > 0, got {before}")
    return 100.0 * (before - after) / before


def mean_equalize(ch, valid: np.ndarray | None = None) -> tuple[np.ndarray, EqualizationReport]:
    """Scale every frame so its mean equals the mean of all frame means.

    Each frame is multiplied by ``standard / frame_mean``. The returned channel
    is float32 like the stack it came from.

    Raises
    ------
    DegenerateFrameError
        If any frame mean is not strictly positive.
    """
    ch = _as_channel(ch)
    before = frame_means(ch)
    bad = np.flatnonzero(~(before > 0))
    if bad.size:
        raise DegenerateFrameError(f"frame(s) {bad.tolist()[:10]} have non-positive mean intensity")
    standard = float(before.mean())
    scale = standard / before
    out = (ch.astype(np.float64) * scale[:, None, None]).astype(np.float32)
    after = frame_means(out)

    if ch.shape[0] >= 2:
        var_before = total_variance(pixel_stats(ch, valid))
        var_after = total_variance(pixel_stats(out, valid))
    else:
        var_before = var_after = 0.0
    pct = variance_reduction_pct(var_before, var_after) if var_before > 0 else 0.0
    return out, EqualizationReport(standard, before, after, var_before, var_after, pct)


def mean_variance_scatter(ps: PixelStats, epsilon: float = 1e-12) -> list[tuple[float, float]]:
    """``(log(mean + eps), log(var + eps))`` per pixel in row-major order.

    Pixels excluded by ``ps.valid`` are skipped.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    lm = np.log(ps.mean_map.ravel() + epsilon)
    lv = np.log(ps.var_map.ravel() + epsilon)
    if ps.valid is not None:
        keep = ps.valid.ravel()
        lm, lv = lm[keep], lv[keep]
    return list(zip(lm.tolist(), lv.tolist()))


def difference_map(mean_a, mean_b) -> np.ndarray:
    """Elementwise ``mean_a - mean_b`` (stimulated minus resting by convention)."""
    a = np.asarray(mean_a, dtype=np.float64)
    b = np.asarray(mean_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a - b
