"""Rigid (shift + rotation) registration of frames to a reference frame.

Each frame is scored against the reference by the mean squared error over
pixels whose warped sample stays inside the frame. The best transform is found
with an exhaustive integer-shift grid followed by a Nelder-Mead refinement over
``(dx, dy, theta)``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import AlignmentError
from .simplex import nelder_mead
from .stack import STRUCTURAL, ImageStack

MIN_VALID_FRACTION = 0.25


@dataclass(frozen=True)
class RigidTransform:
    """Column shift ``dx``, row shift ``dy`` (pixels) and rotation ``theta`` (radians)."""

    dx: float = 0.0
    dy: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("dx", "dy", "theta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"transform {name} must be finite, got {v}")
            object.__setattr__(self, name, float(v))
        if abs(self.theta) >= math.pi:
            raise ValueError(f"|theta| must be < pi, got {self.theta}")

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(0.0, 0.0, 0.0)

    def inverse(self) -> "RigidTransform":
        """Transform undoing this one: rotate by ``-theta`` and shift by ``-R(theta) d``."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return RigidTransform(-(c * self.dx - s * self.dy), -(s * self.dx + c * self.dy), -self.theta)

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.theta])


@dataclass(frozen=True)
class AlignmentConfig:
    reference_channel: int = STRUCTURAL
    reference_time: int | None = None  # None -> floor(T / 2)
    max_shift_px: int = 10
    max_theta_rad: float = 0.1
    tol_px: float = 1e-3
    tol_rad: float = 1e-4
    max_iters: int = 200

    def __post_init__(self):
        if self.max_shift_px <= 0 or self.max_theta_rad <= 0:
            raise ValueError("search bounds must be > 0")
        if self.tol_px <= 0 or self.tol_rad <= 0:
            raise ValueError("tolerances must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if int(self.max_shift_px) != self.max_shift_px:
            raise ValueError("max_shift_px must be an integer number of pixels")
        object.__setattr__(self, "max_shift_px", int(self.max_shift_px))

    def ref_time_for(self, frames: int) -> int:
        return frames // 2 if self.reference_time is None else self.reference_time


@dataclass
class AlignmentResult:
    transforms: list[RigidTransform]
    residual_sse: np.ndarray
    valid_masks: np.ndarray  # (T, R, C) bool
    failed: np.ndarray = field(default=None)  # (T,) bool
    reference_time: int = 0

    def __post_init__(self):
        if self.failed is None:
            self.failed = np.zeros(len(self.transforms), dtype=bool)

    @property
    def failures(self) -> list[int]:
        return [int(t) for t in np.flatnonzero(self.failed)]

    def params(self) -> np.ndarray:
        """``(T, 3)`` array of ``dx, dy, theta``."""
        return np.array([t.as_array() for t in self.transforms]).reshape(-1, 3)

    def valid_everywhere(self) -> np.ndarray:
        return np.all(self.valid_masks, axis=0)


def _check_frame(frame) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise ValueError(f"frame must be 2-D, got shape {frame.shape}")
    if not np.all(np.isfinite(frame)):
        raise ValueError("frame contains non-finite values")
    return frame


def apply_rigid(frame, t: RigidTransform) -> tuple[np.ndarray, np.ndarray]:
    """Warp ``frame`` by ``t`` with bilinear interpolation.

    Returns the warped frame (float64, zeros where invalid) and the validity mask.
    """
    if not all(math.isfinite(v) for v in (t.dx, t.dy, t.theta)):
        raise ValueError("transform must be finite")
    return _kernels.warp(_check_frame(frame), t.dx, t.dy, t.theta)


def transform_mask(shape: tuple[int, int], t: RigidTransform) -> np.ndarray:
    """Validity mask of :func:`apply_rigid` for a frame of ``shape``; depends only on geometry."""
    return _kernels.warp(np.zeros(shape), t.dx, t.dy, t.theta)[1]


def _min_valid(shape) -> int:
    return int(math.ceil(MIN_VALID_FRACTION * shape[0] * shape[1]))


def sse_objective(frame, reference, t: RigidTransform) -> float:
    """Mean squared residual between warped ``frame`` and ``reference`` over valid pixels.

    Returns ``inf`` when fewer than a quarter of the pixels are valid.
    """
    frame = np.asarray(frame, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if frame.shape != reference.shape:
        raise ValueError(f"frame shape {frame.shape} != reference shape {reference.shape}")
    return _objective(frame, reference, t.dx, t.dy, t.theta)


def _objective(frame, reference, dx, dy, theta) -> float:
    acc, n = _kernels.warp_sse(frame, reference, dx, dy, theta)
    if n == 0 or n < _min_valid(frame.shape):
        return math.inf
    return acc / n


def estimate_transform(frame, reference, cfg: AlignmentConfig = AlignmentConfig()) -> tuple[RigidTransform, float]:
    """Find the transform that best maps ``frame`` onto ``reference``.

    Stage one scores every integer shift within ``cfg.max_shift_px`` at zero
    rotation; stage two refines ``(dx, dy, theta)`` from the best grid point
    with a Nelder-Mead simplex restricted to the configured bounds.

    Raises
    ------
    AlignmentError
        If every grid candidate leaves too few valid pixels.
    """
    frame = np.ascontiguousarray(frame, dtype=np.float64)
    reference = np.ascontiguousarray(reference, dtype=np.float64)
    if frame.shape != reference.shape:
        raise ValueError(f"frame shape {frame.shape} != reference shape {reference.shape}")

    s = cfg.max_shift_px
    grid = _kernels.grid_sse(frame, reference, s, _min_valid(frame.shape))
    if not np.any(np.isfinite(grid)):
        raise AlignmentError("no candidate shift leaves 25% of pixels valid")
    iy, ix = np.unravel_index(int(np.argmin(grid)), grid.shape)
    x0 = np.array([ix - s, iy - s, 0.0], dtype=np.float64)
    # recompute through the general path so stage 2 compares like with like
    f0 = _objective(frame, reference, *x0)

    def f(p):
        if abs(p[0]) > s or abs(p[1]) > s or abs(p[2]) > cfg.max_theta_rad:
            return math.inf
        return _objective(frame, reference, p[0], p[1], p[2])

    res = nelder_mead(
        f,
        x0,
        steps=(0.5, 0.5, min(0.01, cfg.max_theta_rad / 2)),
        xtol=(cfg.tol_px, cfg.tol_px, cfg.tol_rad),
        max_iters=cfg.max_iters,
        f0=f0,
    )
    best = res.x if res.fun <= f0 else x0
    t = RigidTransform(*best)
    return t, sse_objective(frame, reference, t)


def align_stack(stack: ImageStack, cfg: AlignmentConfig = AlignmentConfig(), threads: int = 1) -> tuple[ImageStack, AlignmentResult]:
    """Register every frame of ``stack`` to the reference frame.

    The transform is estimated on ``cfg.reference_channel`` and applied to all
    channels at the same time index. Frames whose estimation fails keep their
    original pixels, get an identity transform and are flagged in the result.
    Per-frame work is independent, so ``threads`` only changes wall time.
    """
    T, R, C = stack.frames, stack.rows, stack.cols
    ref_t = cfg.ref_time_for(T)
    if not 0 <= cfg.reference_channel < stack.channels:
        raise IndexError(f"reference channel {cfg.reference_channel} out of range")
    if not 0 <= ref_t < T:
        raise IndexError(f"reference time {ref_t} out of range [0, {T})")
    ref_ch = stack.channel(cfg.reference_channel)
    reference = np.ascontiguousarray(ref_ch[ref_t], dtype=np.float64)

    def register(t):
        if t == ref_t:
            return RigidTransform.identity(), 0.0, False
        try:
            tr, resid = estimate_transform(ref_ch[t], reference, cfg)
            return tr, resid, False
        except AlignmentError:
            ident = RigidTransform.identity()
            return ident, sse_objective(ref_ch[t], reference, ident), True

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(register, range(T)))
    else:
        results = [register(t) for t in range(T)]

    transforms = [r[0] for r in results]
    residual = np.array([r[1] for r in results], dtype=np.float64)
    failed = np.array([r[2] for r in results], dtype=bool)

    out = np.empty_like(stack.data)
    masks = np.empty((T, R, C), dtype=bool)
    for t, tr in enumerate(transforms):
        if failed[t]:
            out[:, t] = stack.data[:, t]
            masks[t] = True
            continue
        for ch in range(stack.channels):
            warped, mask = apply_rigid(stack.data[ch, t], tr)
            out[ch, t] = warped
        masks[t] = mask
    aligned = ImageStack(out, stack.frame_period_s)
    return aligned, AlignmentResult(transforms, residual, masks, failed, ref_t)


ALIGNMENT_CSV_HEADER = ("t", "dx", "dy", "theta", "residual", "failed")


def save_alignment_csv(res: AlignmentResult, path) -> None:
    from .io import fmt

    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(ALIGNMENT_CSV_HEADER) + "\n")
        for t, (tr, r, bad) in enumerate(zip(res.transforms, res.residual_sse, res.failed)):
            fh.write(f"{t},{fmt(tr.dx)},{fmt(tr.dy)},{fmt(tr.theta)},{fmt(r)},{int(bool(bad))}\n")


def load_alignment_csv(path, shape: tuple[int, int] | None = None) -> AlignmentResult:
    """Read transforms written by :func:`save_alignment_csv`.

    Valid masks are rebuilt from geometry when ``shape`` is given.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != ALIGNMENT_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(ALIGNMENT_CSV_HEADER)}")
        rows = [r for r in reader if r]
    transforms = [RigidTransform(float(r[1]), float(r[2]), float(r[3])) for r in rows]
    residual = np.array([float(r[4]) for r in rows])
    failed = np.array([r[5] == "1" for r in rows], dtype=bool)
    if shape is not None:
        masks = np.stack([transform_mask(shape, t) for t in transforms]) if transforms else np.zeros((0,) + tuple(shape), bool)
    else:
        masks = np.zeros((len(transforms), 0, 0), dtype=bool)
    ref_t = next((i for i, (t, r) in enumerate(zip(transforms, residual)) if r == 0.0 and t == RigidTransform.identity()), 0)
    return AlignmentResult(transforms, residual, masks, failed, ref_t)
