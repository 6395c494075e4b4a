"""Deterministic synthetic two-channel stacks with known motion and activity.

The scene is a flat baseline plus Gaussian cells. The structural channel
shows every cell with constant brightness. The functional channel shows the
cells dimmer, adds exponentially decaying transients to active cells at each
shock, and is modulated by a per-frame gain. Frames are rendered analytically
at the moved coordinates, so ``apply_rigid(frame_t, true_transforms[t])``
reproduces the unmoved scene up to interpolation of the noise.

Randomness comes from numpy's counter-based Philox generator keyed by
``(seed, stream)``: each channel/frame pair owns a stream, so any frame can be
regenerated alone and in any order with identical output.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import _kernels
from .errors import ConfigError
from .registration import RigidTransform
from .stack import DEFAULT_FRAME_PERIOD_S, FUNCTIONAL, STRUCTURAL, ImageStack, StimSchedule, shock_times

TRANSIENT_DECAY_S = 1.0
_PLACEMENT_STREAM = 0
_MAX_PLACEMENT_TRIES = 10_000


@dataclass(frozen=True)
class SynthConfig:
    rows: int = 128
    cols: int = 128
    frames: int = 200
    n_cells: int = 10
    cell_radius_px: float = 4.0
    baseline: float = 10.0
    noise_sd: float = 0.0
    drift_amplitude_px: float = 0.0
    drift_period_frames: int = 50
    theta_amplitude_rad: float = 0.0
    active_cells: tuple[int, ...] = ()
    transient_gain: float = 0.0
    stim: StimSchedule = field(default_factory=StimSchedule)
    global_gain_wobble: float = 0.0
    seed: int = 0
    # extensions beyond the core parameter set
    cell_amplitude: float = 100.0
    functional_amplitude: float = 50.0
    gain_period_frames: int = 23
    frame_period_s: float = DEFAULT_FRAME_PERIOD_S
    cell_centers: tuple[tuple[float, float], ...] | None = None
    min_cell_spacing: float = 2.5  # in cell radii

    def __post_init__(self):
        for name in ("rows", "cols", "frames", "n_cells", "drift_period_frames", "gain_period_frames"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("cell_radius_px", "noise_sd", "drift_amplitude_px", "theta_amplitude_rad",
                     "transient_gain", "global_gain_wobble", "cell_amplitude", "functional_amplitude", "baseline"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.cell_radius_px <= 0:
            raise ConfigError("cell_radius_px must be > 0")
        if self.global_gain_wobble >= 1:
            raise ConfigError("global_gain_wobble must be < 1 to keep gains positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.frame_period_s <= 0:
            raise ConfigError("frame_period_s must be > 0")
        active = tuple(int(i) for i in self.active_cells)
        if any(not 0 <= i < self.n_cells for i in active):
            raise ConfigError(f"active_cells {active} not within [0, {self.n_cells})")
        object.__setattr__(self, "active_cells", active)
        if isinstance(self.stim, dict):
            object.__setattr__(self, "stim", StimSchedule.from_dict(self.stim))
        if self.cell_centers is not None:
            centers = tuple((float(r), float(c)) for r, c in self.cell_centers)
            if len(centers) != self.n_cells:
                raise ConfigError(f"{len(centers)} cell_centers given for n_cells={self.n_cells}")
            for r, c in centers:
                if not (0 <= r <= self.rows - 1 and 0 <= c <= self.cols - 1):
                    raise ConfigError(f"cell center ({r}, {c}) lies outside the {self.rows}x{self.cols} frame")
            object.__setattr__(self, "cell_centers", centers)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        d = dict(d)
        if "stim" in d and isinstance(d["stim"], dict):
            d["stim"] = StimSchedule.from_dict(d["stim"])
        if "active_cells" in d:
            d["active_cells"] = tuple(d["active_cells"])
        if d.get("cell_centers") is not None:
            d["cell_centers"] = tuple(tuple(c) for c in d["cell_centers"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stim"] = self.stim.to_dict()
        d["active_cells"] = list(self.active_cells)
        if self.cell_centers is not None:
            d["cell_centers"] = [list(c) for c in self.cell_centers]
        return d


@dataclass
class SynthTruth:
    true_transforms: list[RigidTransform]
    cell_centers: np.ndarray  # (n_cells, 2) as (row, col)
    cell_active_flags: np.ndarray
    per_frame_gain: np.ndarray
    reference_time: int = 0

    def params(self) -> np.ndarray:
        return np.array([t.as_array() for t in self.true_transforms]).reshape(-1, 3)

    def to_json(self) -> dict:
        return {
            "reference_time": self.reference_time,
            "transforms": [[t.dx, t.dy, t.theta] for t in self.true_transforms],
            "cell_centers": self.cell_centers.tolist(),
            "cell_active_flags": [bool(b) for b in self.cell_active_flags],
            "per_frame_gain": self.per_frame_gain.tolist(),
        }


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) + (int(stream) << 64)))


def _noise_stream(channel: int, t: int, frames: int) -> int:
    return 1 + channel * frames + t


def place_cells(cfg: SynthConfig) -> np.ndarray:
    """Cell centres as ``(row, col)``, either given or drawn with a minimum spacing."""
    if cfg.cell_centers is not None:
        return np.array(cfg.cell_centers, dtype=np.float64).reshape(-1, 2)
    margin = cfg.cell_radius_px + cfg.drift_amplitude_px
    lo_r, hi_r = margin, cfg.rows - 1 - margin
    lo_c, hi_c = margin, cfg.cols - 1 - margin
    if hi_r <= lo_r or hi_c <= lo_c:
        raise ConfigError(f"a {cfg.rows}x{cfg.cols} frame cannot hold cells of radius "
                          f"{cfg.cell_radius_px} with drift {cfg.drift_amplitude_px}")
    rng = _rng(cfg.seed, _PLACEMENT_STREAM)
    min_d2 = (cfg.min_cell_spacing * cfg.cell_radius_px) ** 2
    centers: list[tuple[float, float]] = []
    tries = 0
    while len(centers) < cfg.n_cells:
        tries += 1
        if tries > _MAX_PLACEMENT_TRIES:
            raise ConfigError(f"could not place {cfg.n_cells} cells with spacing "
                              f"{cfg.min_cell_spacing} radii; lower n_cells or min_cell_spacing")
        r = lo_r + (hi_r - lo_r) * rng.random()
        c = lo_c + (hi_c - lo_c) * rng.random()
        if all((r - r0) ** 2 + (c - c0) ** 2 >= min_d2 for r0, c0 in centers):
            centers.append((r, c))
    return np.array(centers, dtype=np.float64)


def motion_path(cfg: SynthConfig) -> list[RigidTransform]:
    """Per-frame corrective transforms; the middle frame is the identity."""
    ref = cfg.frames // 2
    out = []
    for t in range(cfg.frames):
        phi = 2.0 * math.pi * (t - ref) / cfg.drift_period_frames
        out.append(RigidTransform(
            cfg.drift_amplitude_px * math.sin(phi),
            cfg.drift_amplitude_px * math.sin(2.0 * phi),
            cfg.theta_amplitude_rad * math.sin(3.0 * phi),
        ))
    return out


def gain_path(cfg: SynthConfig) -> np.ndarray:
    t = np.arange(cfg.frames)
    return 1.0 + cfg.global_gain_wobble * np.sin(2.0 * np.pi * t / cfg.gain_period_frames)


def transient_activity(cfg: SynthConfig) -> np.ndarray:
    """Summed exponential transients per frame (unit height per shock)."""
    tau = np.arange(cfg.frames) * cfg.frame_period_s
    shocks = np.asarray(shock_times(cfg.stim), dtype=np.float64)
    if shocks.size == 0:
        return np.zeros(cfg.frames)
    lag = tau[:, None] - shocks[None, :]
    return np.where(lag >= 0, np.exp(-np.maximum(lag, 0.0) / TRANSIENT_DECAY_S), 0.0).sum(axis=1)


def generate(cfg: SynthConfig) -> tuple[ImageStack, SynthTruth]:
    """Render a 2-channel stack and its ground truth from ``cfg``."""
    centers = place_cells(cfg)
    active = np.zeros(cfg.n_cells, dtype=bool)
    active[list(cfg.active_cells)] = True
    transforms = motion_path(cfg)
    gain = gain_path(cfg)
    activity = transient_activity(cfg) * cfg.transient_gain
    sigma = cfg.cell_radius_px / 2.0

    R, C, T = cfg.rows, cfg.cols, cfg.frames
    data = np.empty((2, T, R, C), dtype=np.float32)
    struct_amp = np.full(cfg.n_cells, cfg.cell_amplitude)
    for t, tr in enumerate(transforms):
        s = _kernels.render_blobs(R, C, centers, struct_amp, sigma, tr.dx, tr.dy, tr.theta, cfg.baseline)
        func_amp = cfg.functional_amplitude + activity[t] * active
        f = _kernels.render_blobs(R, C, centers, func_amp, sigma, tr.dx, tr.dy, tr.theta, cfg.baseline)
        f *= gain[t]
        if cfg.noise_sd > 0:
            s += cfg.noise_sd * _rng(cfg.seed, _noise_stream(STRUCTURAL, t, T)).standard_normal((R, C))
            f += cfg.noise_sd * _rng(cfg.seed, _noise_stream(FUNCTIONAL, t, T)).standard_normal((R, C))
        data[STRUCTURAL, t] = np.maximum(s, 0.0)
        data[FUNCTIONAL, t] = np.maximum(f, 0.0)

    truth = SynthTruth(transforms, centers, active, gain, T // 2)
    return ImageStack(data, cfg.frame_period_s), truth


def heart_rate_signal(n_samples: int, sd: float, seed: int, mean_bpm: float = 300.0,
                      stream: int = 2**32) -> np.ndarray:
    """Gaussian heart-rate-like series for pipeline fixtures."""
    return mean_bpm + sd * _rng(seed, stream).standard_normal(n_samples)
