"""End-to-end resting vs stimulated analysis.

Runs align -> equalize -> stats -> movement -> Levene -> difference map for a
pair of stacks and writes every artifact plus ``report.json`` into one output
directory. The report holds no timestamps or absolute paths, so identical
inputs give a byte-identical report.
"""

from __future__ import annotations

import json
import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import io
from .errors import TwoPhotonError
from .intensity import difference_map, mean_equalize, mean_variance_scatter, pixel_stats, total_variance, variance_reduction_pct
from .movement import FRAMEDIFF, SHIFTMAG, framediff_series, movement_levene, shiftmag_series
from .registration import AlignmentConfig, align_stack, save_alignment_csv
from .stack import FUNCTIONAL, STRUCTURAL, shock_times
from .stats import levene

log = logging.getLogger(__name__)

STATES = ("resting", "stimulated")
_CHANNEL_NAMES = {STRUCTURAL: "structural", FUNCTIONAL: "functional"}


class StageError(TwoPhotonError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


@dataclass
class PipelineConfig:
    resting_stack: Path
    stimulated_stack: Path
    resting_biosignal: Path | None = None
    stimulated_biosignal: Path | None = None
    schedule: Path | None = None
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)
    valid_only: bool = False
    center: str = "mean"
    window: float | None = None
    functional_channel: int = FUNCTIONAL
    movement_channel: int = STRUCTURAL

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        """Load a JSON config; relative input paths resolve against the config's directory."""
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown pipeline config keys: {sorted(unknown)}")
        base = path.parent
        for key in ("resting_stack", "stimulated_stack", "resting_biosignal", "stimulated_biosignal", "schedule"):
            if raw.get(key) is not None:
                raw[key] = base / raw[key]
        if "alignment" in raw:
            align = dict(raw["alignment"])
            if align.get("reference_time") == "mid":
                align["reference_time"] = None
            raw["alignment"] = AlignmentConfig(**align)
        return cls(**raw)

    def input_paths(self) -> list[Path]:
        paths = [self.resting_stack, self.stimulated_stack, self.resting_biosignal, self.stimulated_biosignal, self.schedule]
        return [Path(p) for p in paths if p is not None]

    def validate(self) -> None:
        resolved = [p.resolve() for p in self.input_paths()]
        if len(set(resolved)) != len(resolved):
            raise ValueError("pipeline input paths must be distinct")
        if (self.resting_biosignal is None) != (self.stimulated_biosignal is None):
            raise ValueError("give both biosignal files or neither")
        if self.center not in ("mean", "median"):
            raise ValueError(f"center must be 'mean' or 'median', got {self.center!r}")

    def summary(self) -> dict:
        d = asdict(self.alignment)
        return {
            "alignment": d,
            "valid_only": self.valid_only,
            "center": self.center,
            "window": self.window,
            "functional_channel": self.functional_channel,
            "movement_channel": self.movement_channel,
        }


@contextmanager
def _stage(name: str):
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except (TwoPhotonError, ValueError, IndexError, OSError, ArithmeticError) as exc:
        raise StageError(name, exc) from exc


def _variance_row(before: float, after: float) -> dict:
    pct = variance_reduction_pct(before, after) if before > 0 else 0.0
    return {"total_var_before": before, "total_var_after": after, "reduction_pct": pct}


def run_full_pipeline(cfg: PipelineConfig, out_dir, threads: int = 1) -> dict:
    """Execute every stage and write ``report.json`` into ``out_dir``.

    Returns the report dictionary. Any stage failure raises :class:`StageError`
    naming the stage.
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: list[str] = []

    def emit(rel: str) -> Path:
        artifacts.append(rel)
        p = out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    report: dict = {
        "alignment_variance": {},
        "equalization_variance": {},
        "alignment_failures": {},
    }
    fch, mch = cfg.functional_channel, cfg.movement_channel
    eq_means = {}
    common_valid = None
    movement = {FRAMEDIFF: {}, SHIFTMAG: {}}

    for state, stack_path in zip(STATES, (cfg.resting_stack, cfg.stimulated_stack)):
        with _stage(f"load:{state}"):
            stack = io.load_stack(stack_path)

        with _stage(f"align:{state}"):
            aligned, res = align_stack(stack, cfg.alignment, threads=threads)
            save_alignment_csv(res, emit(f"{state}/alignment.csv"))
            report["alignment_failures"][state] = res.failures

        valid = res.valid_everywhere() if cfg.valid_only else None
        if valid is not None:
            common_valid = valid if common_valid is None else common_valid & valid

        with _stage(f"stats:{state}"):
            rows = {}
            for ch in range(stack.channels):
                before = pixel_stats(stack.channel(ch), valid)
                after = pixel_stats(aligned.channel(ch), valid)
                rows[_CHANNEL_NAMES.get(ch, f"channel{ch}")] = _variance_row(total_variance(before), total_variance(after))
                if ch == fch:
                    io.export_csv_pairs(mean_variance_scatter(before), emit(f"{state}/scatter_raw.csv"), ("log_mean", "log_var"))
                    io.export_csv_pairs(mean_variance_scatter(after), emit(f"{state}/scatter_aligned.csv"), ("log_mean", "log_var"))
            report["alignment_variance"][state] = rows

        with _stage(f"equalize:{state}"):
            eq, eq_report = mean_equalize(aligned.channel(fch), valid)
            report["equalization_variance"][state] = {
                "standard": eq_report.standard,
                **_variance_row(eq_report.total_var_before, eq_report.total_var_after),
            }
            io.write_json(eq_report.to_json(), emit(f"{state}/equalization.json"))
            ps = pixel_stats(eq, valid)
            eq_means[state] = ps.mean_map
            io.export_pgm(ps.mean_map, emit(f"{state}/mean_equalized.pgm"))
            io.export_pgm(ps.var_map, emit(f"{state}/var_equalized.pgm"))

        with _stage(f"movement:{state}"):
            fd = framediff_series(stack.channel(mch), stack.frame_period_s)
            sm = shiftmag_series(res, stack.frame_period_s)
            movement[FRAMEDIFF][state] = fd
            movement[SHIFTMAG][state] = sm
            io.export_csv_pairs(fd.pairs(), emit(f"{state}/movement_framediff.csv"), ("t_s", "value"))
            io.export_csv_pairs(sm.pairs(), emit(f"{state}/movement_shiftmag.csv"), ("t_s", "value"))

    with _stage("levene:movement"):
        report["movement_levene"] = {
            kind: movement_levene(series["resting"], series["stimulated"], cfg.center, cfg.window).to_json()
            for kind, series in movement.items()
        }

    with _stage("levene:heart_rate"):
        if cfg.resting_biosignal is not None:
            hr_rest = io.load_biosignal(cfg.resting_biosignal)
            hr_stim = io.load_biosignal(cfg.stimulated_biosignal)
            report["heart_rate_levene"] = levene([hr_rest.samples, hr_stim.samples], cfg.center).to_json()
        else:
            report["heart_rate_levene"] = None

    with _stage("diffmap"):
        diff = difference_map(eq_means["stimulated"], eq_means["resting"])
        if common_valid is not None:
            diff = np.where(common_valid, diff, 0.0)
        io.export_pgm(diff, emit("diffmap.pgm"))
        peak = np.unravel_index(int(np.argmax(diff)), diff.shape)
        report["difference_map"] = {
            "min": float(diff.min()),
            "max": float(diff.max()),
            "argmax": [int(peak[0]), int(peak[1])],
            "rows": int(diff.shape[0]),
            "cols": int(diff.shape[1]),
        }

    if cfg.schedule is not None:
        with _stage("schedule"):
            sched = io.load_schedule(cfg.schedule)
            io.export_csv_series(shock_times(sched), emit("shock_times.csv"), header="t_s")

    report["config"] = cfg.summary()
    report["artifacts"] = sorted(artifacts)
    io.write_json(report, out / "report.json")
    return report
