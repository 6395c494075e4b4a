"""Command-line entry point.

Every subcommand reads its inputs from files and writes its outputs into
``--out DIR``, so subcommands compose through the filesystem only.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import io
from .errors import TwoPhotonError
from .intensity import difference_map, mean_equalize, mean_variance_scatter, pixel_stats, total_variance
from .movement import FRAMEDIFF, SHIFTMAG, framediff_series, movement_levene, shiftmag_series
from .pipeline import PipelineConfig, StageError, run_full_pipeline
from .registration import AlignmentConfig, align_stack, load_alignment_csv, save_alignment_csv
from .stack import shock_times
from .stats import levene
from .synth import SynthConfig, generate

_existing = click.Path(exists=True, dir_okay=False, path_type=Path)
_outdir = click.Path(file_okay=False, path_type=Path)


def _out(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fail(stage: str, exc: Exception):
    raise click.ClickException(f"{stage}: {exc}")


def _load(path: Path):
    try:
        return io.load_stack(path)
    except (TwoPhotonError, OSError) as exc:
        _fail("load", exc)


def _parse_ref_time(value: str) -> int | None:
    if value == "mid":
        return None
    try:
        return int(value)
    except ValueError:
        raise click.BadParameter("expected 'mid' or a frame index") from None


def _valid_mask(stack, valid_only: bool, alignment: Path | None):
    if not valid_only:
        return None
    if alignment is None:
        raise click.UsageError("--valid-only needs --alignment (the CSV written by 'align')")
    res = load_alignment_csv(alignment, (stack.rows, stack.cols))
    if len(res.transforms) != stack.frames:
        _fail("stats", ValueError(f"alignment has {len(res.transforms)} frames, stack has {stack.frames}"))
    return res.valid_everywhere()


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", is_flag=True, help="Log stage progress to stderr.")
def main(verbose):
    """Two-photon calcium imaging analysis: registration, equalization, variance tests."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--stack", "stack_path", type=_existing, required=True, help="Stack header (.json).")
@click.option("--ref-channel", type=int, default=0, show_default=True, help="Channel used to estimate transforms.")
@click.option("--ref-time", default="mid", show_default=True, help="Reference frame index or 'mid' for floor(T/2).")
@click.option("--max-shift", type=int, default=10, show_default=True, help="Integer shift search bound in pixels.")
@click.option("--max-theta", type=float, default=0.1, show_default=True, help="Rotation bound in radians.")
@click.option("--max-iters", type=int, default=200, show_default=True, help="Simplex iteration cap per frame.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True, help="Worker threads.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def align(stack_path, ref_channel, ref_time, max_shift, max_theta, max_iters, threads, out_dir):
    """Rigidly register every frame to the reference frame."""
    stack = _load(stack_path)
    try:
        cfg = AlignmentConfig(ref_channel, _parse_ref_time(ref_time), max_shift, max_theta, max_iters=max_iters)
        aligned, res = align_stack(stack, cfg, threads=threads)
    except (TwoPhotonError, ValueError, IndexError) as exc:
        _fail("align", exc)
    out = _out(out_dir)
    io.save_stack(aligned, out / "aligned.json")
    save_alignment_csv(res, out / "alignment.csv")
    if res.failures:
        click.echo(f"warning: {len(res.failures)} frame(s) failed to align: {res.failures}", err=True)


@main.command()
@click.option("--stack", "stack_path", type=_existing, required=True, help="Stack header (.json).")
@click.option("--channel", type=int, default=1, show_default=True, help="Channel to equalize.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def equalize(stack_path, channel, out_dir):
    """Scale each frame so all frames share the mean of frame means."""
    stack = _load(stack_path)
    try:
        eq, report = mean_equalize(stack.channel(channel))
    except (TwoPhotonError, ValueError, IndexError) as exc:
        _fail("equalize", exc)
    out = _out(out_dir)
    io.save_stack(stack.with_channel(channel, eq), out / "equalized.json")
    io.write_json(report.to_json(), out / "equalization_report.json")


@main.command()
@click.option("--stack", "stack_path", type=_existing, required=True, help="Stack header (.json).")
@click.option("--channel", type=int, default=1, show_default=True, help="Channel to summarize.")
@click.option("--valid-only", is_flag=True, help="Restrict to pixels valid in every aligned frame.")
@click.option("--alignment", type=_existing, default=None, help="alignment.csv used by --valid-only.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def stats(stack_path, channel, valid_only, alignment, out_dir):
    """Per-pixel temporal mean/variance maps and total variance."""
    stack = _load(stack_path)
    valid = _valid_mask(stack, valid_only, alignment)
    try:
        ps = pixel_stats(stack.channel(channel), valid)
    except (TwoPhotonError, ValueError, IndexError) as exc:
        _fail("stats", exc)
    out = _out(out_dir)
    io.export_pgm(ps.mean_map, out / "mean.pgm")
    io.export_pgm(ps.var_map, out / "var.pgm")
    io.write_json({
        "channel": channel,
        "frames_used": ps.frames_used,
        "total_variance": total_variance(ps),
        "valid_pixels": int(valid.sum()) if valid is not None else stack.rows * stack.cols,
    }, out / "stats.json")


@main.command()
@click.option("--stack", "stack_path", type=_existing, required=True, help="Stack header (.json).")
@click.option("--channel", type=int, default=1, show_default=True, help="Channel to summarize.")
@click.option("--epsilon", type=float, default=1e-12, show_default=True, help="Offset inside the logarithms.")
@click.option("--valid-only", is_flag=True, help="Restrict to pixels valid in every aligned frame.")
@click.option("--alignment", type=_existing, default=None, help="alignment.csv used by --valid-only.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def scatter(stack_path, channel, epsilon, valid_only, alignment, out_dir):
    """Log-mean vs log-variance pairs, one per pixel."""
    stack = _load(stack_path)
    valid = _valid_mask(stack, valid_only, alignment)
    try:
        pairs = mean_variance_scatter(pixel_stats(stack.channel(channel), valid), epsilon)
    except (TwoPhotonError, ValueError, IndexError) as exc:
        _fail("scatter", exc)
    io.export_csv_pairs(pairs, _out(out_dir) / "scatter.csv", ("log_mean", "log_var"))


@main.command()
@click.option("--stack-a", "stack_a", type=_existing, required=True, help="Stimulated stack header.")
@click.option("--stack-b", "stack_b", type=_existing, required=True, help="Resting stack header.")
@click.option("--channel", type=int, default=1, show_default=True, help="Channel to compare.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def diffmap(stack_a, stack_b, channel, out_dir):
    """Temporal-mean image of A minus that of B."""
    a, b = _load(stack_a), _load(stack_b)
    try:
        diff = difference_map(pixel_stats(a.channel(channel)).mean_map, pixel_stats(b.channel(channel)).mean_map)
    except (TwoPhotonError, ValueError, IndexError) as exc:
        _fail("diffmap", exc)
    out = _out(out_dir)
    io.export_pgm(diff, out / "diffmap.pgm")
    peak = np.unravel_index(int(np.argmax(diff)), diff.shape)
    io.write_json({"min": float(diff.min()), "max": float(diff.max()), "argmax": [int(peak[0]), int(peak[1])]},
                  out / "diffmap.json")


@main.command()
@click.option("--stack", "stack_path", type=_existing, required=True, help="Stack header (.json).")
@click.option("--aligned", "alignment", type=_existing, default=None, help="alignment.csv from 'align' (needed for shiftmag).")
@click.option("--kind", type=click.Choice([FRAMEDIFF, SHIFTMAG]), default=FRAMEDIFF, show_default=True, help="Movement estimator.")
@click.option("--channel", type=int, default=0, show_default=True, help="Channel for frame differences.")
@click.option("--schedule", type=_existing, default=None, help="trial_start_s CSV; shock times are exported alongside.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def movement(stack_path, alignment, kind, channel, schedule, out_dir):
    """Brain-movement time series as t_s,value CSV."""
    stack = _load(stack_path)
    try:
        if kind == FRAMEDIFF:
            series = framediff_series(stack.channel(channel), stack.frame_period_s)
        else:
            if alignment is None:
                raise click.UsageError("--kind shiftmag needs --aligned alignment.csv")
            series = shiftmag_series(load_alignment_csv(alignment), stack.frame_period_s)
        sched = io.load_schedule(schedule) if schedule is not None else None
    except (TwoPhotonError, ValueError, IndexError) as exc:
        _fail("movement", exc)
    out = _out(out_dir)
    io.export_csv_pairs(series.pairs(), out / "movement.csv", ("t_s", "value"))
    if sched is not None:
        io.export_csv_series(shock_times(sched), out / "shock_times.csv", header="t_s")


@main.command("levene")
@click.option("--group-a", type=_existing, required=True, help="CSV with a header; the last column is used.")
@click.option("--group-b", type=_existing, required=True, help="CSV with a header; the last column is used.")
@click.option("--center", type=click.Choice(["mean", "median"]), default="mean", show_default=True, help="Group centre.")
@click.option("--window", type=float, default=None, help="Compare per-window means of t_s,value series (seconds).")
@click.option("--frame-period", type=float, default=0.125, show_default=True, help="Sample spacing used with --window.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def levene_cmd(group_a, group_b, center, window, frame_period, out_dir):
    """Levene's test for equal variances between two series."""
    from .movement import MovementSeries

    try:
        a, b = io.load_series(group_a), io.load_series(group_b)
        if window is None:
            report = levene([a, b], center)
        else:
            report = movement_levene(MovementSeries(a, FRAMEDIFF, frame_period),
                                     MovementSeries(b, FRAMEDIFF, frame_period), center, window)
    except (TwoPhotonError, ValueError) as exc:
        _fail("levene", exc)
    io.write_json(report.to_json(), _out(out_dir) / "levene.json")
    click.echo(f"W={report.W!r} df=({report.df1}, {report.df2}) p={report.p_value!r}")


@main.command()
@click.option("--config", "config_path", type=_existing, required=True, help="SynthConfig JSON.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def synth(config_path, out_dir):
    """Generate a synthetic 2-channel stack with ground truth."""
    import json

    try:
        cfg = SynthConfig.from_dict(json.loads(config_path.read_text(encoding="utf-8")))
        stack, truth = generate(cfg)
    except (TwoPhotonError, ValueError, TypeError) as exc:
        _fail("synth", exc)
    out = _out(out_dir)
    io.save_stack(stack, out / "stack.json")
    io.write_json(truth.to_json(), out / "truth.json")
    if cfg.stim.trial_starts_s:
        io.save_schedule(cfg.stim, out / "schedule.csv")


@main.command()
@click.option("--config", "config_path", type=_existing, required=True, help="Pipeline JSON config.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True, help="Worker threads.")
@click.option("--out", "out_dir", type=_outdir, required=True, help="Output directory.")
def pipeline(config_path, threads, out_dir):
    """Run the full resting vs stimulated analysis and write report.json."""
    try:
        cfg = PipelineConfig.from_json(config_path)
    except (ValueError, TypeError) as exc:
        _fail("config", exc)
    for p in cfg.input_paths():
        if not p.exists():
            click.echo(f"Error: input file '{p}' does not exist.", err=True)
            sys.exit(2)
    try:
        run_full_pipeline(cfg, out_dir, threads=threads)
    except StageError as exc:
        raise click.ClickException(str(exc)) from exc
    except ValueError as exc:
        _fail("config", exc)
    click.echo(f"wrote {Path(out_dir) / 'report.json'}")


if __name__ == "__main__":
    main()
