"""File formats: stack header + raw payload, CSV series, PGM maps.

A stack ``name`` lives in two files: ``name.json`` holding the header and
``name.bin`` holding little-endian float32 samples in
``[channel][time][row][col]`` row-major order.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BioSignalFormatError, DataIntegrityError, HeaderParseError, SizeMismatchError, StackFormatError
from .stack import BioSignal, ImageStack, StimSchedule

DTYPE_TAG = "f32le"
_HEADER_COUNTS = ("channels", "frames", "rows", "cols")


def _payload_path(header_path: Path) -> Path:
    return header_path.with_suffix(".bin")


def _header_path(path) -> Path:
    p = Path(path)
    if p.suffix != ".json":
        p = p.with_name(p.name + ".json") if p.suffix == "" else p.with_suffix(".json")
    return p


def fmt(value: float) -> str:
    """Shortest round-trip decimal text for a scalar."""
    return repr(float(value))


def load_stack(header_path) -> ImageStack:
    """Read a stack from its JSON header and sibling ``.bin`` payload."""
    header_path = _header_path(header_path)
    try:
        header = json.loads(header_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise HeaderParseError(f"{header_path}: malformed JSON header ({exc})") from exc
    if not isinstance(header, dict):
        raise HeaderParseError(f"{header_path}: header must be a JSON object")
    try:
        dims = [header[k] for k in _HEADER_COUNTS]
        dtype = header["dtype"]
        period = header.get("frame_period_s", 0.125)
    except KeyError as exc:
        raise HeaderParseError(f"{header_path}: missing header field {exc}") from exc
    if not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in dims):
        raise HeaderParseError(f"{header_path}: counts must be integers >= 1, got {dims}")
    if dtype != DTYPE_TAG:
        raise HeaderParseError(f"{header_path}: unsupported dtype {dtype!r}, expected {DTYPE_TAG!r}")
    if not isinstance(period, (int, float)) or isinstance(period, bool) or not period > 0:
        raise HeaderParseError(f"{header_path}: frame_period_s must be a positive number")

    payload = _payload_path(header_path).read_bytes()
    expected = math.prod(dims) * 4
    if len(payload) != expected:
        raise SizeMismatchError(
            f"{_payload_path(header_path)}: expected {expected} bytes for dims {dims}, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(dims)
    if not np.all(np.isfinite(data)):
        bad = int(np.count_nonzero(~np.isfinite(data)))
        raise DataIntegrityError(f"{_payload_path(header_path)}: {bad} non-finite values")
    return ImageStack(data.astype(np.float32), float(period))


def save_stack(stack: ImageStack, header_path) -> Path:
    """Write ``stack`` as ``<name>.json`` + ``<name>.bin``; returns the header path."""
    if str(header_path) == "":
        raise FileNotFoundError("empty output path")
    header_path = _header_path(header_path)
    header = {
        "channels": stack.channels,
        "frames": stack.frames,
        "rows": stack.rows,
        "cols": stack.cols,
        "dtype": DTYPE_TAG,
        "frame_period_s": stack.frame_period_s,
    }
    _payload_path(header_path).write_bytes(np.ascontiguousarray(stack.data, dtype="<f4").tobytes())
    header_path.write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")
    return header_path


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise BioSignalFormatError(f"{path}: empty CSV")
    return [h.strip() for h in rows[0]], rows[1:]


def _parse_float(cell: str, path, lineno: int) -> float:
    try:
        v = float(cell)
    except ValueError as exc:
        raise BioSignalFormatError(f"{path}:{lineno}: non-numeric cell {cell!r}") from exc
    if not math.isfinite(v):
        raise BioSignalFormatError(f"{path}:{lineno}: non-finite value {cell!r}")
    return v


def load_biosignal(csv_path, label: str | None = None) -> BioSignal:
    """Read a ``time_s,value`` CSV; the sample rate comes from the median spacing."""
    header, rows = _read_rows(csv_path)
    if header != ["time_s", "value"]:
        raise BioSignalFormatError(f"{csv_path}: expected header 'time_s,value', got {','.join(header)!r}")
    times, values = [], []
    for i, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise BioSignalFormatError(f"{csv_path}:{i}: expected 2 columns, got {len(row)}")
        times.append(_parse_float(row[0], csv_path, i))
        values.append(_parse_float(row[1], csv_path, i))
    if len(times) < 2:
        raise BioSignalFormatError(f"{csv_path}: at least two samples are needed to infer the sample rate")
    dt = np.diff(np.asarray(times))
    if np.any(dt <= 0):
        raise BioSignalFormatError(f"{csv_path}: time_s column must be strictly increasing")
    rate = 1.0 / float(np.median(dt))
    # snap float noise from decimal timestamps, e.g. 999.9999999 -> 1000
    if abs(rate - round(rate)) < 1e-6 * rate:
        rate = float(round(rate))
    return BioSignal(rate, np.asarray(values), label or Path(csv_path).stem)


def save_biosignal(sig: BioSignal, csv_path) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("time_s,value\n")
        for i, v in enumerate(sig.samples):
            fh.write(f"{fmt(i / sig.sample_rate_hz)},{fmt(v)}\n")


def load_schedule(csv_path, **pattern) -> StimSchedule:
    """Read a single-column ``trial_start_s`` CSV."""
    header, rows = _read_rows(csv_path)
    if header != ["trial_start_s"]:
        raise BioSignalFormatError(f"{csv_path}: expected header 'trial_start_s'")
    starts = [_parse_float(r[0], csv_path, i) for i, r in enumerate(rows, start=2)]
    try:
        return StimSchedule(starts, **pattern)
    except ValueError as exc:
        raise BioSignalFormatError(f"{csv_path}: {exc}") from exc


def save_schedule(sched: StimSchedule, csv_path) -> None:
    export_csv_series(sched.trial_starts_s, csv_path, header="trial_start_s")


def load_series(csv_path) -> np.ndarray:
    """Read the last column of a CSV with a header row as a float series."""
    _, rows = _read_rows(csv_path)
    return np.array([_parse_float(r[-1], csv_path, i) for i, r in enumerate(rows, start=2)])


def export_csv_series(series: Iterable[float], path, header: str = "value") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for v in series:
            fh.write(fmt(v) + "\n")


def export_csv_pairs(pairs: Iterable[Sequence[float]], path, header: tuple[str, str] = ("x", "y")) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for x, y in pairs:
            fh.write(f"{fmt(x)},{fmt(y)}\n")


def pgm_bytes(m: np.ndarray) -> bytes:
    """Encode a matrix as 16-bit binary PGM, min-max scaled to [0, 65535]."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"PGM export needs a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("PGM export needs finite values")
    lo, hi = float(m.min()), float(m.max())
    if hi > lo:
        scaled = np.rint((m - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(m)
    rows, cols = m.shape
    header = f"P5\n{cols} {rows}\n65535\n".encode("ascii")
    return header + scaled.astype(">u2").tobytes()


def export_pgm(m: np.ndarray, path) -> None:
    payload = pgm_bytes(m)
    with open(path, "wb") as fh:
        fh.write(payload)


def read_pgm(path) -> np.ndarray:
    """Parse a 16-bit P5 file written by :func:`export_pgm`."""
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise StackFormatError(f"{path}: not a binary PGM")
    cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 65535:
        raise StackFormatError(f"{path}: expected maxval 65535, got {maxval}")
    payload = raw[len(raw) - rows * cols * 2:]
    return np.frombuffer(payload, dtype=">u2").reshape(rows, cols).astype(np.int64)


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
