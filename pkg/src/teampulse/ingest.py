"""Reading badge volume logs and resampling them to the analysis rate.

Two line formats are accepted, both with the fields ``t``, ``member`` and
``volume``::

    {"t": "2020-01-01T16:09:00.050", "member": "A", "volume": 0.0312}

or a CSV file with the header ``t,member,volume``.  Timestamps are
snapped to a 50 ms grid anchored at the Unix epoch.
"""
from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from .model import (
    DEFAULT_SAMPLE_PERIOD,
    DataError,
    Recording,
    VolumeSeries,
    align_members,
    format_time,
    integer_ratio,
    parse_time,
)

FORMATS = ("jsonl", "csv")


def guess_format(path) -> str:
    suffix = Path(path).suffix.lower()
    return "csv" if suffix == ".csv" else "jsonl"


def _iter_rows(path: Path, fmt: str):
    """Yield ``(line_number, t, member, volume)`` tuples from a log file."""
    with open(path, newline="") as fh:
        if fmt == "jsonl":
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    yield lineno, obj["t"], obj["member"], obj["volume"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise DataError(f"{path}:{lineno}: unparseable line ({exc})") from None
        elif fmt == "csv":
            reader = csv.DictReader(fh)
            missing = {"t", "member", "volume"} - set(reader.fieldnames or ())
            if missing:
                raise DataError(f"{path}:1: CSV header lacks columns {sorted(missing)}")
            for row in reader:
                # the header occupies line 1
                yield reader.line_num, row["t"], row["member"], row["volume"]
        else:
            raise DataError(f"unknown log format {fmt!r}; expected one of {FORMATS}")


def parse_badge_log(path, format: str | None = None,
                    sample_period: float = DEFAULT_SAMPLE_PERIOD) -> Recording:
    """Parse a badge log into an aligned :class:`Recording`.

    Frames with no line become MISSING; duplicate ``(member, frame)`` lines
    are averaged so the result does not depend on line order.
    """
    path = Path(path)
    fmt = format or guess_format(path)
    if not path.exists():
        raise DataError(f"input file {path} does not exist")

    period_ms = round(sample_period * 1000)
    sums: dict[str, dict[int, float]] = defaultdict(lambda: defaultdict(float))
    counts: dict[str, dict[int, int]] = defaultdict(lambda: defaultdict(int))
    first_seen: list[str] = []
    for lineno, t, member, volume in _iter_rows(path, fmt):
        try:
            ts = parse_time(str(t))
            vol = float(volume)
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: unparseable line ({exc})") from None
        member = str(member)
        if not member:
            raise DataError(f"{path}:{lineno}: empty member id")
        if not math.isfinite(vol):
            raise DataError(f"{path}:{lineno}: non-finite volume {volume!r}")
        if vol < 0:
            raise DataError(f"{path}:{lineno}: negative volume {vol}")
        frame = round(round(ts * 1000) / period_ms)
        if member not in sums:
            first_seen.append(member)
        sums[member][frame] += vol
        counts[member][frame] += 1

    if not sums:
        raise DataError(f"{path}: empty badge log")

    series = []
    for member in sorted(first_seen):
        frames = sums[member]
        lo, hi = min(frames), max(frames)
        samples = np.full(hi - lo + 1, np.nan)
        for f, total in frames.items():
            samples[f - lo] = total / counts[member][f]
        series.append(VolumeSeries(member, lo * period_ms / 1000, sample_period, samples))
    return align_members(Recording.from_series(series, meta={"source": str(path)}))


def write_badge_log(recording: Recording, path, format: str | None = None) -> None:
    """Write a recording in the log format; MISSING samples produce no line."""
    path = Path(path)
    fmt = format or guess_format(path)
    rows = []
    for m in recording.members:
        s = recording.series[m]
        for i, v in enumerate(s.samples):
            if not np.isnan(v):
                rows.append((round((s.start + i * s.sample_period) * 1000), m, float(v)))
    rows.sort()
    with open(path, "w", newline="") as fh:
        if fmt == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "member", "volume"])
            for ms, m, v in rows:
                w.writerow([format_time(ms / 1000), m, repr(v)])
        else:
            for ms, m, v in rows:
                fh.write(json.dumps({"t": format_time(ms / 1000), "member": m, "volume": v}) + "\n")


def resample_series(series: VolumeSeries, target_period: float,
                    min_bin_coverage: float = 0.5) -> VolumeSeries:
    """Average consecutive samples into bins of ``target_period`` seconds.

    Each bin is the mean of its non-MISSING inputs.  A bin whose fraction of
    present inputs is below ``min_bin_coverage`` is MISSING; the trailing
    partial bin is judged against its own size.
    """
    ratio = integer_ratio(target_period, series.sample_period)
    if ratio is None:
        raise DataError(
            f"target period {target_period} s is not an integer multiple of "
            f"the sample period {series.sample_period} s"
        )
    x = series.samples
    n_out = -(-len(x) // ratio)
    padded = np.full(n_out * ratio, np.nan)
    padded[:len(x)] = x
    bins = padded.reshape(n_out, ratio)
    present = (~np.isnan(bins)).sum(axis=1)
    size = np.full(n_out, ratio)
    if len(x) % ratio:
        size[-1] = len(x) % ratio
    out = np.full(n_out, np.nan)
    ok = (present > 0) & (present >= min_bin_coverage * size)
    good = bins[ok]
    # clip away summation rounding so a bin mean never leaves its input range
    out[ok] = np.clip(np.nansum(good, axis=1) / present[ok],
                      np.nanmin(good, axis=1), np.nanmax(good, axis=1))
    return VolumeSeries(series.member, series.start, target_period, out)


def resample_recording(recording: Recording, target_period: float,
                       min_bin_coverage: float = 0.5) -> Recording:
    return Recording.from_series(
        [resample_series(recording.series[m], target_period, min_bin_coverage)
         for m in recording.members],
        meta=recording.meta,
    )
