"""Domain types shared by every stage of the analysis.

Time is carried as ``(start, period, index)``: a series never stores
per-sample timestamps, and sample ``i`` lives at ``start + i * period``
(seconds since the Unix epoch, UTC).  Missing samples are ``NaN`` in the
float arrays; ``MISSING`` is exported as an alias so call sites read well.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np

MISSING = float("nan")

DEFAULT_SAMPLE_PERIOD = 0.05

# Periods are compared with this relative tolerance (0.05 is not exact in binary).
_PERIOD_RTOL = 1e-9


class DataError(ValueError):
    """Raised when input data violates a precondition of an operation."""


def periods_equal(a: float, b: float) -> bool:
    return abs(a - b) <= _PERIOD_RTOL * max(abs(a), abs(b))


def integer_ratio(target: float, base: float) -> int | None:
    """Return ``target / base`` if it is a positive integer, else ``None``."""
    ratio = target / base
    n = round(ratio)
    if n >= 1 and abs(ratio - n) <= 1e-6:
        return n
    return None


def format_time(t: float) -> str:
    """ISO-8601 UTC wall-clock string with millisecond precision."""
    ms = round(t * 1000)
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S") + ".%03d" % (ms % 1000)


def format_clock(t: float) -> str:
    """``HH:MM:SS`` wall-clock label."""
    return datetime.fromtimestamp(round(t), tz=timezone.utc).strftime("%H:%M:%S")


def parse_time(text: str) -> float:
    """Parse an ISO-8601 timestamp to epoch seconds, rounded to the millisecond.

    Naive timestamps are taken as UTC.
    """
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return round(dt.timestamp() * 1000) / 1000


@dataclass(frozen=True)
class VolumeSeries:
    """Regularly sampled microphone amplitude of one badge.

    ``samples`` is a read-only float array; ``NaN`` marks a recording gap.
    """

    member: str
    start: float
    sample_period: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.sample_period > 0:
            raise DataError(f"sample_period must be positive, got {self.sample_period}")
        arr = np.array(self.samples, dtype=float)
        if arr.ndim != 1:
            raise DataError("samples must be one-dimensional")
        if np.any(arr[~np.isnan(arr)] < 0):
            raise DataError(f"negative amplitude in series {self.member!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def end(self) -> float:
        """Time just past the last sample."""
        return self.start + len(self.samples) * self.sample_period

    @property
    def times(self) -> np.ndarray:
        return self.start + np.arange(len(self.samples)) * self.sample_period

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.samples)

    def __eq__(self, other):
        if not isinstance(other, VolumeSeries):
            return NotImplemented
        return (
            self.member == other.member
            and self.start == other.start
            and self.sample_period == other.sample_period
            and np.array_equal(self.samples, other.samples, equal_nan=True)
        )

    __hash__ = None


@dataclass(frozen=True)
class Recording:
    """One badge session: a volume series per member plus free-form metadata."""

    members: tuple[str, ...]
    series: Mapping[str, VolumeSeries]
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        members = tuple(self.members)
        if len(set(members)) != len(members):
            raise DataError(f"duplicate member ids in {members}")
        if set(members) != set(self.series):
            raise DataError("exactly one series per member is required")
        for m in members:
            if self.series[m].member != m:
                raise DataError(f"series keyed {m!r} belongs to {self.series[m].member!r}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "series", dict(self.series))
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def from_series(cls, series: Sequence[VolumeSeries], meta=None) -> "Recording":
        return cls(
            members=tuple(s.member for s in series),
            series={s.member: s for s in series},
            meta=meta or {},
        )

    @property
    def sample_period(self) -> float:
        return self.series[self.members[0]].sample_period

    @property
    def start(self) -> float:
        return min(s.start for s in self.series.values())

    @property
    def end(self) -> float:
        return max(s.end for s in self.series.values())

    def matrix(self) -> np.ndarray:
        """Samples stacked as ``(members, n)``; requires an aligned recording."""
        lengths = {len(s) for s in self.series.values()}
        starts = {s.start for s in self.series.values()}
        if len(lengths) != 1 or len(starts) != 1:
            raise DataError("recording is not aligned; call align_members first")
        return np.vstack([self.series[m].samples for m in self.members])

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.members == other.members
            and all(self.series[m] == other.series[m] for m in self.members)
            and self.meta == other.meta
        )

    __hash__ = None


def align_members(recording: Recording) -> Recording:
    """Pad every series with MISSING onto one common sample grid.

    The grid spans ``[min start, max end]`` of the input series.  Amplitudes
    are never altered, so applying this twice is the same as applying it once.
    """
    periods = {m: s.sample_period for m, s in recording.series.items()}
    ref_member = recording.members[0]
    period = periods[ref_member]
    for m in recording.members:
        if not periods_equal(periods[m], period):
            raise DataError(
                f"member {m!r} has sample_period {periods[m]} but {ref_member!r} "
                f"has {period}; resample before aligning"
            )
    start = recording.start
    offsets = {}
    for m, s in recording.series.items():
        off = (s.start - start) / period
        if abs(off - round(off)) > 1e-3:  # epoch-scale floats carry ~1e-7 s of error
            raise DataError(f"member {m!r} starts off the common {period} s grid")
        offsets[m] = round(off)
    total = max(offsets[m] + len(s) for m, s in recording.series.items())

    if all(offsets[m] == 0 and len(s) == total for m, s in recording.series.items()):
        return recording

    aligned = []
    for m in recording.members:
        s = recording.series[m]
        padded = np.full(total, np.nan)
        padded[offsets[m]:offsets[m] + len(s)] = s.samples
        aligned.append(VolumeSeries(m, start, period, padded))
    return Recording.from_series(aligned, meta=recording.meta)
