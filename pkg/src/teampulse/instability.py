"""Critical-instability detection on a complexity series, and phase cuts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexity import ComplexitySeries
from .model import DataError

DEFAULT_WINDOW = 60
DEFAULT_SD_MULT = 2.0
DEFAULT_MERGE_GAP = 60.0
DEFAULT_MIN_DEFINED = 30


@dataclass(frozen=True)
class InstabilityEvent:
    time: float
    peak_dc: float
    window_mean: float
    window_sd: float
    sd_mult: float = DEFAULT_SD_MULT

    @property
    def triggered(self) -> bool:
        """Re-check the inequality that produced this event."""
        return self.peak_dc > self.window_mean + self.sd_mult * self.window_sd


@dataclass(frozen=True)
class PhaseSegmentation:
    """Consecutive half-open intervals ``[start, end)`` covering a recording."""

    start: float
    end: float
    cuts: tuple[float, ...]

    @property
    def boundaries(self) -> tuple[float, ...]:
        return (self.start, *self.cuts, self.end)

    @property
    def phases(self) -> list[tuple[float, float]]:
        b = self.boundaries
        return list(zip(b[:-1], b[1:]))

    def __len__(self):
        return len(self.cuts) + 1


def flag_points(dc: np.ndarray, window: int = DEFAULT_WINDOW,
                sd_mult: float = DEFAULT_SD_MULT,
                min_defined: int = DEFAULT_MIN_DEFINED):
    """Test each point against the mean and SD of the trailing ``window`` values.

    The statistics window ends at (and includes) the point being tested, so
    the first ``window - 1`` points are never tested.  UNDEFINED values are
    left out; a window with fewer than ``min_defined`` defined values never
    flags.
    Returns ``(flags, means, sds)``.
    """
    dc = np.asarray(dc, dtype=float)
    n = len(dc)
    flags = np.zeros(n, dtype=bool)
    means = np.full(n, np.nan)
    sds = np.full(n, np.nan)
    for t in range(window - 1, n):
        if np.isnan(dc[t]):
            continue
        seg = dc[t - window + 1:t + 1]
        seg = seg[~np.isnan(seg)]
        if seg.size < min_defined or seg.size < 2:
            continue
        # deviations from the tested value: a constant offset cancels
        # before any rounding happens in the statistics
        dev = seg - dc[t]
        sd = dev.std(ddof=1)
        means[t], sds[t] = seg.mean(), sd
        flags[t] = -dev.mean() > sd_mult * sd
    return flags, means, sds


def detect_instabilities(avg: ComplexitySeries, window: int = DEFAULT_WINDOW,
                         sd_mult: float = DEFAULT_SD_MULT,
                         merge_gap: float = DEFAULT_MERGE_GAP,
                         min_defined: int = DEFAULT_MIN_DEFINED) -> list[InstabilityEvent]:
    """Flag unusually high complexity and merge nearby flags into events.

    Flagged points closer than ``merge_gap`` seconds to the previous flagged
    point join its event; each event sits at its highest-DC point (earliest
    on ties).
    """
    dc = np.asarray(avg.dc, dtype=float)
    if len(dc) < window:
        raise DataError(
            f"complexity series has {len(dc)} points, fewer than the detection "
            f"window of {window}; pass a smaller --detect-window"
        )
    times = np.asarray(avg.window_end_times, dtype=float)
    flags, means, sds = flag_points(dc, window, sd_mult, min_defined)

    groups: list[list[int]] = []
    for i in np.flatnonzero(flags):
        if groups and times[i] - times[groups[-1][-1]] < merge_gap:
            groups[-1].append(i)
        else:
            groups.append([i])

    events = []
    for g in groups:
        peak = g[int(np.argmax(dc[g]))]
        events.append(InstabilityEvent(float(times[peak]), float(dc[peak]),
                                       float(means[peak]), float(sds[peak]), sd_mult))
    return events


def segment_phases(events, span: tuple[float, float]) -> PhaseSegmentation:
    """Cut ``span`` at each event time."""
    start, end = span
    if not end > start:
        raise DataError(f"empty span [{start}, {end})")
    cuts = []
    for e in events:
        t = e.time if isinstance(e, InstabilityEvent) else float(e)
        if not start < t < end:
            raise DataError(f"event at {t} lies outside the span ({start}, {end})")
        if cuts and t <= cuts[-1]:
            raise DataError("events must be sorted by time and distinct")
        cuts.append(t)
    return PhaseSegmentation(start, end, tuple(cuts))
