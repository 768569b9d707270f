"""Correlation-based voice activity detection on badge volume.

Every one-second frame is decided in three steps:

1. *Floor gating.*  A member is a candidate when their mean frame volume
   exceeds ``floor_margin`` times the rolling median (trailing
   ``floor_window`` seconds) of the quietest badge's frame mean.
2. *Cross-talk demotion.*  For every pair of candidates whose frame
   volumes correlate above ``threshold``, the quieter one is treated as
   having picked up the louder one and is demoted.  Equal means keep both.
3. The surviving candidates are the frame's active set, so several people
   may speak at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import DataError, Recording, integer_ratio

DEFAULT_THRESHOLD = 0.40
DEFAULT_FLOOR_MARGIN = 1.5
DEFAULT_FLOOR_WINDOW = 60.0


@dataclass(frozen=True)
class SpeakerActivity:
    """Per-second speaking sets.  Second ``i`` starts at ``start + i``."""

    start: float
    members: tuple[str, ...]
    active: tuple[frozenset, ...]
    coverage: dict  # member -> bool array, True where the badge had data

    frame_period = 1.0

    def __len__(self):
        return len(self.active)

    @property
    def end(self) -> float:
        return self.start + len(self.active)

    def matrix(self) -> np.ndarray:
        """Boolean ``(members, seconds)`` activity matrix."""
        out = np.zeros((len(self.members), len(self.active)), dtype=bool)
        for i, frame in enumerate(self.active):
            for k, m in enumerate(self.members):
                out[k, i] = m in frame
        return out

    @classmethod
    def from_matrix(cls, start, members, matrix, coverage=None) -> "SpeakerActivity":
        members = tuple(members)
        matrix = np.asarray(matrix, dtype=bool)
        active = tuple(
            frozenset(m for k, m in enumerate(members) if matrix[k, i])
            for i in range(matrix.shape[1])
        )
        if coverage is None:
            coverage = {m: np.ones(matrix.shape[1], dtype=bool) for m in members}
        return cls(start, members, active, coverage)


def frame_correlation(a, b) -> float | None:
    """Pearson correlation over paired non-MISSING samples.

    Returns ``None`` (UNDEFINED) with fewer than three pairs and ``0.0`` when
    either side has zero variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DataError("correlation windows must have equal length")
    ok = ~(np.isnan(a) | np.isnan(b))
    if ok.sum() < 3:
        return None
    a = a[ok] - a[ok].mean()
    b = b[ok] - b[ok].mean()
    saa = np.dot(a, a)
    sbb = np.dot(b, b)
    if saa == 0 or sbb == 0:
        return 0.0
    r = np.dot(a, b) / np.sqrt(saa * sbb)
    return float(np.clip(r, -1.0, 1.0))


def _trailing_median(x: np.ndarray, window: int) -> np.ndarray:
    out = np.full(len(x), np.nan)
    for i in range(len(x)):
        seg = x[max(0, i - window + 1):i + 1]
        seg = seg[~np.isnan(seg)]
        if seg.size:
            out[i] = np.median(seg)
    return out


def detect_voice_activity(recording: Recording, threshold: float = DEFAULT_THRESHOLD,
                          floor_margin: float = DEFAULT_FLOOR_MARGIN,
                          floor_window: float = DEFAULT_FLOOR_WINDOW) -> SpeakerActivity:
    """Decide, for each second, which members were genuinely speaking."""
    if not 0 < threshold < 1:
        raise DataError(f"VAD threshold must lie in (0, 1), got {threshold}")
    per_frame = integer_ratio(1.0, recording.sample_period)
    if per_frame is None:
        raise DataError(f"sample period {recording.sample_period} s does not divide one second")
    x = recording.matrix()
    n_frames = x.shape[1] // per_frame
    if n_frames == 0:
        raise DataError("recording is shorter than one second")
    members = recording.members
    frames = x[:, :n_frames * per_frame].reshape(len(members), n_frames, per_frame)

    present = ~np.isnan(frames)
    # fewer than three samples cannot be correlated; treat as no data
    covered = present.sum(axis=2) >= 3
    means = np.full((len(members), n_frames), np.nan)
    means[covered] = np.nansum(frames, axis=2)[covered] / present.sum(axis=2)[covered]

    quietest = np.full(n_frames, np.nan)
    any_cov = covered.any(axis=0)
    quietest[any_cov] = np.nanmin(means[:, any_cov], axis=0)
    floor = floor_margin * _trailing_median(quietest, max(1, round(floor_window)))

    active = []
    for t in range(n_frames):
        cand = [k for k in range(len(members))
                if covered[k, t] and means[k, t] > floor[t]]
        demoted = set()
        for i, j in combinations(cand, 2):
            if means[i, t] == means[j, t]:
                continue
            r = frame_correlation(frames[i, t], frames[j, t])
            if r is not None and r > threshold:
                demoted.add(i if means[i, t] < means[j, t] else j)
        active.append(frozenset(members[k] for k in cand if k not in demoted))

    coverage = {m: covered[k].copy() for k, m in enumerate(members)}
    return SpeakerActivity(recording.start, members, tuple(active), coverage)
