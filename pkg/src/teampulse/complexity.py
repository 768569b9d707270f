"""Fluctuation, Distribution and Dynamic Complexity over sliding windows.

All three measures live in ``[0, 1]`` and are normalised against a
measurement scale ``[scale_min, scale_max]`` that must bracket the window.

Fluctuation sums, over the monotone runs between successive points of
return, the absolute change of each run divided by its length, and divides
by the largest such sum a window of ``m`` points could produce
(``(scale_max - scale_min) * (m - 1)``).

Distribution sorts the window and compares every gap ``x[b] - x[a]`` of the
sorted values against the gap an evenly spaced series across the scale
would have, ``(b - a) * (scale_max - scale_min) / (m - 1)``.  Shortfalls
(expected minus observed, positive part) are normalised by the expected gap
and averaged over every ``(c, d, a, b)`` sub-window tuple; D is one minus
that average.  Uniformly spread values give 1, a degenerate window gives 0.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import DataError, VolumeSeries

MIN_WINDOW = 7


@dataclass(frozen=True)
class AnalysisWindow:
    values: np.ndarray
    scale_min: float
    scale_max: float

    def __post_init__(self):
        x = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or len(x) < MIN_WINDOW:
            raise DataError(f"a window needs at least {MIN_WINDOW} points, got {x.size}")
        object.__setattr__(self, "values", x)
        if np.isnan(x).any():
            return  # measures report UNDEFINED for gappy windows
        if self.scale_min > x.min() or self.scale_max < x.max():
            raise DataError(
                f"scale [{self.scale_min}, {self.scale_max}] does not bracket "
                f"window range [{x.min()}, {x.max()}]"
            )

    @property
    def m(self) -> int:
        return len(self.values)


def return_points(x) -> np.ndarray:
    """Indices of the first point, every point of return, and the last point.

    A point of return is where the sign class of the gradient (rising,
    flat, falling) changes.
    """
    x = np.asarray(x, dtype=float)
    s = np.sign(np.diff(x))
    turns = np.flatnonzero(s[1:] != s[:-1]) + 1
    return np.concatenate(([0], turns, [len(x) - 1]))


def _fluctuation(x: np.ndarray, lo: float, hi: float) -> float:
    span = hi - lo
    if not span > 0:
        return 0.0
    n = return_points(x)
    total = np.sum(np.abs(np.diff(x[n])) / np.diff(n))
    return float(min(total / (span * (len(x) - 1)), 1.0))


def _pair_weights(m: int):
    """Upper-triangle pair index arrays and their sub-window multiplicities.

    The pair ``(a, b)`` (1-based, ``a < b``) appears in ``a * (m - b + 1)``
    of the ``(c, d)`` sub-windows with ``c <= a`` and ``d >= b``.
    """
    a, b = np.triu_indices(m, k=1)
    w = (a + 1) * (m - b)
    return a, b, w.astype(float)


def _distribution_sorted(xs: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """D for a stack of windows already sorted along the last axis."""
    m = xs.shape[-1]
    span = hi - lo
    a, b, w = _pair_weights(m)
    expected = (b - a) * (span / (m - 1))
    observed = xs[..., b] - xs[..., a]
    shortfall = np.maximum(expected - observed, 0.0) / expected
    d = 1.0 - (shortfall @ w) / w.sum()
    return np.clip(d, 0.0, 1.0)


def fluctuation(window: AnalysisWindow) -> float:
    """Fluctuation intensity of a window; NaN when it holds MISSING values."""
    x = window.values
    if np.isnan(x).any():
        return float("nan")
    return _fluctuation(x, window.scale_min, window.scale_max)


def distribution(window: AnalysisWindow) -> float:
    """How evenly the window's sorted values fill the scale; NaN if gappy."""
    x = window.values
    if np.isnan(x).any():
        return float("nan")
    if not window.scale_max - window.scale_min > 0:
        return 0.0
    return float(_distribution_sorted(np.sort(x), window.scale_min, window.scale_max))


def dynamic_complexity(window: AnalysisWindow) -> float:
    return fluctuation(window) * distribution(window)


# --- scale policies -------------------------------------------------------

@dataclass(frozen=True)
class ScalePolicy:
    """Where the measurement-scale bounds of each window come from.

    ``global``: min/max of the member's whole series.  ``window``: the
    window's own min/max.  ``fixed``: the given bounds; values outside are
    clipped to them.
    """

    kind: str = "global"
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.kind not in ("global", "window", "fixed"):
            raise DataError(f"unknown scale policy {self.kind!r}")
        if self.kind == "fixed" and not (self.lo is not None and self.hi is not None
                                         and self.hi >= self.lo):
            raise DataError("fixed scale needs lo <= hi")

    @classmethod
    def parse(cls, text: str) -> "ScalePolicy":
        """Parse ``global``, ``window`` or ``fixed:<lo>:<hi>``."""
        if isinstance(text, ScalePolicy):
            return text
        parts = text.split(":")
        if parts[0] == "fixed":
            if len(parts) != 3:
                raise DataError(f"bad scale spec {text!r}; use fixed:<lo>:<hi>")
            return cls("fixed", float(parts[1]), float(parts[2]))
        if len(parts) != 1:
            raise DataError(f"bad scale spec {text!r}")
        return cls(parts[0])

    def __str__(self):
        if self.kind == "fixed":
            return f"fixed:{self.lo!r}:{self.hi!r}"
        return self.kind


@dataclass(frozen=True)
class ComplexitySeries:
    """Per-window F, D and DC, each value stamped at its window's last sample.

    UNDEFINED entries are NaN.  For a team average, ``dc`` is the mean of the
    members' DC (not the product of the averaged ``f`` and ``d``) and
    ``contributors`` counts the members that were defined at each point.
    """

    member: str
    window_end_times: np.ndarray
    f: np.ndarray
    d: np.ndarray
    dc: np.ndarray
    contributors: np.ndarray | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.dc)


def complexity_series(series: VolumeSeries, window: int = 12, step: int = 1,
                      scale: ScalePolicy | str = "global") -> ComplexitySeries:
    """Slide a window over a resampled series and evaluate F, D and DC.

    A window containing any MISSING sample yields an UNDEFINED triple.
    """
    if window < MIN_WINDOW:
        raise DataError(f"window must be at least {MIN_WINDOW}, got {window}")
    if step < 1:
        raise DataError(f"step must be positive, got {step}")
    scale = ScalePolicy.parse(scale)
    x = series.samples
    if len(x) < window:
        warnings.warn(
            f"series {series.member!r} has {len(x)} points, fewer than the "
            f"window of {window}; no complexity values produced",
            stacklevel=2,
        )
        empty = np.empty(0)
        return ComplexitySeries(series.member, empty, empty, empty, empty.copy())

    if scale.kind == "fixed":
        x = np.clip(x, scale.lo, scale.hi)
    views = sliding_window_view(x, window)[::step]
    ends = np.arange(window - 1, len(x), step)[:len(views)]
    times = series.start + ends * series.sample_period
    defined = ~np.isnan(views).any(axis=1)

    if scale.kind == "global":
        finite = x[~np.isnan(x)]
        lo = np.full(len(views), finite.min() if finite.size else 0.0)
        hi = np.full(len(views), finite.max() if finite.size else 0.0)
    elif scale.kind == "fixed":
        lo = np.full(len(views), scale.lo)
        hi = np.full(len(views), scale.hi)
    else:
        lo = np.where(defined, views.min(axis=1), 0.0)
        hi = np.where(defined, views.max(axis=1), 0.0)

    f = np.full(len(views), np.nan)
    d = np.full(len(views), np.nan)
    live = defined & (hi - lo > 0)
    flat = defined & ~(hi - lo > 0)
    f[flat] = 0.0
    d[flat] = 0.0
    idx = np.flatnonzero(live)
    for i in idx:
        f[i] = _fluctuation(views[i], lo[i], hi[i])
    if idx.size:
        xs = np.sort(views[idx], axis=1)
        if scale.kind == "window":
            for k, i in enumerate(idx):
                d[i] = _distribution_sorted(xs[k], lo[i], hi[i])
        else:
            d[idx] = _distribution_sorted(xs, lo[idx[0]], hi[idx[0]])
    return ComplexitySeries(series.member, times, f, d, f * d)


def team_average(per_member: Sequence[ComplexitySeries],
                 label: str = "Average") -> ComplexitySeries:
    """Pointwise mean over the members that are defined at each window."""
    if not per_member:
        raise DataError("team_average needs at least one series")
    times = per_member[0].window_end_times
    for s in per_member[1:]:
        if not np.array_equal(s.window_end_times, times):
            raise DataError(f"series {s.member!r} is on a different window grid")

    def mean(name):
        stack = np.vstack([getattr(s, name) for s in per_member])
        ok = ~np.isnan(stack)
        count = ok.sum(axis=0)
        total = np.where(ok, stack, 0.0).sum(axis=0)
        out = np.full(stack.shape[1], np.nan)
        out[count > 0] = total[count > 0] / count[count > 0]
        return out, count

    dc, count = mean("dc")
    f, _ = mean("f")
    d, _ = mean("d")
    # an exact mean of identical inputs can drift by an ulp; pin it
    stack = np.vstack([s.dc for s in per_member])
    top = np.where(np.isnan(stack), -np.inf, stack).max(axis=0)
    same = np.all((stack == top) | np.isnan(stack), axis=0) & (count > 0)
    dc[same] = top[same]
    return ComplexitySeries(label, times.copy(), f, d, dc, contributors=count)
