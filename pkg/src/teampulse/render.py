"""Deterministic SVG heatmaps and Graphviz DOT networks.

Every number written to a document goes through a fixed-precision
formatter, so identical inputs always produce byte-identical output.
"""
from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .complexity import ComplexitySeries
from .model import DataError, format_clock

COLOR_STOPS = (
    (0.0, (59, 76, 192)),
    (0.5, (221, 221, 221)),
    (1.0, (180, 4, 38)),
)
UNDEFINED_COLOR = (128, 128, 128)
NODE_SIZE_RANGE = (0.3, 1.5)
PENWIDTH_RANGE = (0.5, 6.0)

AVERAGE_LABEL = "Average"
INSTABILITY_LABEL = "Critical Instabilities"


def colormap(value: float) -> tuple[int, int, int]:
    """Blue-grey-red diverging map; values are clamped into [0, 1]."""
    v = min(max(float(value), 0.0), 1.0)
    for (x0, c0), (x1, c1) in zip(COLOR_STOPS[:-1], COLOR_STOPS[1:]):
        if v <= x1:
            frac = (v - x0) / (x1 - x0)
            return tuple(int(math.floor(a + (b - a) * frac + 0.5)) for a, b in zip(c0, c1))
    return COLOR_STOPS[-1][1]


def _hex(rgb) -> str:
    return "#%02x%02x%02x" % tuple(rgb)


def _num(x: float) -> str:
    s = "%.2f" % x
    return s.rstrip("0").rstrip(".") if "." in s else s


def normalize_jointly(rows: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Min-max scale every row against the joint range of all rows.

    A degenerate range maps every defined value to 0.
    """
    finite = np.concatenate([r[~np.isnan(r)] for r in rows]) if rows else np.empty(0)
    if finite.size == 0:
        return [np.full(len(r), np.nan) for r in rows]
    lo, hi = finite.min(), finite.max()
    out = []
    for r in rows:
        if hi > lo:
            out.append((r - lo) / (hi - lo))
        else:
            out.append(np.where(np.isnan(r), np.nan, 0.0))
    return out


def render_heatmap(series: Sequence[ComplexitySeries], average: ComplexitySeries,
                   events=(), annotations=(), cell_width: float = 4.0,
                   row_height: float = 20.0, tick_every: float = 300.0) -> str:
    """SVG heatmap: one band per member, then the average, then instabilities.

    ``events`` are :class:`~teampulse.instability.InstabilityEvent` objects
    (or bare times); ``annotations`` are ``(label, start, end)`` triples drawn
    along the top.
    """
    if not series or len(average) == 0:
        raise DataError("nothing to render: empty complexity series")
    times = np.asarray(average.window_end_times, dtype=float)
    for s in series:
        if not np.array_equal(s.window_end_times, times):
            raise DataError(f"series {s.member!r} is not on the average's window grid")
    ncol = len(times)
    step = float(times[1] - times[0]) if ncol > 1 else 5.0

    labels = [s.member for s in series] + [AVERAGE_LABEL]
    values = normalize_jointly([np.asarray(s.dc, float) for s in series]
                               + [np.asarray(average.dc, float)])
    event_times = [getattr(e, "time", e) for e in events]
    marks = np.zeros(ncol, dtype=bool)
    for t in event_times:
        marks[int(np.argmin(np.abs(times - t)))] = True

    left, top, bottom, right = 150.0, 40.0, 40.0, 20.0
    width = left + ncol * cell_width + right
    nrows = len(labels) + 1
    height = top + nrows * row_height + bottom

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{_num(width)}" height="{_num(height)}" fill="#ffffff"/>',
    ]

    for label, t0, t1 in annotations:
        x0 = left + max(0.0, (t0 - times[0]) / step) * cell_width
        x1 = left + min(float(ncol), (t1 - times[0]) / step + 1) * cell_width
        if x1 <= x0:
            continue
        out.append(f'<g class="annotation"><line x1="{_num(x0)}" y1="{_num(top - 8)}" '
                   f'x2="{_num(x1)}" y2="{_num(top - 8)}" stroke="#000000"/>'
                   f'<text x="{_num(x0)}" y="{_num(top - 12)}">{escape(str(label))}</text></g>')

    for r, label in enumerate(labels + [INSTABILITY_LABEL]):
        y = top + r * row_height
        out.append(f'<g class="row" data-label={quoteattr(label)}>')
        out.append(f'<text x="{_num(left - 6)}" y="{_num(y + row_height * 0.7)}" '
                   f'text-anchor="end">{escape(label)}</text>')
        for c in range(ncol):
            if r < len(labels):
                v = values[r][c]
                fill = _hex(UNDEFINED_COLOR if np.isnan(v) else colormap(v))
            else:
                fill = "#000000" if marks[c] else "#ffffff"
            out.append(f'<rect x="{_num(left + c * cell_width)}" y="{_num(y)}" '
                       f'width="{_num(cell_width)}" height="{_num(row_height)}" fill="{fill}"/>')
        out.append('</g>')

    base = top + nrows * row_height
    out.append('<g class="axis">')
    first = math.ceil(times[0] / tick_every) * tick_every
    for t in np.arange(first, times[-1] + 1e-9, tick_every):
        c = (t - times[0]) / step
        x = left + c * cell_width + cell_width / 2
        out.append(f'<line x1="{_num(x)}" y1="{_num(base)}" x2="{_num(x)}" '
                   f'y2="{_num(base + 5)}" stroke="#000000"/>')
        out.append(f'<text x="{_num(x)}" y="{_num(base + 18)}" '
                   f'text-anchor="middle">{format_clock(t)}</text>')
    out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"


# --- networks -------------------------------------------------------------

def figure_scale(networks) -> tuple[float, float]:
    """Largest energy and engagement across a set of networks."""
    emax = max((v for n in networks for v in n.energy.values()), default=0.0)
    wmax = max((v for n in networks for v in n.engagement.values()), default=0.0)
    return emax, wmax


def node_size(energy: float, energy_max: float) -> float:
    lo, hi = NODE_SIZE_RANGE
    if energy_max <= 0:
        return lo
    return lo + (hi - lo) * math.sqrt(min(energy / energy_max, 1.0))


def penwidth(weight: float, weight_max: float) -> float:
    lo, hi = PENWIDTH_RANGE
    if weight_max <= 0:
        return lo
    return lo + (hi - lo) * min(weight / weight_max, 1.0)


def emit_network_dot(network, energy_max: float | None = None,
                     engagement_max: float | None = None,
                     layout: str = "circo", name: str = "phase") -> str:
    """Graphviz DOT for one interaction network.

    Pass the maxima from :func:`figure_scale` so a set of phases shares one
    scale; by default the network is scaled on its own.
    """
    members = network.members
    if not members:
        raise DataError("cannot draw a network without members")
    own_e, own_w = figure_scale([network])
    emax = own_e if energy_max is None else energy_max
    wmax = own_w if engagement_max is None else engagement_max

    lines = [f'graph "{name}" {{',
             f'  graph [layout={layout}, overlap=false];',
             '  node [shape=circle, fixedsize=true, fontname="Helvetica"];']
    for m in members:
        size = "%.4f" % node_size(network.energy[m], emax)
        attrs = [f'width={size}', f'height={size}',
                 f'tooltip="energy={network.energy[m]:.6g}/s"']
        if network.low_confidence(m):
            attrs.append('style=dashed')
        lines.append(f'  "{m}" [{", ".join(attrs)}];')
    for (i, j), w in sorted(network.engagement.items()):
        if w <= 0:
            continue
        lines.append(f'  "{i}" -- "{j}" [penwidth={penwidth(w, wmax):.4f}, '
                     f'tooltip="engagement={w:.6g}/s"];')
    lines.append('}')
    return "\n".join(lines) + "\n"


def emit_figure_set(networks, layout: str = "circo") -> list[str]:
    """DOT documents for a sequence of phase networks on one shared scale."""
    emax, wmax = figure_scale(networks)
    return [emit_network_dot(n, emax, wmax, layout, name=f"phase_{k:02d}")
            for k, n in enumerate(networks)]
