"""Minimal deterministic SVG emission for run artifacts.

Static figures only: a time-by-energy-offset heat map with the accumulated
variation overlaid, log-scale curve plots for bound families, and cluster
weight time series.  Everything is written with fixed float formatting so
identical inputs give byte-identical files; no external plotting stack.
"""

from __future__ import annotations

import math

import numpy as np

_W, _H = 720, 500
_ML, _MR, _MT, _MB = 70, 120, 40, 55

# Dark-blue -> teal -> yellow anchors, linearly interpolated.
_STOPS = [
    (0.0, (13, 8, 135)),
    (0.45, (30, 150, 140)),
    (1.0, (250, 220, 60)),
]


class PlotDataError(ValueError):
    """Plot requested on empty or non-finite data."""


def _color(v: float) -> str:
    v = min(max(v, 0.0), 1.0)
    for (a, ca), (b, cb) in zip(_STOPS, _STOPS[1:]):
        if v <= b:
            t = (v - a) / (b - a)
            rgb = tuple(round(x + t * (y - x)) for x, y in zip(ca, cb))
            return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"
    return "#fade3c"


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _svg_header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="22" font-family="monospace" font-size="14" '
        f'text-anchor="middle">{title}</text>',
    ]


def _axis(lines: list[str], x_label: str, y_label: str) -> None:
    lines.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    lines.append(
        f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 12}" font-family="monospace" '
        f'font-size="12" text-anchor="middle">{x_label}</text>'
    )
    lines.append(
        f'<text x="16" y="{(_MT + _H - _MB) // 2}" font-family="monospace" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 16 {(_MT + _H - _MB) // 2})">{y_label}</text>'
    )


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def heatmap_svg(
    times: np.ndarray,
    bin_edges: np.ndarray,
    bin_weights: np.ndarray,
    overlay: np.ndarray | None = None,
    title: str = "energy-offset weight map",
    floor: float = 1e-12,
) -> str:
    """Heat map of log10 weight by (time, |E - E0|) with an overlay curve.

    Weights below ``floor`` render as the lowest color.  A single sample
    produces a one-column strip.
    """
    if len(times) == 0 or bin_weights.size == 0:
        raise PlotDataError("empty heat map data")
    if not np.all(np.isfinite(bin_weights)):
        raise PlotDataError("non-finite weights")
    lines = _svg_header(title)
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB
    n_t = len(times)
    n_b = bin_weights.shape[1]
    t_lo, t_hi = float(times[0]), float(times[-1])
    t_span = (t_hi - t_lo) or 1.0
    y_hi = float(bin_edges[-1]) or 1.0
    log_lo = math.log10(floor)

    # Column boundaries at midpoints between sample times.
    col_edges = [t_lo] + [
        0.5 * (float(times[i]) + float(times[i + 1])) for i in range(n_t - 1)
    ] + [t_hi]
    if n_t == 1:
        col_edges = [t_lo, t_lo + 1.0]
        t_span = 1.0
    for i in range(n_t):
        x0 = _ML + (col_edges[i] - t_lo) / t_span * plot_w
        x1 = _ML + (col_edges[i + 1] - t_lo) / t_span * plot_w
        for j in range(n_b):
            w = float(bin_weights[i, j])
            v = 0.0 if w <= floor else (math.log10(w) - log_lo) / (-log_lo)
            y1 = _MT + plot_h - float(bin_edges[j]) / y_hi * plot_h
            y0 = _MT + plot_h - float(bin_edges[j + 1]) / y_hi * plot_h
            lines.append(
                f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" '
                f'height="{_fmt(y1 - y0)}" fill="{_color(v)}"/>'
            )
    if overlay is not None and n_t > 1:
        pts = " ".join(
            f"{_fmt(_ML + (float(t) - t_lo) / t_span * plot_w)},"
            f"{_fmt(_MT + plot_h - min(float(v), y_hi) / y_hi * plot_h)}"
            for t, v in zip(times, overlay)
        )
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="white" '
            f'stroke-width="2" stroke-dasharray="6,3"/>'
        )
    _axis(lines, "time", "|E - E0|")
    for tv in _ticks(t_lo, t_hi):
        x = _ML + (tv - t_lo) / t_span * plot_w
        lines.append(
            f'<text x="{_fmt(x)}" y="{_H - _MB + 16}" font-family="monospace" '
            f'font-size="10" text-anchor="middle">{_fmt(tv)}</text>'
        )
    for yv in _ticks(0.0, y_hi):
        y = _MT + plot_h - yv / y_hi * plot_h
        lines.append(
            f'<text x="{_ML - 6}" y="{_fmt(y + 3)}" font-family="monospace" '
            f'font-size="10" text-anchor="end">{_fmt(yv)}</text>'
        )
    # Color bar.
    bar_x = _W - _MR + 24
    for k in range(60):
        v = 1.0 - k / 59.0
        y = _MT + k / 60.0 * plot_h
        lines.append(
            f'<rect x="{bar_x}" y="{_fmt(y)}" width="14" height="{_fmt(plot_h / 60.0 + 0.5)}" '
            f'fill="{_color(v)}"/>'
        )
    lines.append(
        f'<text x="{bar_x + 18}" y="{_MT + 8}" font-family="monospace" font-size="10">1</text>'
    )
    lines.append(
        f'<text x="{bar_x + 18}" y="{_MT + plot_h}" font-family="monospace" '
        f'font-size="10">{_fmt(floor)}</text>'
    )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def curves_svg(
    x: np.ndarray,
    series: list[tuple[str, np.ndarray]],
    title: str,
    x_label: str,
    y_label: str = "value (log scale)",
    floor: float = 1e-16,
) -> str:
    """Log-y polyline plot; zero or sub-floor values clamp to the floor."""
    if len(x) == 0 or not series:
        raise PlotDataError("empty curve data")
    lines = _svg_header(title)
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB
    x_lo, x_hi = float(np.min(x)), float(np.max(x))
    x_span = (x_hi - x_lo) or 1.0
    vals = np.concatenate([np.clip(np.asarray(v, dtype=float), floor, None) for _, v in series])
    if not np.all(np.isfinite(vals)):
        raise PlotDataError("non-finite curve values")
    y_lo = math.log10(float(vals.min()))
    y_hi = math.log10(float(vals.max()))
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    for k, (label, vv) in enumerate(series):
        vv = np.clip(np.asarray(vv, dtype=float), floor, None)
        pts = " ".join(
            f"{_fmt(_ML + (float(xi) - x_lo) / x_span * plot_w)},"
            f"{_fmt(_MT + plot_h - (math.log10(float(vi)) - y_lo) / (y_hi - y_lo) * plot_h)}"
            for xi, vi in zip(x, vv)
        )
        color = palette[k % len(palette)]
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = _MT + 14 + 14 * k
        lines.append(
            f'<rect x="{_W - _MR + 8}" y="{ly - 8}" width="10" height="10" fill="{color}"/>'
        )
        lines.append(
            f'<text x="{_W - _MR + 22}" y="{ly}" font-family="monospace" '
            f'font-size="10">{label}</text>'
        )
    _axis(lines, x_label, y_label)
    for tv in _ticks(x_lo, x_hi):
        px = _ML + (tv - x_lo) / x_span * plot_w
        lines.append(
            f'<text x="{_fmt(px)}" y="{_H - _MB + 16}" font-family="monospace" '
            f'font-size="10" text-anchor="middle">{_fmt(tv)}</text>'
        )
    for k in range(5):
        lv = y_lo + (y_hi - y_lo) * k / 4.0
        py = _MT + plot_h - k / 4.0 * plot_h
        lines.append(
            f'<text x="{_ML - 6}" y="{_fmt(py + 3)}" font-family="monospace" '
            f'font-size="10" text-anchor="end">1e{_fmt(lv)}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_plot(obj, kind: str, path: str) -> None:
    """Render a known artifact to a self-contained SVG file.

    Kinds: ``heatmap`` for a leakage profile, ``bounds`` for epsilon-vs-d
    curves from a profile's final sample, ``weights`` for a run record's
    cluster-weight time series.
    """
    if kind == "heatmap":
        text = heatmap_svg(
            obj.times,
            obj.bin_edges,
            obj.bin_weights,
            overlay=obj.lambda_ts * obj.n_sites,
            title="instantaneous-basis weight by |E - E0| (log color)",
        )
    elif kind == "bounds":
        text = curves_svg(
            obj.d_grid,
            [
                ("measured", obj.eps[-1]),
                ("gamma-ratio bound", obj.bound_eps1[-1]),
                ("commuting-core bound", obj.bound_eps2[-1]),
            ],
            title="leakage vs window density at final sample",
            x_label="d",
        )
    elif kind == "weights":
        if not obj.samples:
            raise PlotDataError("record has no samples")
        t = np.array([s["time"] for s in obj.samples])
        text = curves_svg(
            t,
            [
                ("1 - p_w0", np.array([1.0 - s["p_w0"] for s in obj.samples])),
                ("p_above", np.array([s["p_above"] for s in obj.samples])),
                ("escape bound", np.array([s["bound_escape"] for s in obj.samples])),
            ],
            title="cluster confinement over time",
            x_label="time",
        )
    else:
        raise PlotDataError(f"unknown plot kind {kind!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
