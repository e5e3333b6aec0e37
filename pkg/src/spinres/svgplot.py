"""Minimal SVG line plots (axes, ticks, polylines, markers) with no plotting
library.  Output is deterministic: coordinates are printed with two
decimals and element order follows the input."""

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

WIDTH = 640
HEIGHT = 420
MARGIN = (70, 20, 40, 55)  # left, right, top, bottom
PALETTE = ("#c0392b", "#2c6fbb", "#27864a", "#8e44ad", "#d35400")


@dataclass
class Series:
    x: list
    y: list
    label: str = ""
    style: str = "line"  # "line" or "points"
    color: str = None


def nice_ticks(lo, hi, target=6):
    """Round tick positions covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v = first + len(ticks) * step
    return ticks


def _tick_label(v):
    return f"{v:.6g}"


def line_plot(series, xlabel="", ylabel="", title=""):
    """Render ``series`` (list of :class:`Series`) to an SVG document string."""
    xs = [float(v) for s in series for v in s.x]
    ys = [float(v) for s in series for v in s.y]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5 * (abs(x0) or 1.0), x1 + 0.5 * (abs(x1) or 1.0)
    if y1 == y0:
        y0, y1 = y0 - 0.05 * (abs(y0) or 1.0), y1 + 0.05 * (abs(y1) or 1.0)
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    left, right, top, bottom = MARGIN
    pw = WIDTH - left - right
    ph = HEIGHT - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in nice_ticks(x0, x1):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in nice_ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{_tick_label(t)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cy = top + ph / 2
        out.append(f'<text x="16" y="{cy:.2f}" text-anchor="middle" transform="rotate(-90 16 {cy:.2f})">{escape(ylabel)}</text>')
    for k, s in enumerate(series):
        color = s.color or PALETTE[k % len(PALETTE)]
        pts = [(px(float(a)), py(float(b))) for a, b in zip(s.x, s.y)]
        if s.style == "points" or len(pts) == 1:
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2" fill="{color}"/>' for a, b in pts)
        else:
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        if s.label:
            ly = top + 16 + 16 * k
            out.append(f'<line x1="{left + pw - 120}" y1="{ly - 4}" x2="{left + pw - 100}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{left + pw - 95}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def gnuplot_script(data_file, columns, xlabel, ylabel, output_svg, labels=None):
    """A gnuplot script plotting ``columns`` (1-based (x, y) pairs) of ``data_file``."""
    lines = [
        "set datafile separator ','",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set terminal svg size 640,420",
        f"set output '{output_svg}'",
    ]
    plots = []
    for k, (cx, cy) in enumerate(columns):
        title = (labels or [None] * len(columns))[k]
        plots.append(f"'{data_file}' using {cx}:{cy} with lines" + (f" title '{title}'" if title else " notitle"))
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
