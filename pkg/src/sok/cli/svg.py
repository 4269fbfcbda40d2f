"""Minimal line plots as standalone SVG."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 180, 40, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def line_plot(series: dict[str, tuple], title: str = "", log_y: bool = False, xlabel: str = "", ylabel: str = "") -> str:
    """One polyline per entry of ``series`` (name -> (x, y)).

    With ``log_y`` non-positive values are dropped and y ticks sit on decades.
    """
    if not series:
        raise ValueError("nothing to plot")
    cleaned = {}
    for name, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if log_y:
            keep &= y > 0
        cleaned[name] = (x[keep], np.log10(y[keep]) if log_y else y[keep])
    xs = np.concatenate([v[0] for v in cleaned.values()])
    ys = np.concatenate([v[1] for v in cleaned.values()])
    if xs.size == 0:
        raise ValueError("no finite points to plot")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if log_y:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{LEFT + pw / 2}" y="{TOP - 15}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{TOP + ph}" x2="{sx(t):.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text class="xtick" x="{sx(t):.2f}" y="{TOP + ph + 18}" text-anchor="middle" font-size="11">{_fmt(t)}</text>')
    yticks = list(range(int(y0), int(y1) + 1)) if log_y else _nice_ticks(y0, y1)
    for t in yticks:
        label = f"1e{t}" if log_y else _fmt(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{sy(t):.2f}" x2="{LEFT}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text class="ytick" x="{LEFT - 8}" y="{sy(t) + 4:.2f}" text-anchor="end" font-size="11">{label}</text>')
    if xlabel:
        out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="15" y="{TOP + ph / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {TOP + ph / 2})">{escape(ylabel)}</text>')
    for i, (name, (x, y)) in enumerate(cleaned.items()):
        color = COLORS[i % len(COLORS)]
        points = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"><title>{escape(name)}</title></polyline>')
        ly = TOP + 15 + 18 * i
        out.append(f'<line x1="{LEFT + pw + 10}" y1="{ly}" x2="{LEFT + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw + 35}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
