"""Minimal deterministic SVG line/marker plots."""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "emit_svg"]

WIDTH, HEIGHT = 640, 420
MARGIN = 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    style: str = "line"  # "line" or "marker"
    color: str | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have the same length")
        if self.style not in ("line", "marker"):
            raise ValueError("style must be 'line' or 'marker'")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _range(vals: list) -> tuple:
    if not vals:
        return 0.0, 1.0
    a = np.concatenate(vals)
    a = a[np.isfinite(a)]
    if a.size == 0:
        return 0.0, 1.0
    lo, hi = float(a.min()), float(a.max())
    if hi == lo:
        pad = 0.5 if lo == 0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    pad = 0.03 * (hi - lo)
    return lo - pad, hi + pad


def emit_svg(series, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Render series as a static SVG string; identical input gives identical bytes.

    An empty list gives the axes alone. Lines become one polyline with a
    vertex per point; markers become one circle per point.
    """
    series = [s if isinstance(s, Series) else Series(**s) for s in series]
    x0, x1 = _range([s.x for s in series])
    y0, y1 = _range([s.y for s in series])
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * pw

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<g class="axes" stroke="black" stroke-width="1">'
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}"/>'
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}"/></g>',
    ]
    ticks = []
    for v in np.linspace(x0, x1, 5):
        ticks.append(f'<text x="{_fmt(px(v))}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(y0, y1, 5):
        ticks.append(f'<text x="{MARGIN - 6}" y="{_fmt(py(v) + 4)}" text-anchor="end">{v:.3g}</text>')
    out.append('<g class="ticks" font-family="sans-serif" font-size="11">' + "".join(ticks) + "</g>")
    if title:
        out.append(f'<text x="{WIDTH / 2:.0f}" y="{MARGIN / 2:.0f}" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{HEIGHT / 2:.0f}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {HEIGHT / 2:.0f})">{escape(ylabel)}</text>')
    for i, s in enumerate(series):
        color = s.color or COLORS[i % len(COLORS)]
        keep = np.isfinite(s.x) & np.isfinite(s.y)
        xs, ys = s.x[keep], s.y[keep]
        if s.style == "line" and xs.size > 1:
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(xs, ys))
            out.append(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        else:
            for a, b in zip(xs, ys):
                out.append(f'<circle class="series" cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="3" fill="{color}"/>')
        if s.label:
            out.append(f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 14 * (i + 1)}" text-anchor="end" fill="{color}" font-family="sans-serif" font-size="11">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
