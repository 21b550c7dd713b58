"""Small static SVG plots: line overlays and scatter clouds."""
from __future__ import annotations

import math
from html import escape
from typing import Sequence

import numpy as np

WIDTH, HEIGHT = 760, 480
MARGIN = dict(left=70, right=170, top=40, bottom=55)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#17becf"]
MAX_POINTS = 2000


def _nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + (self.y1 - np.asarray(y)) / (self.y1 - self.y0) * self.ph

    def axes(self, title, xlabel, ylabel) -> list[str]:
        L, T = MARGIN["left"], MARGIN["top"]
        out = [f'<rect x="{L}" y="{T}" width="{self.pw}" height="{self.ph}" '
               'fill="none" stroke="#333"/>']
        for t in _nice_ticks(self.x0, self.x1):
            x = float(self.px(t))
            out.append(f'<line x1="{x:.2f}" y1="{T + self.ph}" x2="{x:.2f}" '
                       f'y2="{T + self.ph + 5}" stroke="#333"/>')
            out.append(f'<text x="{x:.2f}" y="{T + self.ph + 20}" '
                       f'text-anchor="middle" font-size="11">{_fmt(t)}</text>')
        for t in _nice_ticks(self.y0, self.y1):
            y = float(self.py(t))
            out.append(f'<line x1="{L - 5}" y1="{y:.2f}" x2="{L + self.pw}" y2="{y:.2f}" '
                       'stroke="#ddd"/>')
            out.append(f'<text x="{L - 8}" y="{y + 4:.2f}" text-anchor="end" '
                       f'font-size="11">{_fmt(t)}</text>')
        out.append(f'<text x="{L + self.pw / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
                   f'font-size="13">{escape(xlabel)}</text>')
        out.append(f'<text x="18" y="{T + self.ph / 2}" text-anchor="middle" font-size="13" '
                   f'transform="rotate(-90 18 {T + self.ph / 2})">{escape(ylabel)}</text>')
        out.append(f'<text x="{L + self.pw / 2}" y="24" text-anchor="middle" '
                   f'font-size="15">{escape(title)}</text>')
        return out


def _document(body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
                      *body, "</svg>", ""])


def _finite_limits(arrays: Sequence[np.ndarray]) -> tuple[float, float]:
    vals = np.concatenate([a[np.isfinite(a)] for a in arrays] or [np.zeros(1)])
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.03 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
              title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Overlay of ``(label, x, y)`` series; long series are decimated for drawing."""
    xs = [np.asarray(s[1], dtype=float) for s in series]
    ys = [np.asarray(s[2], dtype=float) for s in series]
    frame = _Frame(_finite_limits(xs), _finite_limits(ys))
    body = frame.axes(title, xlabel, ylabel)
    for k, ((label, _, _), x, y) in enumerate(zip(series, xs, ys)):
        stride = max(1, x.size // MAX_POINTS)
        keep = np.isfinite(y[::stride])
        px, py = frame.px(x[::stride][keep]), frame.py(y[::stride][keep])
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = PALETTE[k % len(PALETTE)]
        body.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.3" '
                    f'points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 18 * k
        lx = WIDTH - MARGIN["right"] + 12
        body.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" '
                    f'stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{lx + 28}" y="{ly + 4}" font-size="11">{escape(label)}</text>')
    return _document(body)


def scatter_plot(x: Sequence[float], y: Sequence[float], title: str = "",
                 xlabel: str = "", ylabel: str = "", radius: float = 0.6) -> str:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    frame = _Frame(_finite_limits([x]), _finite_limits([y]))
    body = frame.axes(title, xlabel, ylabel)
    body.append('<g fill="#222" fill-opacity="0.5">')
    body.extend(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="{radius}"/>'
                for a, b in zip(frame.px(x), frame.py(y)))
    body.append("</g>")
    return _document(body)
