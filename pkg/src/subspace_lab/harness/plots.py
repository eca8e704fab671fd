"""Deterministic static SVG line plots."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=64, right=150, top=36, bottom=48)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s in ("-0", "0") else s


def emit_plot(series, title: str = "", xlabel: str = "t", ylabel: str = "") -> str:
    """Render line series to an SVG string.

    Output depends only on the inputs (fixed canvas, fixed number formatting),
    so identical data gives identical bytes.
    """
    series = list(series)
    if not series:
        raise ValueError("emit_plot needs at least one series")
    xs = [np.asarray(s.x, dtype=float) for s in series]
    ys = [np.asarray(s.y, dtype=float) for s in series]
    for s, x, y in zip(series, xs, ys):
        if x.shape != y.shape or x.ndim != 1 or x.size == 0:
            raise ValueError(f"series {s.label!r} needs equal-length non-empty x and y")
    allx = np.concatenate(xs)
    ally = np.concatenate(ys)
    finite = np.isfinite(ally)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = (float(ally[finite].min()), float(ally[finite].max())) if finite.any() else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        pad = 0.5 if y0 == 0 else abs(y0) * 0.1
        y0, y1 = y0 - pad, y1 + pad

    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{_fmt(X)}" y1="{top + ph}" x2="{_fmt(X)}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X)}" y="{top + ph + 18}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{_tick_label(t)}</text>')
    for t in _nice_ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(Y)}" x2="{left}" y2="{_fmt(Y)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(Y + 4)}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{_tick_label(t)}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{HEIGHT - 8}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.2f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
               f'transform="rotate(-90 14 {top + ph / 2:.2f})">{escape(ylabel)}</text>')
    for i, (s, x, y) in enumerate(zip(series, xs, ys)):
        color = PALETTE[i % len(PALETTE)]
        keep = np.isfinite(y)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x[keep], y[keep]))
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = top + 12 + 18 * i
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_series(traj, names=("P", "Q"), dashed: bool = False, prefix: str = "") -> list[Series]:
    """Diagonal entries of the chosen overlap matrices as plot series."""
    out = []
    for name in names:
        diag = traj.diagonals(name)
        for j in range(diag.shape[1]):
            out.append(Series(f"{prefix}{name}_{j + 1}{j + 1}", traj.t, diag[:, j], dashed))
    return out


def image_grid(bases, rows: int, cols: int, per_row: int = 8, cell: int = 3) -> str:
    """Basis columns reshaped to ``rows x cols`` images, drawn as a grey-scale grid."""
    b = np.asarray(bases, dtype=float)
    if b.ndim != 2 or b.shape[0] != rows * cols:
        raise ValueError("basis rows must equal rows * cols")
    k = b.shape[1]
    grid_rows = math.ceil(k / per_row)
    w = per_row * (cols * cell + 4)
    h = grid_rows * (rows * cell + 4)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>']
    for j in range(k):
        img = b[:, j].reshape(rows, cols)
        lo, hi = img.min(), img.max()
        scaled = np.zeros_like(img) if hi == lo else (img - lo) / (hi - lo)
        ox = (j % per_row) * (cols * cell + 4) + 2
        oy = (j // per_row) * (rows * cell + 4) + 2
        for r in range(rows):
            for c in range(cols):
                g = int(round(255 * scaled[r, c]))
                out.append(f'<rect x="{ox + c * cell}" y="{oy + r * cell}" width="{cell}" height="{cell}" '
                           f'fill="#{g:02x}{g:02x}{g:02x}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
