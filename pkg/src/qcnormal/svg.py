"""Minimal SVG plots written as text (no plotting library needed)."""
from __future__ import annotations

import math

import numpy as np

from .grids import PolarGrid

WIDTH, HEIGHT = 640, 440
MARGIN = 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")

# viridis anchors, interpolated linearly
_CMAP = np.array(
    [
        [68, 1, 84],
        [59, 82, 139],
        [33, 145, 140],
        [94, 201, 98],
        [253, 231, 37],
    ],
    dtype=float,
)


def _num(v: float) -> str:
    return f"{v:.2f}"


def _tick(v: float) -> str:
    return f"{v:.3g}"


def _color(u: float) -> str:
    if not math.isfinite(u):
        return "#cccccc"
    u = min(max(u, 0.0), 1.0) * (len(_CMAP) - 1)
    i = min(int(u), len(_CMAP) - 2)
    c = _CMAP[i] + (u - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#%02x%02x%02x" % tuple(int(round(x)) for x in c)


def _header(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="15">{_escape(title)}</text>',
    ]


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_plot(series, title="", xlabel="", ylabel="", logx=False, logy=False) -> str:
    """Line chart of ``series = [(x, y, label), ...]``; non-finite points are dropped."""
    tx = np.log10 if logx else (lambda a: a)
    ty = np.log10 if logy else (lambda a: a)
    clean = []
    for x, y, label in series:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        clean.append((tx(x[ok]), ty(y[ok]), label))
    xs = np.concatenate([c[0] for c in clean]) if clean else np.zeros(0)
    ys = np.concatenate([c[1] for c in clean]) if clean else np.zeros(0)
    x0, x1 = (xs.min(), xs.max()) if xs.size else (0.0, 1.0)
    y0, y1 = (ys.min(), ys.max()) if ys.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(v):
        return MARGIN + (v - x0) / (x1 - x0) * pw

    def py(v):
        return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * ph

    out = _header(title)
    out.append(
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    for k in range(5):
        vx = x0 + k * (x1 - x0) / 4
        vy = y0 + k * (y1 - y0) / 4
        lx = 10**vx if logx else vx
        ly = 10**vy if logy else vy
        out.append(f'<text x="{_num(px(vx))}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{_tick(lx)}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{_num(py(vy) + 4)}" text-anchor="end">{_tick(ly)}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 16}" text-anchor="middle">{_escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" transform="rotate(-90 16 {HEIGHT / 2})">{_escape(ylabel)}</text>'
    )
    for i, (x, y, label) in enumerate(clean):
        color = PALETTE[i % len(PALETTE)]
        if x.size:
            pts = " ".join(f"{_num(px(a))},{_num(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN + 16 + 16 * i
        out.append(f'<line x1="{WIDTH - MARGIN - 150}" y1="{ly - 4}" x2="{WIDTH - MARGIN - 130}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - MARGIN - 125}" y="{ly}">{_escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def polar_heatmap(grid: PolarGrid, values, title="", log=True) -> str:
    """Ring-by-ring heatmap; ring ``i`` is drawn at radial position ``i`` so
    log-spaced grids stay readable."""
    vals = np.asarray(values, dtype=float).reshape(grid.shape)
    shown = np.where(vals > 0, np.log10(np.where(vals > 0, vals, 1.0)), np.nan) if log else vals.copy()
    fin = shown[np.isfinite(shown)]
    lo, hi = (fin.min(), fin.max()) if fin.size else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1
    R, A = grid.shape
    cx, cy = WIDTH / 2 - 60, HEIGHT / 2 + 10
    scale = (HEIGHT / 2 - MARGIN) / (R + 1)
    out = _header(title)
    half = math.pi / A
    for i in range(R):
        r0, r1 = (i + 0.5) * scale, (i + 1.5) * scale
        for j in range(A):
            t0, t1 = 2 * math.pi * j / A - half, 2 * math.pi * j / A + half
            pts = [
                (cx + r0 * math.cos(t0), cy - r0 * math.sin(t0)),
                (cx + r1 * math.cos(t0), cy - r1 * math.sin(t0)),
                (cx + r1 * math.cos(t1), cy - r1 * math.sin(t1)),
                (cx + r0 * math.cos(t1), cy - r0 * math.sin(t1)),
            ]
            fill = _color((shown[i, j] - lo) / (hi - lo))
            out.append(
                '<polygon points="%s" fill="%s" stroke="none"/>'
                % (" ".join(f"{_num(a)},{_num(b)}" for a, b in pts), fill)
            )
    # colour bar
    bx, by, bh = WIDTH - 110, MARGIN, HEIGHT - 2 * MARGIN
    for k in range(50):
        out.append(
            f'<rect x="{bx}" y="{_num(by + bh * (49 - k) / 50)}" width="18" height="{_num(bh / 50 + 0.5)}" fill="{_color(k / 49)}"/>'
        )
    fmt = (lambda v: "1e%.2g" % v) if log else _tick
    out.append(f'<text x="{bx + 24}" y="{by + 10}">{fmt(hi)}</text>')
    out.append(f'<text x="{bx + 24}" y="{by + bh}">{fmt(lo)}</text>')
    out.append(
        f'<text x="{cx}" y="{HEIGHT - 12}" text-anchor="middle">rings {_tick(grid.inner_radius)} .. {_tick(grid.outer_radius)} (index-spaced)</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def omega_plot(curve) -> str:
    t = curve.thresholds
    w = curve.omega
    return line_plot(
        [(t, w, "omega(t)"), (t, w / t, "omega(t)/t")],
        title="modulus of asymptotic conformality",
        xlabel="t",
        ylabel="value",
        logx=True,
        logy=True,
    )


def dilatation_plot(abs_c, measured_K, bound_K) -> str:
    order = np.argsort(abs_c)
    a = np.asarray(abs_c)[order]
    return line_plot(
        [
            (a, np.asarray(measured_K)[order], "measured K"),
            (a, np.asarray(bound_K)[order], "(1+|c|)/(1-|c|)"),
        ],
        title="dilatation of the extended motion",
        xlabel="|c|",
        ylabel="K",
    )
