"""Minimal self-contained SVG line plots (axes, ticks, legend, optional log
y-axis). CSV remains the authoritative output; these are convenience
visuals with no plotting dependency.
"""

from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 36, 50


def _fmt(x: float) -> str:
    if x == 0:
        return "0"
    if abs(x) >= 1e4 or abs(x) < 1e-3:
        return f"{x:.1e}"
    return f"{x:.4g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * span:
        out.append(v)
        v += step
    return out


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    step = max(1, (hi_e - lo_e) // 6)
    return [10.0**e for e in range(lo_e, hi_e + 1, step)]


def line_plot(series, title: str = "", xlabel: str = "", ylabel: str = "",
              log_y: bool = False) -> str:
    """Render [(label, xs, ys), ...] to an SVG string.

    With log_y, non-positive y values are dropped from display.
    """
    pts = []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if y is None or not math.isfinite(y):
                continue
            if log_y and y <= 0:
                continue
            pts.append((float(x), float(y)))
    if not pts:
        pts = [(0.0, 1.0), (1.0, 1.0)]
    x_lo = min(p[0] for p in pts)
    x_hi = max(p[0] for p in pts)
    y_lo = min(p[1] for p in pts)
    y_hi = max(p[1] for p in pts)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if log_y:
        y_lo_l, y_hi_l = math.log10(y_lo), math.log10(y_hi)
        if y_hi_l == y_lo_l:
            y_hi_l = y_lo_l + 1.0
    elif y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(y):
        if log_y:
            frac = (math.log10(y) - y_lo_l) / (y_hi_l - y_lo_l)
        else:
            frac = (y - y_lo) / (y_hi - y_lo)
        return _H - _MB - frac * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    # axes
    out.append(
        f'<line x1="{_ML}" y1="{_H-_MB}" x2="{_W-_MR}" y2="{_H-_MB}" stroke="black"/>'
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H-_MB}" stroke="black"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        out.append(
            f'<line x1="{px:.1f}" y1="{_H-_MB}" x2="{px:.1f}" y2="{_H-_MB+5}" stroke="black"/>'
            f'<text x="{px:.1f}" y="{_H-_MB+18}" text-anchor="middle">{_fmt(tx)}</text>'
        )
    y_tick_vals = _log_ticks(y_lo, y_hi) if log_y else _ticks(y_lo, y_hi)
    for ty in y_tick_vals:
        py = sy(ty)
        out.append(
            f'<line x1="{_ML-5}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" stroke="black"/>'
            f'<text x="{_ML-8}" y="{py+4:.1f}" text-anchor="end">{_fmt(ty)}</text>'
        )
    out.append(
        f'<text x="{(_ML+_W-_MR)/2:.0f}" y="{_H-12}" text-anchor="middle">{xlabel}</text>'
        f'<text x="16" y="{(_MT+_H-_MB)/2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(_MT+_H-_MB)/2:.0f})">{ylabel}</text>'
    )
    for idx, (label, xs, ys) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        coords = [
            f"{sx(float(x)):.1f},{sy(float(y)):.1f}"
            for x, y in zip(xs, ys)
            if y is not None and math.isfinite(y) and not (log_y and y <= 0)
        ]
        if coords:
            out.append(
                f'<polyline points="{" ".join(coords)}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
        ly = _MT + 16 * idx
        out.append(
            f'<line x1="{_W-_MR-130}" y1="{ly:.0f}" x2="{_W-_MR-105}" y2="{ly:.0f}" '
            f'stroke="{color}" stroke-width="2"/>'
            f'<text x="{_W-_MR-100}" y="{ly+4:.0f}">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out)


def write_plot(path: str, series, **kwargs):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(line_plot(series, **kwargs))
