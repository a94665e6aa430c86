"""Self-contained SVG line plots; no plotting dependencies.

Output is deterministic: fixed palette, fixed viewport, and fixed-format
numeric labels, so identical inputs yield byte-identical files.
"""

from __future__ import annotations

import numpy as np

_PALETTE = ("#1f6fb4", "#d95f02", "#2a9d4e", "#7b52ab", "#c23b80", "#6b6b6b")
_WIDTH, _HEIGHT = 720, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 40, 50


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count)


def render_line_plot(
    x,
    series,
    *,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    zero_line: bool = False,
    bands=None,
) -> str:
    """Render labelled polylines over a shared x grid.

    ``series`` is a list of (label, y-values); ``bands`` optionally gives a
    (lower, upper) pair per series (or None) drawn as a translucent ribbon.
    """
    x = np.asarray(x, dtype=float)
    if len(series) == 0:
        raise ValueError("nothing to plot")
    if bands is None:
        bands = [None] * len(series)
    if len(bands) != len(series):
        raise ValueError("bands must align with series")

    ys = [np.asarray(y, dtype=float) for _, y in series]
    env = [x]
    for y in ys:
        env.append(y)
    for band in bands:
        if band is not None:
            env.append(np.asarray(band[0], dtype=float))
            env.append(np.asarray(band[1], dtype=float))
    y_all = np.concatenate(env[1:])
    y_lo, y_hi = float(y_all.min()), float(y_all.max())
    if zero_line:
        y_lo, y_hi = min(y_lo, 0.0), max(y_hi, 0.0)
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi <= x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(value: float) -> float:
        return _MARGIN_L + (value - x_lo) / (x_hi - x_lo) * plot_w

    def sy(value: float) -> float:
        return _MARGIN_T + (y_hi - value) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>'
        )

    # axes box and ticks
    parts.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333333" stroke-width="1"/>'
    )
    for tick in _ticks(x_lo, x_hi):
        px = sx(tick)
        parts.append(
            f'<line x1="{px:.2f}" y1="{_MARGIN_T + plot_h}" x2="{px:.2f}" '
            f'y2="{_MARGIN_T + plot_h + 5}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{_MARGIN_T + plot_h + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        py = sy(tick)
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{py:.2f}" x2="{_MARGIN_L}" y2="{py:.2f}" '
            f'stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{x_label}</text>'
        )
    if y_label:
        cx, cy = 18, _MARGIN_T + plot_h / 2
        parts.append(
            f'<text x="{cx}" y="{cy:.1f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="13" transform="rotate(-90 {cx} {cy:.1f})">{y_label}</text>'
        )

    if zero_line and y_lo < 0.0 < y_hi:
        py = sy(0.0)
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{py:.2f}" x2="{_MARGIN_L + plot_w}" y2="{py:.2f}" '
            f'stroke="#888888" stroke-dasharray="5,4"/>'
        )

    for i, ((label, _), y, band) in enumerate(zip(series, ys, bands)):
        color = _PALETTE[i % len(_PALETTE)]
        if band is not None:
            lower = np.asarray(band[0], dtype=float)
            upper = np.asarray(band[1], dtype=float)
            ring = [f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x, upper)]
            ring += [f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x[::-1], lower[::-1])]
            parts.append(
                f'<polygon points="{" ".join(ring)}" fill="{color}" fill-opacity="0.15" '
                f'stroke="none"/>'
            )
        points = " ".join(f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x, y))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        ly = _MARGIN_T + 16 + 16 * i
        lx = _MARGIN_L + plot_w - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.6"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" font-size="12">{label}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
