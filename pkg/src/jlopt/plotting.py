"""Minimal deterministic SVG line plots (two side-by-side panels).

Hand-rolled rather than delegated to a plotting library so that identical
inputs produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

_PANEL_W = 420
_PANEL_H = 320
_MARGIN = 48
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _coord(v: float) -> str:
    return f"{v:.2f}"


def _panel_svg(x_off: int, title: str, series) -> list[str]:
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    plot_w = _PANEL_W - 2 * _MARGIN
    plot_h = _PANEL_H - 2 * _MARGIN

    def px(x):
        return x_off + _MARGIN + (x - x0) / (x1 - x0) * plot_w

    def py(y):
        return _MARGIN + (1.0 - (y - y0) / (y1 - y0)) * plot_h

    parts = [
        f'<rect x="{x_off + _MARGIN}" y="{_MARGIN}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>',
        f'<text x="{x_off + _PANEL_W // 2}" y="{_MARGIN - 16}" text-anchor="middle" '
        f'font-size="14">{title}</text>',
        f'<text x="{x_off + _MARGIN - 6}" y="{_MARGIN + 4}" text-anchor="end" '
        f'font-size="10">{y1:.4g}</text>',
        f'<text x="{x_off + _MARGIN - 6}" y="{_MARGIN + plot_h + 4}" text-anchor="end" '
        f'font-size="10">{y0:.4g}</text>',
        f'<text x="{x_off + _MARGIN}" y="{_MARGIN + plot_h + 16}" text-anchor="middle" '
        f'font-size="10">{x0:.4g}</text>',
        f'<text x="{x_off + _MARGIN + plot_w}" y="{_MARGIN + plot_h + 16}" '
        f'text-anchor="middle" font-size="10">{x1:.4g}</text>',
    ]
    for idx, (label, xs, ys) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        pts = " ".join(f"{_coord(px(x))},{_coord(py(y))}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{x_off + _MARGIN + 8}" y="{_MARGIN + 16 + 14 * idx}" '
            f'font-size="11" fill="{color}">{label}</text>'
        )
    return parts


def render_two_panel_svg(path, left_title: str, left_series, right_title: str,
                         right_series) -> None:
    """Write a two-panel line plot.

    Each series is a (label, xs, ys) triple; panels scale independently.
    """
    width = 2 * _PANEL_W
    body = ['<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{_PANEL_H}" viewBox="0 0 {width} {_PANEL_H}">',
            f'<rect x="0" y="0" width="{width}" height="{_PANEL_H}" fill="#ffffff"/>']
    body.extend(_panel_svg(0, left_title, left_series))
    body.extend(_panel_svg(_PANEL_W, right_title, right_series))
    body.append("</svg>")
    Path(path).write_text("\n".join(body) + "\n", encoding="ascii")
