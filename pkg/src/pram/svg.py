"""Self-contained SVG line charts for trajectory series.

No charting dependency: the output is a static SVG with axes, tick labels, a
legend, and one polyline per series.  Rendering is deterministic byte for
byte (fixed palette, fixed coordinate formatting), so charts can be compared
in tests like any other artifact.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

__all__ = ["render_line_chart", "plot_trajectory"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_WIDTH, _HEIGHT = 720, 420
_MARGIN_LEFT, _MARGIN_RIGHT, _MARGIN_TOP, _MARGIN_BOTTOM = 64, 16, 28, 44


def _nice_step(span: float, target_ticks: int = 6) -> float:
    if span <= 0:
        return 1.0
    raw = span / target_ticks
    power = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * power:
            return mult * power
    return 10.0 * power


def _ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + step * 1e-9:
        out.append(0.0 if abs(v) < step * 1e-9 else v)
        v += step
    return out


def _fmt_tick(v: float) -> str:
    return format(v, ".6g")


def _px(v: float) -> str:
    return format(v, ".2f")


def render_line_chart(
    x: Sequence[float],
    series: Sequence[tuple[str, Sequence[float]]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
) -> str:
    """Render named y-series against shared x values as an SVG document."""
    if not x:
        raise ValueError("cannot plot an empty x axis")
    for name, ys in series:
        if len(ys) != len(x):
            raise ValueError(f"series {name!r} has {len(ys)} points, x has {len(x)}")

    x_lo, x_hi = min(x), max(x)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    all_y = [v for _, ys in series for v in ys] or [0.0, 1.0]
    y_lo, y_hi = min(0.0, min(all_y)), max(all_y)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    y_hi += (y_hi - y_lo) * 0.05

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(v: float) -> float:
        return _MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v: float) -> float:
        return _MARGIN_TOP + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{_WIDTH // 2}" y="18" text-anchor="middle" font-size="14">{_escape(title)}</text>'
        )

    for v in _ticks(x_lo, x_hi):
        px = sx(v)
        out.append(
            f'<line x1="{_px(px)}" y1="{_MARGIN_TOP}" x2="{_px(px)}" y2="{_MARGIN_TOP + plot_h}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_px(px)}" y="{_MARGIN_TOP + plot_h + 16}" text-anchor="middle">{_fmt_tick(v)}</text>'
        )
    for v in _ticks(y_lo, y_hi):
        py = sy(v)
        out.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{_px(py)}" x2="{_MARGIN_LEFT + plot_w}" y2="{_px(py)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT - 6}" y="{_px(py + 4)}" text-anchor="end">{_fmt_tick(v)}</text>'
        )

    frame = (
        f'M {_MARGIN_LEFT} {_MARGIN_TOP} H {_MARGIN_LEFT + plot_w} V {_MARGIN_TOP + plot_h} '
        f'H {_MARGIN_LEFT} Z'
    )
    out.append(f'<path d="{frame}" fill="none" stroke="black" stroke-width="1"/>')

    for i, (name, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{_px(sx(xv))},{_px(sy(yv))}" for xv, yv in zip(x, ys))
        out.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )

    legend_x = _MARGIN_LEFT + 12
    legend_y = _MARGIN_TOP + 10
    for i, (name, _) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        y = legend_y + i * 16
        out.append(
            f'<line x1="{legend_x}" y1="{y}" x2="{legend_x + 18}" y2="{y}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        out.append(f'<text x="{legend_x + 24}" y="{y + 4}">{_escape(name)}</text>')

    if x_label:
        out.append(
            f'<text x="{_MARGIN_LEFT + plot_w // 2}" y="{_HEIGHT - 8}" text-anchor="middle">'
            f"{_escape(x_label)}</text>"
        )
    if y_label:
        cx, cy = 16, _MARGIN_TOP + plot_h // 2
        out.append(
            f'<text x="{cx}" y="{cy}" text-anchor="middle" transform="rotate(-90 {cx} {cy})">'
            f"{_escape(y_label)}</text>"
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def plot_trajectory(trajectory, path: str | Path | None = None, title: str = "") -> str:
    """Chart every probe column of a trajectory against the iteration index;
    optionally write the SVG to ``path``."""
    x = trajectory.column("iteration")
    series = [(name, trajectory.column(name)) for name in trajectory.probe_names]
    if not series:
        series = [("total_mass", trajectory.column("total_mass"))]
    svg = render_line_chart(x, series, title=title, x_label="iteration", y_label="proportion")
    if path is not None:
        Path(path).write_text(svg, encoding="utf-8")
    return svg
