"""Report plots: a machine-readable CSV plus a dependency-free SVG chart.

The CSV is the source of truth (series, x value, metric); the SVG is a
self-contained line chart with one series per feature set, drawn with no
plotting library so installs stay light.
"""

from __future__ import annotations

import csv
import math
from typing import Optional, Sequence

from .harness import ReportRow

SERIES_COLORS = {
    "baseline": "#1f77b4",
    "smooth": "#d62728",
    "slang": "#2ca02c",
    "smooth+slang": "#ff7f0e",
}
_FALLBACK_COLORS = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

_X_AXES = ("multiplier", "radius_km", "k")
_METRICS = ("mse", "accuracy")


class PlotError(ValueError):
    """Nothing to plot or invalid axis selection."""


def _collect(
    rows: Sequence[ReportRow], x_axis: str, metric: str
) -> dict[str, list[tuple[float, float]]]:
    """Per-series sorted (x, value) points; duplicate x values are averaged."""
    acc: dict[str, dict[float, list[float]]] = {}
    for row in rows:
        if row.error is not None:
            continue
        value = getattr(row, metric)
        if not math.isfinite(value):
            continue
        x = float(getattr(row, x_axis))
        acc.setdefault(row.feature_set, {}).setdefault(x, []).append(value)
    series: dict[str, list[tuple[float, float]]] = {}
    for name, by_x in acc.items():
        series[name] = [
            (x, sum(vals) / len(vals)) for x, vals in sorted(by_x.items())
        ]
    if not series:
        raise PlotError("no successful rows to plot")
    return series


def write_plot_csv(
    rows: Sequence[ReportRow],
    path: str,
    x_axis: str = "multiplier",
    metric: str = "mse",
) -> None:
    """CSV of (feature_set, x, metric) with values at 6 decimals."""
    if x_axis not in _X_AXES:
        raise PlotError(f"x_axis must be one of {_X_AXES}")
    if metric not in _METRICS:
        raise PlotError(f"metric must be one of {_METRICS}")
    series = _collect(rows, x_axis, metric)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_set", x_axis, metric])
        for name in sorted(series):
            for x, value in series[name]:
                writer.writerow([name, f"{x:g}", f"{value:.6f}"])


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def write_plot_svg(
    rows: Sequence[ReportRow],
    path: str,
    x_axis: str = "multiplier",
    metric: str = "mse",
    title: Optional[str] = None,
) -> None:
    """Self-contained SVG line chart, one colored series per feature set."""
    if x_axis not in _X_AXES:
        raise PlotError(f"x_axis must be one of {_X_AXES}")
    if metric not in _METRICS:
        raise PlotError(f"metric must be one of {_METRICS}")
    series = _collect(rows, x_axis, metric)

    width, height = 640, 420
    left, right, top, bottom = 70, 170, 40, 50
    plot_w = width - left - right
    plot_h = height - top - bottom

    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    pad = 0.1 * (y_hi - y_lo) if y_hi > y_lo else max(0.1 * abs(y_hi), 0.5)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + plot_w / 2:.1f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">'
        f"{title or f'{metric} by {x_axis}'}</text>",
        # axes
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" '
        f'stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="black"/>',
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 12}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"{x_axis}</text>",
        f'<text x="18" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {top + plot_h / 2:.1f})">{metric}</text>',
    ]
    for tx in sorted(set(xs)):
        parts.append(
            f'<line x1="{sx(tx):.1f}" y1="{top + plot_h}" x2="{sx(tx):.1f}" '
            f'y2="{top + plot_h + 5}" stroke="black"/>'
            f'<text x="{sx(tx):.1f}" y="{top + plot_h + 20}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{tx:g}</text>"
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{left - 5}" y1="{sy(ty):.1f}" x2="{left}" '
            f'y2="{sy(ty):.1f}" stroke="black"/>'
            f'<text x="{left - 9}" y="{sy(ty) + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{ty:.3f}</text>'
        )

    fallback = iter(_FALLBACK_COLORS * 8)
    legend_y = top + 10
    for name in sorted(series):
        color = SERIES_COLORS.get(name) or next(fallback)
        pts = series[name]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        if len(pts) > 1:
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="2"/>'
            )
        for x, y in pts:
            parts.append(
                f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3.5" '
                f'fill="{color}"/>'
            )
        lx = left + plot_w + 12
        parts.append(
            f'<line x1="{lx}" y1="{legend_y}" x2="{lx + 22}" y2="{legend_y}" '
            f'stroke="{color}" stroke-width="2"/>'
            f'<text x="{lx + 28}" y="{legend_y + 4}" font-family="sans-serif" '
            f'font-size="12">{name}</text>'
        )
        legend_y += 20

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def emit_plot(
    rows: Sequence[ReportRow],
    csv_path: str,
    svg_path: str,
    x_axis: str = "multiplier",
    metric: str = "mse",
    title: Optional[str] = None,
) -> None:
    """Write both plot artifacts from a report's rows."""
    write_plot_csv(rows, csv_path, x_axis=x_axis, metric=metric)
    write_plot_svg(rows, svg_path, x_axis=x_axis, metric=metric, title=title)
