"""Deterministic CSV and SVG emission for experiment results."""

from __future__ import annotations

import csv
from pathlib import Path

RESULT_FIELDS = ("trial", "seed", "method", "scheme", "v",
                 "sum_rate_bps", "converged_cells", "total_cells", "warnings")
SUMMARY_FIELDS = ("method", "scheme", "v", "mean_rate_bps", "stderr_bps", "n")

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")


def _fmt(value, precision: int) -> str:
    if isinstance(value, float):
        return f"{value:.{precision}g}"
    return str(value)


def write_results_csv(path, rows, precision: int = 6):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_FIELDS)
        for r in rows:
            writer.writerow([
                r.trial, r.seed, r.method, r.scheme, r.v,
                _fmt(r.sum_rate_bps, precision), r.converged_cells, r.total_cells,
                r.warnings,
            ])


def write_summary_csv(path, summary, precision: int = 6):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for s in summary:
            writer.writerow([
                s.method, s.scheme, s.v,
                _fmt(s.mean_rate_bps, precision), _fmt(s.stderr_bps, precision), s.n,
            ])


def write_svg_chart(path, summary, title: str = "Mean sum rate vs number of virtual cells"):
    """Line chart of mean rate vs v, one series per (method, scheme).

    Hand-rolled SVG so output bytes are fully deterministic.
    """
    series: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for s in summary:
        series.setdefault((s.method, s.scheme), []).append((s.v, s.mean_rate_bps))
    for pts in series.values():
        pts.sort()

    width, height = 840, 520
    ml, mr, mt, mb = 90, 250, 50, 60
    plot_w, plot_h = width - ml - mr, height - mt - mb

    xs = sorted({v for pts in series.values() for v, _ in pts})
    ys = [y for pts in series.values() for _, y in pts]
    if not xs:
        xs, ys = [0, 1], [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(v):
        return ml + plot_w * (v - x_lo) / (x_hi - x_lo)

    def py(r):
        return mt + plot_h * (1.0 - (r - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml}" y="25" font-family="sans-serif" font-size="16">{title}</text>',
        f'<line x1="{ml}" y1="{mt + plot_h}" x2="{ml + plot_w}" y2="{mt + plot_h}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + plot_h}" stroke="black"/>',
    ]
    for v in xs:
        x = px(v)
        parts.append(f'<line x1="{x:.2f}" y1="{mt + plot_h}" x2="{x:.2f}" y2="{mt + plot_h + 6}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{mt + plot_h + 22}" font-family="sans-serif" '
                     f'font-size="12" text-anchor="middle">{v}</text>')
    for i in range(5):
        frac = i / 4
        yval = y_lo + frac * (y_hi - y_lo)
        y = py(yval)
        parts.append(f'<line x1="{ml - 6}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 10}" y="{y + 4:.2f}" font-family="sans-serif" '
                     f'font-size="12" text-anchor="end">{yval:.3g}</text>')
    parts.append(f'<text x="{ml + plot_w / 2:.0f}" y="{height - 15}" font-family="sans-serif" '
                 f'font-size="13" text-anchor="middle">number of virtual cells</text>')
    parts.append(f'<text x="20" y="{mt + plot_h / 2:.0f}" font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 20 {mt + plot_h / 2:.0f})" text-anchor="middle">mean sum rate (bit/s)</text>')

    for idx, ((method, scheme), pts) in enumerate(sorted(series.items())):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{px(v):.2f},{py(r):.2f}" for v, r in pts)
        label = f"{method} / {scheme}"
        parts.append(f'<polyline class="series" data-method="{method}" data-scheme="{scheme}" '
                     f'points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for v, r in pts:
            parts.append(f'<circle cx="{px(v):.2f}" cy="{py(r):.2f}" r="3" fill="{color}"/>')
        ly = mt + 20 * idx
        lx = ml + plot_w + 15
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 32}" y="{ly + 4}" font-family="sans-serif" font-size="12">{label}</text>')

    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
