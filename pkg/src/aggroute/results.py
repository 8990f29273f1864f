"""Deterministic run artifacts: per-round CSV, JSON summary, and SVG charts.

Floats are written with nine significant digits so repeated runs of the same
seeded scenario produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from aggroute.sim import RoundRecord, SimConfig, normalized_energy_series


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return format(float(value), ".9g")


def result_columns(uav_count: int, type_count: int) -> list[str]:
    columns = ["round"]
    for i in range(1, uav_count + 1):
        columns += [f"uav{i}_x_m", f"uav{i}_y_m", f"uav{i}_energy_j"]
    for i in range(1, uav_count + 1):
        for z in range(1, type_count + 1):
            columns += [f"uav{i}_sense_t{z}", f"uav{i}_agg_t{z}"]
    columns += ["executed", "optimal_j", "baseline_j", "normalized", "info"]
    return columns


def record_row(record: RoundRecord, uav_count: int, type_count: int) -> list[str]:
    row = [str(record.index)]
    for i in range(uav_count):
        row += [_fmt(record.positions[i, 0]), _fmt(record.positions[i, 1]),
                _fmt(record.energy[i])]
    for i in range(uav_count):
        for z in range(type_count):
            row += [str(int(record.sensing[i, z])),
                    str(int(record.aggregating[i, z]))]
    row += [
        record.executed,
        _fmt(record.plan.objective if record.plan is not None else None),
        _fmt(record.baseline.objective if record.baseline is not None else None),
        _fmt(record.normalized),
        _fmt(record.info_value),
    ]
    return row


def write_results(records: list[RoundRecord], out_dir: str | Path,
                  config: SimConfig) -> dict[str, Path]:
    """Write rounds.csv, summary.json, and normalized.svg; return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n, m = config.params.uav_count, config.params.type_count

    csv_path = out_dir / "rounds.csv"
    with csv_path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(result_columns(n, m))
        for record in records:
            writer.writerow(record_row(record, n, m))

    series, summary = normalized_energy_series(records)
    summary_path = out_dir / "summary.json"
    summary_doc = {
        "kind": config.kind,
        "seed": config.seed,
        "horizon": config.horizon,
        "rounds_completed": len(records),
        "normalized_energy": {
            "series": [[index, float(_fmt(value))] for index, value in series],
            **{key: (None if value is None else
                     value if key in ("rounds", "excluded") else float(_fmt(value)))
               for key, value in summary.items()},
        },
        "final_energy_j": ([float(_fmt(v)) for v in records[-1].energy]
                           if records else []),
    }
    summary_path.write_text(json.dumps(summary_doc, indent=2, sort_keys=True) + "\n")

    chart_path = out_dir / "normalized.svg"
    chart_path.write_text(emit_chart(
        {"normalized": series},
        title="Normalized energy per round",
        x_label="round", y_label="optimal / baseline"))
    return {"csv": csv_path, "summary": summary_path, "chart": chart_path}


_CHART_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                 "#8c564b", "#17becf")


def emit_chart(series_by_name: dict[str, list[tuple[float, float]]],
               title: str = "", x_label: str = "", y_label: str = "",
               width: int = 640, height: int = 400, step: bool = False) -> str:
    """Minimal line chart as standalone SVG text.

    ``series_by_name`` maps a legend label to (x, y) points; with ``step``
    the polyline holds each y value until the next x (for 0/1 role flags).
    """
    margin_left, margin_right, margin_top, margin_bottom = 60, 20, 40, 50
    plot_w = width - margin_left - margin_right
    plot_h = height - margin_top - margin_bottom

    points = [p for series in series_by_name.values() for p in series]
    if points:
        xs = [float(x) for x, _ in points]
        ys = [float(y) for _, y in points]
        x_min, x_max = min(xs), max(xs)
        y_min, y_max = min(ys), max(ys)
    else:
        x_min = y_min = 0.0
        x_max = y_max = 1.0
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0
    pad = 0.05 * (y_max - y_min)
    y_min, y_max = y_min - pad, y_max + pad

    def sx(x: float) -> float:
        return margin_left + (x - x_min) / (x_max - x_min) * plot_w

    def sy(y: float) -> float:
        return margin_top + (y_max - y) / (y_max - y_min) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin_left}" y="{margin_top}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>')
    if x_label:
        parts.append(
            f'<text x="{margin_left + plot_w / 2:.1f}" y="{height - 12}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">'
            f'{x_label}</text>')
    if y_label:
        cy = margin_top + plot_h / 2
        parts.append(
            f'<text x="16" y="{cy:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {cy:.1f})">{y_label}</text>')

    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        gx = margin_left + frac * plot_w
        gy = margin_top + frac * plot_h
        x_val = x_min + frac * (x_max - x_min)
        y_val = y_max - frac * (y_max - y_min)
        parts += [
            f'<line x1="{gx:.1f}" y1="{margin_top}" x2="{gx:.1f}" '
            f'y2="{margin_top + plot_h}" stroke="#ddd"/>',
            f'<line x1="{margin_left}" y1="{gy:.1f}" '
            f'x2="{margin_left + plot_w}" y2="{gy:.1f}" stroke="#ddd"/>',
            f'<text x="{gx:.1f}" y="{margin_top + plot_h + 16}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">'
            f'{x_val:.4g}</text>',
            f'<text x="{margin_left - 6}" y="{gy + 3:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{y_val:.4g}</text>',
        ]

    for idx, (name, series) in enumerate(series_by_name.items()):
        if not series:
            continue
        color = _CHART_COLORS[idx % len(_CHART_COLORS)]
        coords: list[str] = []
        previous_y: float | None = None
        for x, y in series:
            if step and previous_y is not None:
                coords.append(f"{sx(float(x)):.2f},{sy(previous_y):.2f}")
            coords.append(f"{sx(float(x)):.2f},{sy(float(y)):.2f}")
            previous_y = float(y)
        parts.append(
            f'<polyline points="{" ".join(coords)}" fill="none" '
            f'stroke="{color}" stroke-width="1.5"/>')
        legend_y = margin_top + 14 + 16 * idx
        parts += [
            f'<line x1="{margin_left + plot_w - 110}" y1="{legend_y - 4}" '
            f'x2="{margin_left + plot_w - 90}" y2="{legend_y - 4}" '
            f'stroke="{color}" stroke-width="2"/>',
            f'<text x="{margin_left + plot_w - 84}" y="{legend_y}" '
            f'font-family="sans-serif" font-size="11">{name}</text>',
        ]
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
