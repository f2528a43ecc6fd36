"""Convergence charts from trace CSVs, written as self-contained SVG.

The chart is plain text assembled from rect, line, text and polyline
elements; no drawing library and no external assets.  Exactly one
polyline is emitted per input CSV (legend swatches use line elements so
polylines stay countable), with x = model_evals and y = test_metric.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import List, Sequence, Tuple

from .runner import parse_trace_csv

WIDTH = 720.0
HEIGHT = 480.0
MARGIN_L = 70.0
MARGIN_R = 190.0
MARGIN_T = 20.0
MARGIN_B = 50.0

PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
    "#393b79",
    "#ad494a",
)


def _num(x: float) -> str:
    return f"{x:.6g}"


def _load_run(path: Path, log_x: bool) -> Tuple[str, List[Tuple[float, float]]]:
    """One CSV -> (legend label base, plottable points)."""
    rows = parse_trace_csv(path)
    if not rows:
        raise ValueError(f"{path}: trace contains no rows")
    evals = [r.model_evals for r in rows]
    if any(b < a for a, b in zip(evals, evals[1:])):
        raise ValueError(f"{path}: model_evals must be non-decreasing")
    first = rows[0]
    label = f"{first.method} lr={first.lr:g}"
    if first.alpha is not None:
        label += f" alpha={first.alpha:g}"
    points = [
        (float(r.model_evals), float(r.test_metric))
        for r in rows
        if math.isfinite(r.test_metric) and (not log_x or r.model_evals > 0)
    ]
    return label, points


def plot_traces(csv_paths: Sequence, out_path, log_x: bool = False) -> Path:
    """Render the given trace CSVs into one SVG line chart.

    Rows with a non-finite metric (and, on a log axis, zero model_evals)
    are dropped from the curve; the run keeps its polyline and legend
    entry regardless.  Raises on empty input, an empty CSV, or a CSV
    whose model_evals column decreases.
    """
    paths = [Path(p) for p in csv_paths]
    if not paths:
        raise ValueError("at least one trace CSV is required")
    labels = []
    runs = []
    for p in paths:
        label, points = _load_run(p, log_x)
        labels.append(label)
        runs.append(points)
    # seeds disambiguate runs that share (method, lr, alpha)
    seen = {}
    for i, (p, label) in enumerate(zip(paths, labels)):
        seen.setdefault(label, []).append(i)
    for label, idxs in seen.items():
        if len(idxs) > 1:
            for k, i in enumerate(idxs, start=1):
                labels[i] = f"{label} [{k}]"

    flat = [pt for run in runs for pt in run]
    if flat:
        xs = [math.log10(x) if log_x else x for x, _ in flat]
        ys = [y for _, y in flat]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 - x0 <= 0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 <= 0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def tx(x: float) -> float:
        if log_x:
            x = math.log10(x)
        return MARGIN_L + (x - x0) / (x1 - x0) * plot_w

    def ty(y: float) -> float:
        return MARGIN_T + (y1 - y) / (y1 - y0) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(WIDTH)}"'
        f' height="{_num(HEIGHT)}" viewBox="0 0 {_num(WIDTH)} {_num(HEIGHT)}">',
        f'<rect x="0" y="0" width="{_num(WIDTH)}" height="{_num(HEIGHT)}" fill="white"/>',
        '<g class="axes" stroke="black" stroke-width="1">',
        f'<line x1="{_num(MARGIN_L)}" y1="{_num(HEIGHT - MARGIN_B)}"'
        f' x2="{_num(WIDTH - MARGIN_R)}" y2="{_num(HEIGHT - MARGIN_B)}"/>',
        f'<line x1="{_num(MARGIN_L)}" y1="{_num(MARGIN_T)}"'
        f' x2="{_num(MARGIN_L)}" y2="{_num(HEIGHT - MARGIN_B)}"/>',
        "</g>",
        '<g class="ticks" font-family="sans-serif" font-size="11" fill="black">',
    ]
    for i in range(5):
        fx = x0 + i * (x1 - x0) / 4
        vx = 10.0**fx if log_x else fx
        px = MARGIN_L + i * plot_w / 4
        parts.append(
            f'<line x1="{_num(px)}" y1="{_num(HEIGHT - MARGIN_B)}"'
            f' x2="{_num(px)}" y2="{_num(HEIGHT - MARGIN_B + 5)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_num(px)}" y="{_num(HEIGHT - MARGIN_B + 18)}"'
            f' text-anchor="middle">{_num(vx)}</text>'
        )
        fy = y0 + i * (y1 - y0) / 4
        py = HEIGHT - MARGIN_B - i * plot_h / 4
        parts.append(
            f'<line x1="{_num(MARGIN_L - 5)}" y1="{_num(py)}"'
            f' x2="{_num(MARGIN_L)}" y2="{_num(py)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_num(MARGIN_L - 8)}" y="{_num(py + 4)}"'
            f' text-anchor="end">{_num(fy)}</text>'
        )
    x_title = "model evaluations (log)" if log_x else "model evaluations"
    parts.append(
        f'<text x="{_num(MARGIN_L + plot_w / 2)}" y="{_num(HEIGHT - 10)}"'
        f' text-anchor="middle">{x_title}</text>'
    )
    parts.append(
        f'<text x="16" y="{_num(MARGIN_T + plot_h / 2)}" text-anchor="middle"'
        f' transform="rotate(-90 16 {_num(MARGIN_T + plot_h / 2)})">test metric</text>'
    )
    parts.append("</g>")

    for i, points in enumerate(runs):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_num(tx(x))},{_num(ty(y))}" for x, y in points)
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5"'
            f' points="{coords}"/>'
        )

    parts.append('<g class="legend" font-family="sans-serif" font-size="11" fill="black">')
    lx = WIDTH - MARGIN_R + 12
    for i, label in enumerate(labels):
        color = PALETTE[i % len(PALETTE)]
        ly = MARGIN_T + 14 + i * 16
        parts.append(
            f'<line x1="{_num(lx)}" y1="{_num(ly - 4)}" x2="{_num(lx + 18)}"'
            f' y2="{_num(ly - 4)}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{_num(lx + 24)}" y="{_num(ly)}">{label}</text>')
    parts.append("</g>")
    parts.append("</svg>")

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(parts) + "\n")
    return out_path
