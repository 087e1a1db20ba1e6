"""Plain-text SVG figures for sweep results: iterations-to-converge vs theta.

One figure per (model, cond_kappa, p_fail) group, log-log axes, one polyline
per method.  Cells whose median run did not converge are drawn at the
iteration cap with a cross marker.  No external renderer is involved; output
is SVG 1.1 text.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bench import CSV_HEADER, parse_csv_row
from .models import ConfigurationError

_WIDTH, _HEIGHT = 640, 420
_ML, _MR, _MT, _MB = 70, 160, 30, 50

_PALETTE = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
    "#bcbd22",
    "#e377c2",
]


def read_rows(results_csv: str):
    with open(results_csv, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != CSV_HEADER:
            raise ConfigurationError(f"CSV header does not match the sweep schema: {reader.fieldnames}")
        return [parse_csv_row(r) for r in reader]


def _iteration_cap(results_csv: str, rows) -> float:
    manifest = Path(results_csv).with_name("manifest.json")
    if manifest.exists():
        try:
            with open(manifest, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            caps = data.get("iterations_per_run", [])
            if caps:
                return float(max(caps))
        except (json.JSONDecodeError, OSError):
            pass
    iters = [r.iters_to_converge for r in rows if r.iters_to_converge is not None]
    return 2.0 * max(iters) if iters else 1000.0


def _log_ticks(lo: float, hi: float) -> list[float]:
    first = math.ceil(math.log10(lo) - 1e-9)
    last = math.floor(math.log10(hi) + 1e-9)
    return [10.0**e for e in range(first, last + 1)]


def emit_plots(results_csv: str, output_dir: str) -> list[str]:
    """Write one SVG per problem group; returns the written paths."""
    rows = read_rows(results_csv)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not rows:
        print("warning: results CSV has no data rows, nothing to plot", file=sys.stderr)
        return []

    cap = _iteration_cap(results_csv, rows)
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r.model, r.cond_kappa, r.p_fail), []).append(r)

    paths = []
    for (model, kappa, p_fail), grp in sorted(groups.items()):
        name = f"{model}_k{kappa:g}_p{p_fail:g}.svg"
        path = out_dir / name
        path.write_text(_figure_svg(model, kappa, p_fail, grp, cap), encoding="utf-8")
        paths.append(str(path))
    return paths


def _figure_svg(model: str, kappa: float, p_fail: float, rows, cap: float) -> str:
    thetas = sorted({r.theta for r in rows})
    methods = sorted({r.method for r in rows})
    x_lo, x_hi = min(thetas), max(thetas)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo / 2.0, x_hi * 2.0

    # median iterations per (method, theta); non-converged cells count as cap
    series: dict[str, list[tuple[float, float]]] = {}
    for meth in methods:
        pts = []
        for th in thetas:
            vals = [
                float(r.iters_to_converge) if r.converged else cap
                for r in rows
                if r.method == meth and r.theta == th
            ]
            if vals:
                pts.append((th, float(np.median(vals))))
        series[meth] = pts

    y_vals = [v for pts in series.values() for _, v in pts]
    y_lo = max(1.0, min(y_vals) / 2.0)
    y_hi = max(cap, max(y_vals)) * 1.2

    px = _WIDTH - _ML - _MR
    py = _HEIGHT - _MT - _MB

    def xm(t: float) -> float:
        return _ML + px * (math.log10(t) - math.log10(x_lo)) / (
            math.log10(x_hi) - math.log10(x_lo)
        )

    def ym(v: float) -> float:
        return _MT + py * (1.0 - (math.log10(v) - math.log10(y_lo)) / (math.log10(y_hi) - math.log10(y_lo)))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="monospace" font-size="11">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_ML}" y="18">{model}  kappa={kappa:g}  p_fail={p_fail:g}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{px}" height="{py}" fill="none" stroke="black"/>',
    ]
    for t in _log_ticks(x_lo, x_hi):
        gx = xm(t)
        parts.append(
            f'<line x1="{gx:.1f}" y1="{_MT}" x2="{gx:.1f}" y2="{_MT + py}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{gx:.1f}" y="{_MT + py + 16}" text-anchor="middle">1e{int(round(math.log10(t)))}</text>'
        )
    for v in _log_ticks(y_lo, y_hi):
        gy = ym(v)
        parts.append(
            f'<line x1="{_ML}" y1="{gy:.1f}" x2="{_ML + px}" y2="{gy:.1f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{_ML - 6}" y="{gy + 4:.1f}" text-anchor="end">1e{int(round(math.log10(v)))}</text>'
        )
    parts.append(
        f'<text x="{_ML + px / 2:.1f}" y="{_HEIGHT - 10}" text-anchor="middle">theta</text>'
    )
    parts.append(
        f'<text x="16" y="{_MT + py / 2:.1f}" transform="rotate(-90 16 {_MT + py / 2:.1f})" '
        f'text-anchor="middle">iterations</text>'
    )

    cap_y = ym(cap)
    parts.append(
        f'<line x1="{_ML}" y1="{cap_y:.1f}" x2="{_ML + px}" y2="{cap_y:.1f}" '
        f'stroke="#888888" stroke-dasharray="4 3"/>'
    )

    for idx, meth in enumerate(methods):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = series[meth]
        if len(pts) > 1:
            coords = " ".join(f"{xm(t):.1f},{ym(v):.1f}" for t, v in pts)
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        for t, v in pts:
            gx, gy = xm(t), ym(v)
            if v >= cap:
                parts.append(
                    f'<path d="M {gx - 3:.1f} {gy - 3:.1f} L {gx + 3:.1f} {gy + 3:.1f} '
                    f'M {gx - 3:.1f} {gy + 3:.1f} L {gx + 3:.1f} {gy - 3:.1f}" '
                    f'stroke="{color}" stroke-width="1.5" fill="none" class="capped"/>'
                )
            else:
                parts.append(f'<circle cx="{gx:.1f}" cy="{gy:.1f}" r="3" fill="{color}"/>')
        ly = _MT + 14 + 16 * idx
        lx = _ML + px + 12
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{lx + 28}" y="{ly}">{meth}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
