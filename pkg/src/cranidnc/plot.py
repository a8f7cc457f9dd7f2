"""Self-contained SVG line charts of sweep results."""

from __future__ import annotations

import colorsys
import zlib
from collections import defaultdict
from html import escape
from pathlib import Path

from .sweep import read_csv

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=80, right=170, top=40, bottom=70)

AXIS_LABELS = {
    "users": "Number of users",
    "rrbs": "Number of RRBs per RRH",
    "file_size": "File size (bits)",
    "p_max": "Maximum power (dBm/Hz)",
    "cell_size": "Cell radius (m)",
}


def scheduler_color(name: str) -> str:
    """Stable colour from a CRC of the name (Python's hash() is salted)."""
    h = (zlib.crc32(name.encode()) % 360) / 360.0
    r, g, b = colorsys.hls_to_rgb(h, 0.42, 0.70)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def mean_curves(rows) -> dict:
    """scheduler -> sorted [(value, mean per_user_hz)]."""
    acc = defaultdict(lambda: defaultdict(list))
    for row in rows:
        acc[row["scheduler"]][float(row["value"])].append(float(row["per_user_hz"]))
    return {
        s: [(v, sum(ys) / len(ys)) for v, ys in sorted(points.items())]
        for s, points in sorted(acc.items())
    }


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + k * step for k in range(n)]


def render_svg(curves: dict, variable: str) -> str:
    if not curves:
        raise ValueError("nothing to plot")
    xs = [x for pts in curves.values() for x, _ in pts]
    ys = [y for pts in curves.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = 0.0, max(ys) if max(ys) > 0 else 1.0
    y1 *= 1.05
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return left + (pw / 2 if x1 == x0 else (x - x0) / (x1 - x0) * pw)

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for t in _ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 20}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="#444"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    xlabel = escape(AXIS_LABELS.get(variable, variable))
    out.append(f'<text x="{left + pw / 2:.2f}" y="{HEIGHT - 20}" text-anchor="middle" font-size="14">{xlabel}</text>')
    out.append(
        f'<text x="20" y="{top + ph / 2:.2f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {top + ph / 2:.2f})">Average throughput (bits/user/Hz)</text>'
    )
    for k, (name, pts) in enumerate(curves.items()):
        color = scheduler_color(name)
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline class="curve" data-scheduler="{escape(name)}" points="{coords}" '
                   f'fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            out.append(f'<circle class="marker" cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="{color}"/>')
        ly = top + 10 + 22 * k
        lx = left + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_plot(csv_path, out_svg) -> dict:
    rows = read_csv(csv_path)
    curves = mean_curves(rows)
    Path(out_svg).write_text(render_svg(curves, rows[0]["variable"]))
    return curves
