"""Self-contained SVG scatter of cluster positions along F/O and F/I."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .cluster import ClusterAssignment
from .errors import IncompleteIndices
from .indicators import FoiIndices

COLORS = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
)
SHAPES = ("circle", "square", "triangle", "diamond")

PANEL = 360
MARGIN = 50
GAP = 60
LEGEND_W = 230
AXIS_MIN, AXIS_MAX = 1.0, 7.0


def _glyph(shape: str, x: float, y: float, color: str, r: float = 4.5) -> str:
    if shape == "circle":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.1f}" fill="{color}"/>'
    if shape == "square":
        return f'<rect x="{x - r:.2f}" y="{y - r:.2f}" width="{2 * r:.1f}" height="{2 * r:.1f}" fill="{color}"/>'
    if shape == "triangle":
        pts = [(x, y - r * 1.2), (x - r * 1.1, y + r * 0.8), (x + r * 1.1, y + r * 0.8)]
    else:
        pts = [(x, y - r * 1.3), (x + r * 1.1, y), (x, y + r * 1.3), (x - r * 1.1, y)]
    return f'<polygon points="{" ".join(f"{a:.2f},{b:.2f}" for a, b in pts)}" fill="{color}"/>'


def _style(cluster_pos: int) -> tuple[str, str]:
    return COLORS[cluster_pos % len(COLORS)], SHAPES[(cluster_pos // len(COLORS) + cluster_pos) % len(SHAPES)]


def render_svg(indices: FoiIndices, assignment: ClusterAssignment, names: dict[int, str] | None = None) -> str:
    names = {**assignment.names, **(names or {})}
    rows = []
    for c in assignment.membership:
        if c not in indices.countries:
            raise IncompleteIndices(f"no indices for {c!r}")
        f, o, i = indices[c]
        if any(math.isnan(v) for v in (f, o, i)):
            raise IncompleteIndices(f"{c!r} lacks one of the F, O, I values")
        rows.append((c, assignment.membership[c], f, o, i))
    clusters = sorted(assignment.clusters())
    pos = {g: n for n, g in enumerate(clusters)}

    width = 2 * PANEL + GAP + 2 * MARGIN + LEGEND_W
    height = PANEL + 2 * MARGIN + 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]

    def sx(origin, v):
        return origin + (v - AXIS_MIN) / (AXIS_MAX - AXIS_MIN) * PANEL

    def sy(v):
        return MARGIN + PANEL - (v - AXIS_MIN) / (AXIS_MAX - AXIS_MIN) * PANEL

    for panel, (ylabel, col) in enumerate((("O-index", 3), ("I-index", 4))):
        x0 = MARGIN + panel * (PANEL + GAP)
        out.append(f'<g class="panel" id="panel-F-{ylabel[0]}">')
        out.append(f'<rect x="{x0}" y="{MARGIN}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#333"/>')
        for t in range(int(AXIS_MIN), int(AXIS_MAX) + 1):
            x, y = sx(x0, t), sy(t)
            out.append(f'<line x1="{x:.2f}" y1="{MARGIN + PANEL}" x2="{x:.2f}" y2="{MARGIN + PANEL + 5}" stroke="#333"/>')
            out.append(f'<text x="{x:.2f}" y="{MARGIN + PANEL + 18}" font-size="11" text-anchor="middle">{t}</text>')
            out.append(f'<line x1="{x0 - 5}" y1="{y:.2f}" x2="{x0}" y2="{y:.2f}" stroke="#333"/>')
            out.append(f'<text x="{x0 - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{t}</text>')
        out.append(f'<text x="{x0 + PANEL / 2:.1f}" y="{MARGIN + PANEL + 36}" font-size="13" text-anchor="middle">F-index</text>')
        out.append(
            f'<text x="{x0 - 32}" y="{MARGIN + PANEL / 2:.1f}" font-size="13" text-anchor="middle" '
            f'transform="rotate(-90 {x0 - 32} {MARGIN + PANEL / 2:.1f})">{ylabel}</text>'
        )
        for country, g, f, o, i in rows:
            color, shape = _style(pos[g])
            x, y = sx(x0, f), sy((o, i)[col - 3])
            out.append(f'<g class="country">{_glyph(shape, x, y, color)}'
                       f'<text x="{x + 6:.2f}" y="{y - 5:.2f}" font-size="8" fill="#444">{escape(country)}</text></g>')
        out.append("</g>")

    lx = MARGIN + 2 * PANEL + GAP + 30
    out.append('<g class="legend">')
    out.append(f'<text x="{lx}" y="{MARGIN - 10}" font-size="13" font-weight="bold">Clusters</text>')
    for n, g in enumerate(clusters):
        color, shape = _style(n)
        y = MARGIN + 10 + n * 20
        label = names.get(g, f"Cluster {g}")
        out.append(f'<g class="legend-entry">{_glyph(shape, lx + 6, y, color)}'
                   f'<text x="{lx + 18}" y="{y + 4}" font-size="11">{g}. {escape(label)}</text></g>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_clusters_svg(indices: FoiIndices, assignment: ClusterAssignment, out, names: dict[int, str] | None = None) -> Path:
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_svg(indices, assignment, names), encoding="utf-8", newline="")
    return path
