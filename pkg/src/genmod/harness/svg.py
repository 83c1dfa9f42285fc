"""Minimal SVG scatter and range plot of reconstruction error against N."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

_COLOURS = {"genmod": "#1b6ca8", "genmod-nosparse": "#7fb3d5", "omp": "#c0392b",
            "irw-lasso": "#27ae60"}


def error_plot(records, metric: str = "eps_u", width: int = 640, height: int = 400) -> str:
    """Per-replication points plus min-max bars, log-scaled error axis."""
    points: dict = {}
    for rec in records:
        for o in rec.outcomes:
            v = getattr(o, metric)
            if o.status == "ok" and v is not None and math.isfinite(v) and v > 0:
                points.setdefault(o.method, []).append((rec.N, v))
    ns = sorted({n for pts in points.values() for n, _ in pts})
    vals = [v for pts in points.values() for _, v in pts]
    left, right, top, bottom = 70, 20, 20, 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if not vals:
        out.append('<text x="20" y="30">no finite errors</text></svg>')
        return "\n".join(out)
    lo, hi = math.log10(min(vals)), math.log10(max(vals))
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    methods = sorted(points)
    slot = (width - left - right) / max(len(ns), 1)

    def xpos(n, m):
        return left + slot * (ns.index(n) + (m + 1) / (len(methods) + 1))

    def ypos(v):
        return top + (hi - math.log10(v)) / (hi - lo) * (height - top - bottom)

    out.append(f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
               f'y2="{height - bottom}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>')
    for e in range(math.floor(lo), math.ceil(hi) + 1):
        if lo <= e <= hi:
            y = ypos(10.0**e)
            out.append(f'<text x="{left - 8}" y="{y + 4:.1f}" font-size="11" '
                       f'text-anchor="end">1e{e}</text>')
    for n in ns:
        x = left + slot * (ns.index(n) + 0.5)
        out.append(f'<text x="{x:.1f}" y="{height - bottom + 18}" font-size="11" '
                   f'text-anchor="middle">N={n}</text>')
    for m, method in enumerate(methods):
        colour = _COLOURS.get(method, "#555555")
        for n in ns:
            vs = [v for nn, v in points[method] if nn == n]
            if not vs:
                continue
            x = xpos(n, m)
            out.append(f'<line x1="{x:.1f}" y1="{ypos(max(vs)):.1f}" x2="{x:.1f}" '
                       f'y2="{ypos(min(vs)):.1f}" stroke="{colour}" stroke-width="2"/>')
            for v in vs:
                out.append(f'<circle cx="{x:.1f}" cy="{ypos(v):.1f}" r="2.5" fill="{colour}" '
                           f'fill-opacity="0.6"/>')
        ly = top + 14 * m
        out.append(f'<text x="{width - right - 110}" y="{ly + 10}" font-size="11" '
                   f'fill="{colour}">{escape(method)}</text>')
    out.append(f'<text x="14" y="{top + (height - top - bottom) / 2:.1f}" font-size="12" '
               f'transform="rotate(-90 14 {top + (height - top - bottom) / 2:.1f})">'
               f'{escape(metric)}</text>')
    out.append("</svg>")
    return "\n".join(out)
