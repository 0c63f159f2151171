"""SVG rendering of region maps (fixed 800x800 canvas)."""
from __future__ import annotations

from fractions import Fraction

COLORS = {"BOUNDED": "#4daf4a", "UNBOUNDED": "#e41a1c", "BAND/UNKNOWN": "#bdbdbd"}
SIZE, PAD = 800, 40
SPAN = SIZE - 2 * PAD


def _coord(t, G):
    # grid point i/G sits at the centre of the i-th of G+1 cells
    if not G:
        return float(t) * SPAN
    side = SPAN / (G + 1)
    return (float(t) * G + 0.5) * side


def _x(u, G):
    return f"{PAD + _coord(u, G):.3f}"


def _y(w, G):
    return f"{SIZE - PAD - _coord(w, G):.3f}"


def render_svg(rmap):
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
    ]
    G = rmap.grid
    if G:
        side = SPAN / (G + 1)
        for (i, j), c in sorted(rmap.cells.items()):
            u, w = Fraction(i, G), Fraction(j, G)
            x = PAD + i * side
            y = SIZE - PAD - (j + 1) * side
            out.append(f'<rect class="cell" x="{x:.3f}" y="{y:.3f}" width="{side:.3f}" height="{side:.3f}" '
                       f'fill="{COLORS[c]}" fill-opacity="0.75"><title>({u}, {w}) {c}</title></rect>')
    out.append(f'<rect x="{PAD}" y="{PAD}" width="{SPAN}" height="{SPAN}" fill="none" stroke="black"/>')
    spec = rmap.spec
    if spec is not None:
        pts = " ".join(f"{_x(u, G)},{_y(v, G)}" for u, v in spec.breakpoints)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="2"/>')
        out.append(f'<line x1="{_x(spec.delta, G)}" y1="{_y(0, G)}" x2="{_x(spec.delta, G)}" y2="{_y(1, G)}" '
                   'stroke="black" stroke-dasharray="6,4"/>')
        if spec.omega is not None:
            out.append(f'<circle cx="{_x(spec.delta, G)}" cy="{_y(spec.omega, G)}" r="4" fill="black"/>')
    out.append(f'<text x="{SIZE // 2}" y="{SIZE - 8}" text-anchor="middle" font-size="16">1/q</text>')
    out.append(f'<text x="12" y="{SIZE // 2}" text-anchor="middle" font-size="16">1/r</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
