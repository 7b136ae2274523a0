"""SVG overlay of partitions and graphs on the square-tiled layout.

Squares are laid out left to right; chart ``(x, y)`` in square ``k`` is
drawn at screen ``(k - 1 + x, 1 - y)`` times ``SCALE``.  Stable arcs are
solid, unstable arcs dashed, singularities are circles sized by prongs.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .flatsurf import LeafArc
from .pamap import PAMap

SCALE = 200
MARGIN = 10
PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"]


def _xy(sq: int, x, y) -> tuple[float, float]:
    return (MARGIN + (sq - 1 + float(x)) * SCALE, MARGIN + (1 - float(y)) * SCALE)


def _path(arc: LeafArc) -> str:
    parts = []
    for sq, a, b in arc.segments():
        (x0, y0), (x1, y1) = _xy(sq, *a), _xy(sq, *b)
        parts.append(f"M{x0:.3f},{y0:.3f}L{x1:.3f},{y1:.3f}")
    return "".join(parts)


def _style(tag: str, colour: str = "#222") -> str:
    dash = ' stroke-dasharray="6,4"' if tag == "u" else ""
    return f'fill="none" stroke="{colour}" stroke-width="2"{dash}'


class SvgCanvas:
    def __init__(self, m: PAMap, title: str = ""):
        self.m = m
        self.items: list[str] = []
        self.title = title

    def squares(self):
        n = self.m.surface.n_squares
        self.items.append('<g id="squares">')
        for sq in range(1, n + 1):
            x, y = _xy(sq, 0, 1)
            self.items.append(
                f'<rect x="{x:.3f}" y="{y:.3f}" width="{SCALE}" height="{SCALE}" fill="#fafafa" stroke="#bbb"/>'
                f'<text x="{x + 4:.3f}" y="{y + 14:.3f}" font-size="12" fill="#888">{sq}</text>'
            )
        self.items.append("</g>")

    def arcs(self, group: str, arcs, colour: str = "#222"):
        self.items.append(f'<g id="{escape(group)}">')
        for arc in arcs:
            self.items.append(f'<path d="{_path(arc)}" {_style(arc.tag, colour)}/>')
        self.items.append("</g>")

    def rectangle(self, idx: int, geo):
        colour = PALETTE[idx % len(PALETTE)]
        self.items.append(f'<g id="rect-{idx}" class="rectangle">')
        for side in geo.horizontal + geo.vertical:
            self.items.append(f'<path d="{_path(side)}" {_style(side.tag, colour)}/>')
        c = geo.rect.center
        x, y = _xy(*c)
        self.items.append(f'<text x="{x:.3f}" y="{y:.3f}" font-size="11" text-anchor="middle" fill="{colour}">{idx + 1}</text>')
        self.items.append("</g>")

    def singularities(self):
        self.items.append('<g id="singularities">')
        for s in self.m.singularities:
            r = 2 + s.prongs
            for sq, x, y in self.m.surface.charts(s.point.square, s.point.x, s.point.y):
                cx, cy = _xy(sq, x, y)
                self.items.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{r}" fill="#000"/>')
        self.items.append("</g>")

    def to_svg(self) -> str:
        n = self.m.surface.n_squares
        w, h = n * SCALE + 2 * MARGIN, SCALE + 2 * MARGIN
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">'
        )
        title = f"<title>{escape(self.title)}</title>" if self.title else ""
        return "\n".join([head, title, *self.items, "</svg>"]) + "\n"


def render_partition(p, title: str = "") -> str:
    canvas = SvgCanvas(p.map, title)
    canvas.squares()
    for i, geo in enumerate(p.geometry):
        canvas.rectangle(i, geo)
    canvas.singularities()
    return canvas.to_svg()


def render_graphs(m: PAMap, graphs: dict, title: str = "") -> str:
    """``graphs`` maps a group name to an :class:`AdaptedGraph`."""
    canvas = SvgCanvas(m, title)
    canvas.squares()
    colours = ["#1f5fa8", "#c0392b", "#2e8b57"]
    for k, (name, g) in enumerate(graphs.items()):
        canvas.arcs(name, g.arcs(m).values(), colours[k % len(colours)])
    canvas.singularities()
    return canvas.to_svg()
