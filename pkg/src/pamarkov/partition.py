"""Rectangles cut out by a compatible pair of graphs, and Markov validators.

A rectangle is stored by an interior chart (its centre), its width along
the horizontal direction ``X = +-dir_s`` and its height along ``Y = dir_u``;
all sides are traced from the centre, so rectangles touching cone points
or themselves need no special casing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import lcm

from .flatsurf import LeafArc, StopIndex, SurfacePoint, arc_intersections, collinear_overlap, cross
from .graphs import AdaptedGraph, GraphBundle, compatibility_coefficient, graphs_for
from .intersections import FirstIntersectionPoint
from .pamap import MapError, PAMap
from .qfield import QuadNum

__all__ = [
    "PartitionError",
    "PreconditionError",
    "Frame",
    "Rectangle",
    "RectGeometry",
    "MarkovPartition",
    "Report",
    "build_partition",
    "partition_from_rectangles",
    "validate_markov",
    "validate_adapted",
    "image_keys",
    "sweep_image",
    "Band",
]

MAX_DOUBLINGS = 24


class PartitionError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    """Horizontal ``X`` and vertical ``Y`` with ``(X, Y)`` positively oriented."""

    X: tuple
    Y: tuple

    @classmethod
    def of(cls, m: PAMap) -> "Frame":
        s = m.dir_s
        if cross(s, m.dir_u).sign() < 0:
            s = (-s[0], -s[1])
        return cls(s, m.dir_u)


def _neg(d):
    return (-d[0], -d[1])


def _cone_stops(m: PAMap) -> StopIndex:
    stops = getattr(m, "_cone_stops", None)
    if stops is None:
        stops = m._cone_stops = StopIndex(m.surface)
    return stops


def _line(m: PAMap, chart, d, length) -> LeafArc:
    """Straight arc that stops only at cone points: marked regular points may sit on it."""
    sq, x, y = chart
    if not m.surface.allows(chart, d):
        chart = m.surface.chart_for(sq, x, y, d)
    return LeafArc(m.surface, chart, d, m.num(0), m.num(length), m.tag_of(d), _cone_stops(m))


def _segment(m: PAMap, chart, d, back, fwd) -> LeafArc:
    """Arc in direction ``d`` from ``back`` before ``chart`` to ``fwd`` after it, parametrized from 0."""
    start = chart
    if back.sign() > 0:
        b = _line(m, chart, _neg(d), back)
        if b.hi != back:
            raise PartitionError("side runs into a cone point")
        start = b.chart_at(b.hi)
    return _line(m, start, d, back + fwd)


@dataclass(frozen=True)
class Rectangle:
    id: int
    center: tuple
    width: QuadNum
    height: QuadNum

    def to_json(self, geo: "RectGeometry | None" = None) -> dict:
        out = {
            "id": self.id,
            "center": [self.center[0], str(self.center[1]), str(self.center[2])],
            "width": str(self.width),
            "height": str(self.height),
            "width_float": float(self.width),
            "height_float": float(self.height),
        }
        if geo is not None:
            out["corners"] = [c.to_json() for c in geo.corners]
            out["area"] = str(self.width * self.height)
        return out


class RectGeometry:
    """Sides and corners of a rectangle, traced on demand."""

    def __init__(self, m: PAMap, frame: Frame, rect: Rectangle):
        self.m, self.frame, self.rect = m, frame, rect
        w2, h2 = rect.width / 2, rect.height / 2
        X, Y = frame.X, frame.Y
        vmid = _segment(m, rect.center, Y, h2, h2)
        hmid = _segment(m, rect.center, X, w2, w2)
        self.bottom = _segment(m, vmid.chart_at(vmid.lo), X, w2, w2)
        self.top = _segment(m, vmid.chart_at(vmid.hi), X, w2, w2)
        self.left = _segment(m, hmid.chart_at(hmid.lo), Y, h2, h2)
        self.right = _segment(m, hmid.chart_at(hmid.hi), Y, h2, h2)
        for side, length in ((self.bottom, rect.width), (self.top, rect.width), (self.left, rect.height), (self.right, rect.height)):
            if side.hi != length:
                raise PartitionError(f"a side of rectangle {rect.id} runs into a cone point")

    @cached_property
    def key(self) -> tuple:
        p = self.m.surface.point(*self.rect.center)
        return (p, self.rect.width, self.rect.height)

    @property
    def corners(self) -> list[SurfacePoint]:
        """Bottom-left, bottom-right, top-left, top-right."""
        return [self.bottom.start, self.bottom.end, self.top.start, self.top.end]

    @property
    def horizontal(self) -> list[LeafArc]:
        return [self.bottom, self.top]

    @property
    def vertical(self) -> list[LeafArc]:
        return [self.left, self.right]


@dataclass
class MarkovPartition:
    map: PAMap
    rectangles: list
    z: FirstIntersectionPoint | None = None
    n: int | None = None
    s_graph: AdaptedGraph | None = None
    u_graph: AdaptedGraph | None = None

    @cached_property
    def frame(self) -> Frame:
        return Frame.of(self.map)

    @cached_property
    def geometry(self) -> list[RectGeometry]:
        return [RectGeometry(self.map, self.frame, r) for r in self.rectangles]

    def keys(self) -> set:
        return {g.key for g in self.geometry}

    def area(self) -> QuadNum:
        total = self.map.num(0)
        for r in self.rectangles:
            total = total + r.width * r.height
        return total

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "z": None if self.z is None else self.z.to_json(),
            "frame": {"X": [str(c) for c in self.frame.X], "Y": [str(c) for c in self.frame.Y]},
            "rectangles": [r.to_json(g) for r, g in zip(self.rectangles, self.geometry)],
            "stable_boundary": None if self.s_graph is None else self.s_graph.to_json(),
            "unstable_boundary": None if self.u_graph is None else self.u_graph.to_json(),
        }


def partition_from_rectangles(m: PAMap, rects) -> MarkovPartition:
    """Wrap ``(center chart, width, height)`` triples as a partition."""
    out = []
    for i, (c, w, h) in enumerate(rects):
        out.append(Rectangle(i, c, m.num(w), m.num(h)))
    return MarkovPartition(m, out)


# -- construction --------------------------------------------------------------


def _first_return(m: PAMap, chart, d, targets: list[LeafArc]):
    """Distance along ``d`` from ``chart`` to the first target crossing, and the ray."""
    length = m.num(1)
    for _ in range(MAX_DOUBLINGS):
        ray = m.trace(chart, d, 0, length)
        best = None
        for arc in targets:
            for _, t, _ in arc_intersections(ray, arc):
                if t.sign() > 0 and (best is None or t < best):
                    best = t
        if best is not None:
            return best, ray
        if ray.hit_singularity:
            raise PartitionError("vertical flow ran into a singularity before returning to the stable graph")
        length = length * 2
    raise PartitionError("vertical flow never returned to the stable graph")


def build_partition(m: PAMap, z: FirstIntersectionPoint, n: int, bundle: GraphBundle | None = None) -> MarkovPartition:
    """Components of the complement of ``delta_s(z)`` and ``f^n(delta_u(z))``.

    Each component is the flow box above an interval of a stable arc,
    swept along ``Y`` up to the next stable arc; the intervals are cut
    where an unstable boundary arc leaves the stable arc upwards.
    """
    b = bundle or graphs_for(m, z)
    need = compatibility_coefficient(m, z, b)
    if n < need:
        raise PreconditionError(f"n={n} is below the compatibility coefficient {need}")
    frame = Frame.of(m)
    ug = b.delta_u.image(m, n)
    s_arcs = b.delta_s.arcs(m)
    u_arcs = ug.arcs(m)
    rects = []
    for sid, arc in s_arcs.items():
        L = arc.hi
        cuts = {m.num(0), L}
        for uid, uarc in u_arcs.items():
            up = uarc.d == frame.Y
            for _, t, u in arc_intersections(arc, uarc):
                if t.sign() > 0 and t < L and (u < uarc.hi if up else u.sign() > 0):
                    cuts.add(t)
        cuts = sorted(cuts)
        for t0, t1 in zip(cuts, cuts[1:]):
            mid = (t0 + t1) / 2
            h, ray = _first_return(m, arc.chart_at(mid), frame.Y, list(s_arcs.values()))
            rects.append((sid, t0, ray.chart_at(h / 2), t1 - t0, h))
    rects.sort(key=lambda r: (r[0], r[1]))
    out = [Rectangle(i, c, w, h) for i, (_, _, c, w, h) in enumerate(rects)]
    return MarkovPartition(m, out, z, n, b.delta_s, ug)


def image_keys(p: MarkovPartition, power: int) -> set:
    """Keys ``(centre, width, height)`` of ``f^power`` of every rectangle."""
    m = p.map
    ws, hs = m.scale("s", power), m.scale("u", power)
    return {(m.apply(m.surface.point(*r.center), power), r.width * ws, r.height * hs) for r in p.rectangles}


# -- sweeping ------------------------------------------------------------------


@dataclass
class Report:
    name: str
    findings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def to_json(self) -> dict:
        return {"verdict": self.name, "ok": self.ok, "findings": list(self.findings)}


@dataclass(frozen=True)
class Band:
    """Horizontal band ``[y0, y1]`` of an image rectangle lying in rectangle ``target``.

    ``x0`` is the target-rectangle coordinate of the band's left end.
    """

    y0: QuadNum
    y1: QuadNum
    target: int
    x0: QuadNum


def _corner_points(p: MarkovPartition) -> list[SurfacePoint]:
    pts = {}
    for g in p.geometry:
        for c in g.corners:
            pts[c] = None
    for s in p.map.singularities:
        pts[s.point] = None
    return list(pts)


def _down_rays(p: MarkovPartition, length) -> list[LeafArc]:
    m = p.map
    down = _neg(p.frame.Y)
    rays = []
    for v in _corner_points(p):
        sid = m.singularity_at(v)
        if sid is not None:
            rays += [m.sep_arc(s, length) for s in m.separatrices if s.base == sid and s.direction == down]
        else:
            rays.append(_line(m, (v.square, v.x, v.y), down, length))
    return rays


def sweep_image(p: MarkovPartition, power: int, rays=None) -> tuple[list, list]:
    """Cut ``f^power`` of every rectangle by the partition.

    Returns ``(bands, findings)`` where ``bands[i]`` lists the :class:`Band`
    of the image of rectangle ``i`` bottom to top (``None`` when the image
    does not split into full bands).
    """
    m = p.map
    frame = p.frame
    ws, hs = m.scale("s", power), m.scale("u", power)
    images = [
        Rectangle(r.id, _chart(m.apply(m.surface.point(*r.center), power)), r.width * ws, r.height * hs)
        for r in p.rectangles
    ]
    hmax = max(r.height for r in images)
    if rays is None:
        rays = _down_rays(p, hmax)
    horizontals = [(j, g.bottom, g.top) for j, g in enumerate(p.geometry)]
    verticals = [a for g in p.geometry for a in g.vertical]
    bands, findings = [], []
    for img in images:
        try:
            geo = RectGeometry(m, frame, img)
        except PartitionError as exc:
            findings.append(f"image of rectangle {img.id}: {exc}")
            bands.append(None)
            continue
        W, H = img.width, img.height
        xs = {m.num(0), W}
        for ray in rays:
            for _, t, x in arc_intersections(ray, geo.bottom):
                if t <= H:
                    xs.add(x)
        for v in verticals:
            for side in (geo.bottom, geo.top):
                for _, _, x in arc_intersections(v, side):
                    xs.add(x)
        xs = sorted(xs)
        strips = []
        bad = False
        for xa, xb in zip(xs, xs[1:]):
            xm = (xa + xb) / 2
            pieces, why = _cut_leaf(m, frame, geo.bottom.chart_at(xm), H, horizontals, p.rectangles)
            if why:
                findings.append(f"image of rectangle {img.id} at x={float(xm):.6g}: {why}")
                bad = True
                break
            strips.append([(y0, y1, j, x0 - (xm - xa)) for y0, y1, j, x0 in pieces])
        if bad:
            bands.append(None)
            continue
        first = strips[0]
        for k in range(1, len(strips)):
            shift = xs[k] - xs[0]
            cur = strips[k]
            if [(a, b, j) for a, b, j, _ in cur] != [(a, b, j) for a, b, j, _ in first] or any(
                c[3] != f[3] + shift for c, f in zip(cur, first)
            ):
                findings.append(f"image of rectangle {img.id} crosses an unstable side")
                bad = True
                break
        bands.append(None if bad else [Band(a, b, j, x0) for a, b, j, x0 in first])
    return bands, findings


def _chart(p: SurfacePoint) -> tuple:
    return (p.square, p.x, p.y)


def _cut_leaf(m, frame, chart, H, horizontals, rects):
    """Pieces ``(y0, y1, j, x)`` of the vertical leaf of height ``H`` from ``chart``."""
    leaf = _line(m, chart, frame.Y, H)
    if leaf.hi != H:
        return [], "vertical leaf meets a cone point"
    events = []
    for j, bottom, top in horizontals:
        for _, y, x in arc_intersections(leaf, bottom):
            events.append((y, 0, j, x))
        for _, y, x in arc_intersections(leaf, top):
            events.append((y, 1, j, x))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    pieces = []
    y = m.num(0)
    while y < H:
        starts = [e for e in events if e[0] == y and e[1] == 0]
        if len(starts) != 1:
            where = "bottom" if y.sign() == 0 else "interior"
            return [], f"{len(starts)} rectangles start at the {where} height {float(y):.6g}"
        _, _, j, x = starts[0]
        y1 = y + rects[j].height
        if y1 > H:
            return [], f"piece in rectangle {j} overruns the image top"
        inside = [e for e in events if y < e[0] < y1]
        if inside:
            return [], f"piece in rectangle {j} meets a stable side inside"
        if not any(e[0] == y1 and e[1] == 1 and e[2] == j and e[3] == x for e in events):
            return [], f"piece in rectangle {j} does not end on its top side"
        pieces.append((y, y1, j, x))
        y = y1
    return pieces, None


# -- validators ----------------------------------------------------------------


def _covered(arc: LeafArc, pieces: list[LeafArc]) -> bool:
    spans = []
    for q in pieces:
        if cross(arc.d, q.d) != 0:
            continue
        ov = collinear_overlap(arc, q)
        if ov is not None:
            spans.append(ov)
    spans.sort(key=lambda s: s[0])
    reach = arc.lo
    for a, b in spans:
        if a > reach:
            return False
        if b > reach:
            reach = b
        if reach >= arc.hi:
            return True
    return reach >= arc.hi


def _boundary_invariance(p: MarkovPartition) -> Report:
    m = p.map
    rep = Report("boundary_invariance")
    hs = [a for g in p.geometry for a in g.horizontal]
    vs = [a for g in p.geometry for a in g.vertical]
    for idx, a in enumerate(hs):
        if not _covered(m.apply_arc(a, 1), hs):
            rep.findings.append(f"f({'bottom' if idx % 2 == 0 else 'top'} of rectangle {idx // 2}) leaves the stable boundary")
    for idx, a in enumerate(vs):
        if not _covered(m.apply_arc(a, -1), vs):
            rep.findings.append(f"f^-1({'left' if idx % 2 == 0 else 'right'} of rectangle {idx // 2}) leaves the unstable boundary")
    return rep


def _cover_and_disjoint(p: MarkovPartition, rays=None) -> Report:
    m = p.map
    rep = Report("cover_disjoint")
    want = m.num(m.surface.n_squares) * m.unit_area
    if p.area() != want:
        rep.findings.append(f"rectangle areas sum to {float(p.area()):.9g}, surface has {float(want):.9g}")
    bands, findings = sweep_image(p, 0, rays)
    rep.findings += findings
    for i, bl in enumerate(bands):
        if bl is not None and (len(bl) != 1 or bl[0].target != i or bl[0].x0.sign() != 0):
            rep.findings.append(f"interior of rectangle {i} meets another rectangle")
    return rep


def validate_markov(p: MarkovPartition) -> dict:
    """Three independent verdicts: boundary invariance, subrectangles, cover."""
    try:
        p.geometry
    except PartitionError as exc:
        bad = [str(exc)]
        return {k: Report(k, bad) for k in ("boundary_invariance", "subrectangles", "cover_disjoint")}
    rays = _down_rays(p, max(r.height for r in p.rectangles) * p.map.scale("u", 1))
    a = _boundary_invariance(p)
    _, findings = sweep_image(p, 1, rays)
    b = Report("subrectangles", findings)
    c = _cover_and_disjoint(p, rays)
    return {"boundary_invariance": a, "subrectangles": b, "cover_disjoint": c}


def _arc_params(pt: SurfacePoint, arc: LeafArc) -> list:
    out = []
    s = arc.surface
    for sq, x, y in s.charts(pt.square, pt.x, pt.y):
        for ch in arc.chunks:
            if ch.square != sq:
                continue
            t = (x - ch.ox) / arc.d[0]
            if ch.t0 <= t <= ch.t1 and ch.oy + t * arc.d[1] == y and t not in out:
                out.append(t)
    return out


def _fixed_points_on(m: PAMap, arc: LeafArc, k: int) -> list[SurfacePoint]:
    """Points ``x`` of ``arc`` with ``f^k(x) == x``, by an exact affine solve."""
    img = m.apply_arc(arc, k)
    ov = collinear_overlap(arc, img)
    if ov is None:
        return []
    factor = m.scale(m.tag_of(arc.d), k)
    slope = factor if img.d == arc.d else -factor
    out = []
    for a in ov:
        for t_img in _arc_params(arc.point_at(a), img):
            # f^k(arc(t)) = img(t * factor) and arc(a) = img(t_img)
            src = t_img / factor
            if slope == 1:
                continue
            t = (a - slope * src) / (1 - slope)
            if arc.lo <= t <= arc.hi:
                x = arc.point_at(t)
                if m.apply(x, k) == x:
                    out.append(x)
    return out


def validate_adapted(p: MarkovPartition, period_cap: int | None = None) -> dict:
    """Singular corner property and absence of non-singular periodic boundary points."""
    m = p.map
    corner = Report("singular_corners")
    periodic = Report("periodic_boundary")
    try:
        geos = p.geometry
    except PartitionError as exc:
        corner.findings.append(str(exc))
        return {"singular_corners": corner, "periodic_boundary": periodic}
    for g in geos:
        for s in m.singularities:
            for name, side in (("bottom", g.bottom), ("top", g.top), ("left", g.left), ("right", g.right)):
                for t in _arc_params(s.point, side):
                    if t.sign() != 0 and t != side.hi:
                        corner.findings.append(f"singularity {s.id} lies inside the {name} side of rectangle {g.rect.id}")
    cap = period_cap
    if cap is None:
        cycles = [m.sep_cycle_length(s.id) for s in m.separatrices]
        cap = 2 * lcm(*cycles)
    seen = set()
    for g in geos:
        for side in g.horizontal + g.vertical:
            for k in range(1, cap + 1):
                for x in _fixed_points_on(m, side, k):
                    if m.singularity_at(x) is None and x not in seen:
                        seen.add(x)
                        periodic.findings.append(f"non-singular periodic point {x} (period dividing {k}) on the boundary")
    return {"singular_corners": corner, "periodic_boundary": periodic}
