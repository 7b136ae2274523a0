"""Square-tiled translation surfaces with exact geodesic tracing.

Points live in per-square charts ``[0,1]^2``; crossing an edge applies the
gluing permutation and resets one coordinate.  Rays stop on registered
stop points (cone points always, plus whatever the caller marks).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .qfield import QuadNum

__all__ = [
    "SurfaceError",
    "FlatSurface",
    "ConePoint",
    "SurfacePoint",
    "Chunk",
    "LeafArc",
    "build_surface",
    "trace_ray",
    "arc_intersections",
    "point_on_arc",
    "collinear_overlap",
    "cross",
]

# corner -> quadrant of directions entering the square from that corner
CORNER_QUADRANT = {(0, 0): (1, 1), (1, 0): (-1, 1), (1, 1): (-1, -1), (0, 1): (1, -1)}
QUADRANTS_CCW = [(1, 1), (-1, 1), (-1, -1), (1, -1)]


class SurfaceError(ValueError):
    """Malformed surface data or an impossible geometric request."""


def cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def _sgn(v) -> int:
    if isinstance(v, QuadNum):
        return v.sign()
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class SurfacePoint:
    """A point in canonical chart form (lowest square, then lex-min coordinates)."""

    square: int
    x: QuadNum
    y: QuadNum

    def __str__(self):
        return f"({self.square}, {self.x}, {self.y})"

    def to_json(self):
        return [self.square, str(self.x), str(self.y)]


@dataclass(frozen=True)
class ConePoint:
    id: int
    corners: tuple  # ((square, cx, cy), ...) in counter-clockwise order
    marked: bool = False

    @property
    def cone_multiple(self) -> int:
        """Cone angle divided by 2*pi."""
        return len(self.corners) // 4

    @property
    def prongs(self) -> int:
        return len(self.corners) // 2


class FlatSurface:
    """Origami given by right/top gluing permutations on squares ``1..n``."""

    def __init__(self, right: Sequence[int], top: Sequence[int]):
        n = len(right)
        if n == 0 or len(top) != n:
            raise SurfaceError("right and top must be permutations of the same size >= 1")
        for name, perm in (("right", right), ("top", top)):
            if sorted(perm) != list(range(1, n + 1)):
                raise SurfaceError(f"{name} is not a permutation of 1..{n}: {list(perm)}")
        self.n_squares = n
        self.right = (0, *right)
        self.top = (0, *top)
        left = [0] * (n + 1)
        bottom = [0] * (n + 1)
        for i in range(1, n + 1):
            left[self.right[i]] = i
            bottom[self.top[i]] = i
        self.left = tuple(left)
        self.bottom = tuple(bottom)
        self._check_connected()
        self._vertices = self._walk_vertices()
        self._corner_vertex = {c: v.id for v in self._vertices for c in v.corners}

    # -- combinatorics ----------------------------------------------------
    def _check_connected(self):
        seen = {1}
        stack = [1]
        while stack:
            s = stack.pop()
            for t in (self.right[s], self.left[s], self.top[s], self.bottom[s]):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        if len(seen) != self.n_squares:
            raise SurfaceError("gluing permutations do not act transitively: surface is disconnected")

    def _next_ccw(self, corner):
        s, cx, cy = corner
        if (cx, cy) == (0, 0):
            return (self.left[s], 1, 0)
        if (cx, cy) == (1, 0):
            return (self.bottom[s], 1, 1)
        if (cx, cy) == (1, 1):
            return (self.right[s], 0, 1)
        return (self.top[s], 0, 0)

    def _walk_vertices(self):
        seen = set()
        vertices = []
        for s in range(1, self.n_squares + 1):
            for c in ((0, 0), (1, 0), (1, 1), (0, 1)):
                start = (s, *c)
                if start in seen:
                    continue
                cycle = [start]
                seen.add(start)
                cur = self._next_ccw(start)
                while cur != start:
                    cycle.append(cur)
                    seen.add(cur)
                    cur = self._next_ccw(cur)
                vertices.append(ConePoint(len(vertices), tuple(cycle)))
        return vertices

    @property
    def vertices(self) -> list[ConePoint]:
        return list(self._vertices)

    @property
    def cone_points(self) -> list[ConePoint]:
        return [v for v in self._vertices if len(v.corners) > 4]

    @property
    def euler_characteristic(self) -> int:
        return len(self._vertices) - self.n_squares

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    def vertex_of(self, square: int, cx: int, cy: int) -> ConePoint:
        return self._vertices[self._corner_vertex[(square, cx, cy)]]

    # -- charts -----------------------------------------------------------
    def charts(self, sq: int, x: QuadNum, y: QuadNum) -> list[tuple]:
        """All chart representations ``(square, x, y)`` of a point."""
        zero = x - x
        one = zero + 1
        on_x = x == 0 or x == 1
        on_y = y == 0 or y == 1
        if not on_x and not on_y:
            return [(sq, x, y)]
        if on_x and on_y:
            v = self.vertex_of(sq, int(x == 1), int(y == 1))
            return [(s, one if cx else zero, one if cy else zero) for s, cx, cy in v.corners]
        if on_x:
            if x == 0:
                return [(sq, x, y), (self.left[sq], one, y)]
            return [(sq, x, y), (self.right[sq], zero, y)]
        if y == 0:
            return [(sq, x, y), (self.bottom[sq], x, one)]
        return [(sq, x, y), (self.top[sq], x, zero)]

    def point(self, sq: int, x, y) -> SurfacePoint:
        """Canonical point; coordinates must already lie in ``[0,1]``."""
        if x < 0 or x > 1 or y < 0 or y > 1:
            raise SurfaceError(f"coordinates out of the unit square: ({x}, {y})")
        best = min(self.charts(sq, x, y), key=lambda c: (c[0], c[1], c[2]))
        return SurfacePoint(*best)

    def is_vertex(self, sq, x, y) -> bool:
        return (x == 0 or x == 1) and (y == 0 or y == 1)

    def is_cone(self, sq, x, y) -> bool:
        return self.is_vertex(sq, x, y) and len(self.vertex_of(sq, int(x == 1), int(y == 1)).corners) > 4

    @staticmethod
    def allows(chart, d) -> bool:
        """Does moving from ``chart`` in direction ``d`` enter the square?"""
        _, x, y = chart
        sx, sy = _sgn(d[0]), _sgn(d[1])
        if sx > 0 and x == 1 or sx < 0 and x == 0:
            return False
        if sy > 0 and y == 1 or sy < 0 and y == 0:
            return False
        return True

    def chart_for(self, sq, x, y, d) -> tuple:
        """The unique chart leaving a regular point in direction ``d``."""
        found = [c for c in self.charts(sq, x, y) if self.allows(c, d)]
        if len(found) > 1 and (_sgn(d[0]) == 0 or _sgn(d[1]) == 0) and not self.is_cone(sq, x, y):
            # running along an edge: every chart describes the same segment
            return min(found, key=lambda c: (c[0], c[1], c[2]))
        if len(found) != 1:
            raise SurfaceError(f"direction is ambiguous or blocked at ({sq}, {x}, {y}): {len(found)} charts")
        return found[0]

    def sectors(self, sq, x, y) -> list[tuple]:
        """Local sectors ``(chart, quadrant)`` around a point, counter-clockwise."""
        if self.is_vertex(sq, x, y):
            v = self.vertex_of(sq, int(x == 1), int(y == 1))
            zero = x - x
            one = zero + 1
            start = min(range(len(v.corners)), key=lambda i: v.corners[i])
            out = []
            for i in range(len(v.corners)):
                s, cx, cy = v.corners[(start + i) % len(v.corners)]
                out.append(((s, one if cx else zero, one if cy else zero), CORNER_QUADRANT[(cx, cy)]))
            return out
        out = []
        for quad in QUADRANTS_CCW:
            chart = next(c for c in self.charts(sq, x, y) if self.allows(c, quad))
            out.append((chart, quad))
        return out

    def area(self) -> int:
        return self.n_squares

    def to_json(self) -> dict:
        return {"squares": self.n_squares, "right": list(self.right[1:]), "top": list(self.top[1:])}

    def __eq__(self, other):
        return isinstance(other, FlatSurface) and self.right == other.right and self.top == other.top

    def __hash__(self):
        return hash((self.right, self.top))


def build_surface(right: Sequence[int], top: Sequence[int]) -> FlatSurface:
    return FlatSurface(right, top)


# -- tracing ---------------------------------------------------------------


@dataclass(frozen=True)
class Chunk:
    """Straight piece of an arc inside one square.

    The point at arc parameter ``t`` (``t0 <= t <= t1``) has chart
    coordinates ``origin + t * direction``.
    """

    square: int
    ox: QuadNum
    oy: QuadNum
    t0: QuadNum
    t1: QuadNum

    def at(self, t, d):
        return (self.ox + t * d[0], self.oy + t * d[1])


class StopIndex:
    """Points where rays must stop, indexed by square."""

    def __init__(self, surface: FlatSurface, points: Sequence[tuple] = (), include_cones: bool = True):
        self.by_square: dict[int, list] = {}
        for label, (sq, x, y) in points:
            for c in surface.charts(sq, x, y):
                self.by_square.setdefault(c[0], []).append((c[1], c[2], label))
        for v in surface.cone_points if include_cones else ():
            for s, cx, cy in v.corners:
                self.by_square.setdefault(s, []).append((cx, cy, ("cone", v.id)))


def iter_chunks(surface: FlatSurface, chart: tuple, d, stops: StopIndex | None = None) -> Iterator[tuple]:
    """Yield ``(Chunk, stop_label)`` along the ray from ``chart`` in direction ``d``.

    ``stop_label`` is ``None`` except on the final chunk when the ray runs
    into a stop point.  Parameter ``t`` counts units of ``d``.
    """
    dx, dy = d
    sx, sy = _sgn(dx), _sgn(dy)
    if sx == 0 and sy == 0:
        raise SurfaceError("zero direction")
    if not surface.allows(chart, d):
        raise SurfaceError(f"chart {chart} does not allow direction {d}")
    inv_dx = 1 / dx if sx else None
    inv_dy = 1 / dy if sy else None
    sq, x, y = chart
    t = x - x
    while True:
        tx = ((1 - x) if sx > 0 else -x) * inv_dx if sx else None
        ty = ((1 - y) if sy > 0 else -y) * inv_dy if sy else None
        if tx is None:
            texit = ty
        elif ty is None:
            texit = tx
        else:
            texit = tx if tx <= ty else ty
        ox, oy = x - t * dx, y - t * dy
        hit = None
        if stops is not None:
            for px, py, label in stops.by_square.get(sq, ()):
                tau = (px - x) * inv_dx if sx else (py - y) * inv_dy
                if tau.sign() <= 0 or tau > texit:
                    continue
                if sx and sy and y + tau * dy != py:
                    continue
                if not sx and x != px or not sy and y != py:
                    continue
                if hit is None or tau < hit[0]:
                    hit = (tau, label)
        if hit is not None:
            yield Chunk(sq, ox, oy, t, t + hit[0]), hit[1]
            return
        t_end = t + texit
        yield Chunk(sq, ox, oy, t, t_end), None
        hit_x = tx is not None and tx == texit
        hit_y = ty is not None and ty == texit
        nx = (x - x + (1 if sx > 0 else 0)) if hit_x else x + texit * dx
        ny = (y - y + (1 if sy > 0 else 0)) if hit_y else y + texit * dy
        if hit_x and hit_y and surface.is_cone(sq, nx, ny):
            raise SurfaceError("ray ran into an unregistered cone point")
        sq, x, y = surface.chart_for(sq, nx, ny, d)
        t = t_end


@dataclass
class LeafArc:
    """Straight arc through ``anchor`` in direction ``d`` over parameters ``[lo, hi]``.

    For eigen-directions normalized so that one unit of ``d`` is one unit of
    transverse measure, the parameter is the transverse measure itself.
    """

    surface: FlatSurface
    anchor: tuple
    d: tuple
    lo: QuadNum
    hi: QuadNum
    tag: str = ""
    stops: StopIndex | None = None
    chunks: list = field(default_factory=list)
    hit_singularity: bool = False
    stop_labels: tuple = (None, None)

    def __post_init__(self):
        if not self.chunks:
            self._trace()

    def _trace(self):
        chunks = []
        lo_label = hi_label = None
        if self.hi.sign() > 0:
            for ch, label in iter_chunks(self.surface, self.anchor, self.d, self.stops):
                if ch.t1 >= self.hi:
                    chunks.append(Chunk(ch.square, ch.ox, ch.oy, ch.t0, self.hi))
                    if label is not None and ch.t1 == self.hi:
                        hi_label = label
                    break
                chunks.append(ch)
                if label is not None:
                    self.hi = ch.t1
                    self.hit_singularity = True
                    hi_label = label
                    break
        if self.lo.sign() < 0:
            neg = (-self.d[0], -self.d[1])
            back = []
            for ch, label in iter_chunks(self.surface, self.anchor, neg, self.stops):
                # origin + tau*(-d) == origin + t*d with t = -tau
                ox, oy = ch.ox, ch.oy
                stop_here = label is not None
                end = ch.t1
                if end >= -self.lo:
                    end = -self.lo
                    stop_here = stop_here and ch.t1 == end
                back.append(Chunk(ch.square, ox, oy, -end, -ch.t0))
                if end == -self.lo:
                    if stop_here:
                        lo_label = label
                    break
                if label is not None:
                    self.lo = -ch.t1
                    self.hit_singularity = True
                    lo_label = label
                    break
            # origin + tau*(-d) == origin + t*d with t = -tau
            chunks = list(reversed(back)) + chunks
        self.chunks = chunks
        self.stop_labels = (lo_label, hi_label)

    @property
    def length(self):
        return self.hi - self.lo

    def point_at(self, t) -> SurfacePoint:
        for ch in self.chunks:
            if ch.t0 <= t <= ch.t1:
                x, y = ch.at(t, self.d)
                return self.surface.point(ch.square, x, y)
        raise SurfaceError(f"parameter {t} outside arc [{self.lo}, {self.hi}]")

    def chart_at(self, t) -> tuple:
        for ch in self.chunks:
            if ch.t0 <= t <= ch.t1:
                x, y = ch.at(t, self.d)
                return (ch.square, x, y)
        raise SurfaceError(f"parameter {t} outside arc [{self.lo}, {self.hi}]")

    def segments(self) -> list[tuple]:
        """``(square, start_xy, end_xy)`` per chunk, merging collinear neighbours."""
        out = []
        for ch in self.chunks:
            a, b = ch.at(ch.t0, self.d), ch.at(ch.t1, self.d)
            if out and out[-1][0] == ch.square and out[-1][2] == a:
                out[-1] = (ch.square, out[-1][1], b)
            else:
                out.append((ch.square, a, b))
        return out

    @property
    def start(self) -> SurfacePoint:
        return self.point_at(self.lo)

    @property
    def end(self) -> SurfacePoint:
        return self.point_at(self.hi)

    def to_json(self) -> dict:
        return {
            "tag": self.tag,
            "direction": [str(self.d[0]), str(self.d[1])],
            "lo": str(self.lo),
            "hi": str(self.hi),
            "chunks": [
                {
                    "square": ch.square,
                    "start": [str(v) for v in ch.at(ch.t0, self.d)],
                    "end": [str(v) for v in ch.at(ch.t1, self.d)],
                }
                for ch in self.chunks
            ],
        }


def trace_ray(surface: FlatSurface, start: tuple, direction, measure_length, tag: str = "", stops=None) -> LeafArc:
    """Trace ``measure_length`` units of ``direction`` from the chart ``start``."""
    if measure_length.sign() < 0 if isinstance(measure_length, QuadNum) else measure_length < 0:
        raise SurfaceError("negative length")
    sq, x, y = start
    if not surface.allows(start, direction):
        start = surface.chart_for(sq, x, y, direction)
    if stops is None:
        stops = StopIndex(surface)
    zero = x - x
    return LeafArc(surface, start, tuple(direction), zero, zero + measure_length, tag, stops)


# arcs are not modified after tracing, so both indexes are cached on the instance


def _chunks_by_square(arc: LeafArc) -> dict:
    """``{square: [(chunk index, chunk)]}``."""
    out = arc.__dict__.get("_by_square")
    if out is None:
        out = {}
        for j, ch in enumerate(arc.chunks):
            out.setdefault(ch.square, []).append((j, ch))
        arc.__dict__["_by_square"] = out
    return out


def _origin_cross(arc: LeafArc, d) -> list:
    cache = arc.__dict__.setdefault("_origin_cross", {})
    out = cache.get(d)
    if out is None:
        out = cache[d] = [cross((ch.ox, ch.oy), d) for ch in arc.chunks]
    return out


def _vertex_params(arc: LeafArc) -> dict:
    out = arc.__dict__.get("_vertex_params")
    if out is not None:
        return out
    out = {}
    s = arc.surface
    for ch in arc.chunks:
        for t in (ch.t0, ch.t1):
            x, y = ch.at(t, arc.d)
            if s.is_vertex(ch.square, x, y):
                ts = out.setdefault(s.point(ch.square, x, y), [])
                if t not in ts:
                    ts.append(t)
    arc.__dict__["_vertex_params"] = out
    return out


def arc_intersections(a: LeafArc, b: LeafArc) -> list[tuple]:
    """Transverse intersections ``(point, t_a, t_b)`` sorted by ``t_a``."""
    det = cross(a.d, b.d)
    if det == 0:
        raise SurfaceError("arc_intersections needs transverse arcs")
    inv = 1 / det
    b_index = _chunks_by_square(b)
    a_bd, a_ad = _origin_cross(a, b.d), _origin_cross(a, a.d)
    b_bd, b_ad = _origin_cross(b, b.d), _origin_cross(b, a.d)
    seen = {}
    for i, ca in enumerate(a.chunks):
        for j, cb in b_index.get(ca.square, ()):
            # cross(cb.origin - ca.origin, d) is a difference of cached terms
            ta = (b_bd[j] - a_bd[i]) * inv
            if ta < ca.t0 or ta > ca.t1:
                continue
            tb = (b_ad[j] - a_ad[i]) * inv
            if tb < cb.t0 or tb > cb.t1:
                continue
            key = (ta, tb)
            if key not in seen:
                x, y = ca.at(ta, a.d)
                seen[key] = (a.surface.point(ca.square, x, y), ta, tb)
    # arcs crossing at a vertex may sit in disjoint squares around it
    b_vertices = _vertex_params(b)
    for p, ta in _vertex_params(a).items():
        for tb in b_vertices.get(p, ()):
            for t in ta:
                seen.setdefault((t, tb), (p, t, tb))
    return sorted(seen.values(), key=lambda item: (item[1], item[2]))


def point_on_arc(p: SurfacePoint, arc: LeafArc):
    """Parameter of ``p`` along ``arc`` or ``None``."""
    dx, dy = arc.d
    for sq, x, y in arc.surface.charts(p.square, p.x, p.y):
        for ch in arc.chunks:
            if ch.square != sq:
                continue
            t = (x - ch.ox) / dx if dx else (y - ch.oy) / dy
            if ch.t0 <= t <= ch.t1 and ch.ox + t * dx == x and ch.oy + t * dy == y:
                return t
    return None


def collinear_overlap(a: LeafArc, b: LeafArc):
    """Overlap of two parallel arcs as an interval of ``a``'s parameter, or ``None``."""
    if cross(a.d, b.d) != 0:
        raise SurfaceError("collinear_overlap needs parallel arcs")
    found = []
    for p in (b.start, b.end):
        t = point_on_arc(p, a)
        if t is not None:
            found.append(t)
    for t_a, p in ((a.lo, a.start), (a.hi, a.end)):
        if point_on_arc(p, b) is not None:
            found.append(t_a)
    if not found:
        return None
    return (min(found), max(found))
