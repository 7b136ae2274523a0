"""Pseudo-Anosov maps on origamis, realized as affine lifts of a linear torus map.

Every map acts in square charts by ``x -> A x`` up to translation.  The
translation part is recorded per square as the image ``W_i`` of the square's
centre; the image of any point is then found by tracing the vector
``A (P - c_i)`` from ``W_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

from .flatsurf import (
    FlatSurface,
    LeafArc,
    StopIndex,
    SurfacePoint,
    build_surface,
    cross,
    trace_ray,
)
from .qfield import QuadNum, stretch_factor

__all__ = [
    "MapError",
    "PAMap",
    "Singularity",
    "Separatrix",
    "make_torus_map",
    "make_origami_map",
    "find_origami_map",
    "apply_map",
    "apply_map_arc",
    "separatrices",
    "map_from_json",
    "UNSTABLE_EXPANDS",
]

# f stretches unstable arcs by lambda (and shrinks stable ones)
UNSTABLE_EXPANDS = True


class MapError(ValueError):
    """Invalid map data: non-hyperbolic matrix, inconsistent gluing, bad marked point."""


@dataclass(frozen=True)
class Singularity:
    id: int
    point: SurfacePoint
    prongs: int
    cone: bool
    period: int


@dataclass(frozen=True)
class Separatrix:
    id: int
    base: int
    tag: str  # "s" or "u"
    prong: int
    chart: tuple
    direction: tuple
    image: int = -1


def _mat_vec(A, v):
    return (A[0][0] * v[0] + A[0][1] * v[1], A[1][0] * v[0] + A[1][1] * v[1])


def _frac_mod1(v: Fraction) -> Fraction:
    return v - (v.numerator // v.denominator)


class PAMap:
    def __init__(self, surface: FlatSurface, matrix, seed: tuple[int, int], marked: Sequence = ()):
        A = tuple(tuple(int(v) for v in row) for row in matrix)
        if len(A) != 2 or any(len(r) != 2 for r in A):
            raise MapError("matrix must be 2x2")
        if A[0][0] * A[1][1] - A[0][1] * A[1][0] != 1:
            raise MapError(f"det {A} != 1")
        trace = A[0][0] + A[1][1]
        if abs(trace) <= 2:
            raise MapError(f"|trace| = {abs(trace)} <= 2: matrix is not hyperbolic")
        self.surface = surface
        self.matrix = A
        self.inverse_matrix = ((A[1][1], -A[0][1]), (-A[1][0], A[0][0]))
        self.matrix_trace = trace
        self.eps = 1 if trace > 0 else -1
        self.lam = stretch_factor(trace)
        self.D = self.lam.D
        self.dir_u = self._eigenvector(self.eps * self.lam)
        self.dir_s = self._eigenvector(self.eps * self.lam.inverse())
        self._build_affine(seed)
        self._build_singularities(marked)
        self.stops = StopIndex(
            surface, [(s.id, (s.point.square, s.point.x, s.point.y)) for s in self.singularities], include_cones=False
        )
        self.separatrices = self._build_separatrices()

    # -- numbers -----------------------------------------------------------
    def num(self, v) -> QuadNum:
        if isinstance(v, QuadNum):
            return v
        return QuadNum.rational(Fraction(v), self.D)

    def _eigenvector(self, mu: QuadNum) -> tuple:
        (a, b), (c, d) = self.matrix
        v = (self.num(b), mu - a) if b != 0 else (mu - d, self.num(c))
        if v[0].sign() < 0 or v[0].sign() == 0 and v[1].sign() < 0:
            v = (-v[0], -v[1])
        return v

    @property
    def directions(self) -> list[tuple]:
        u, s = self.dir_u, self.dir_s
        return [u, (-u[0], -u[1]), s, (-s[0], -s[1])]

    def tag_of(self, d) -> str:
        if cross(d, self.dir_u) == 0:
            return "u"
        if cross(d, self.dir_s) == 0:
            return "s"
        raise MapError(f"direction {d} is not an eigen-direction")

    def scale(self, tag: str, power: int) -> QuadNum:
        """Factor by which ``f^power`` multiplies the length of a ``tag`` arc."""
        k = power if (tag == "u") == UNSTABLE_EXPANDS else -power
        return self.lam ** k

    @property
    def unit_area(self) -> QuadNum:
        """Eigen-coordinate area of one unit square."""
        return abs(cross(self.dir_u, self.dir_s)).inverse()

    # -- affine data -------------------------------------------------------
    def _centre_image_coords(self):
        w = _mat_vec(self.matrix, (Fraction(1, 2), Fraction(1, 2)))
        return tuple(self.num(_frac_mod1(c)) for c in w)

    def _trace_vector(self, chart, v):
        """End chart of the straight segment ``chart + t v``, ``t`` in ``[0,1]``."""
        if v[0] == 0 and v[1] == 0:
            return chart
        arc = trace_ray(self.surface, chart, v, self.num(1), stops=StopIndex(self.surface))
        if arc.hi != 1:
            raise MapError("affine segment ran into a cone point")
        return arc.chart_at(arc.hi)

    def _build_affine(self, seed):
        s = self.surface
        n = s.n_squares
        i0, j0 = seed
        if not (1 <= i0 <= n and 1 <= j0 <= n):
            raise MapError(f"seed {seed} out of range")
        wx, wy = self._centre_image_coords()
        up_right = (self.num(1), self.num(1))
        images: dict[int, SurfacePoint] = {i0: s.point(j0, wx, wy)}
        queue = [i0]
        ex = tuple(self.num(v) for v in _mat_vec(self.matrix, (1, 0)))
        ey = tuple(self.num(v) for v in _mat_vec(self.matrix, (0, 1)))
        neg = lambda v: (-v[0], -v[1])
        while queue:
            i = queue.pop()
            w = images[i]
            for nb, vec in ((s.right[i], ex), (s.left[i], neg(ex)), (s.top[i], ey), (s.bottom[i], neg(ey))):
                img = s.point(*self._trace_vector((w.square, w.x, w.y), vec))
                if nb in images:
                    if images[nb] != img:
                        raise MapError(f"affine propagation from seed {seed} is inconsistent at square {nb}")
                else:
                    images[nb] = img
                    queue.append(nb)
        charts = {i: s.chart_for(p.square, p.x, p.y, up_right) for i, p in images.items()}
        sigma = {i: c[0] for i, c in charts.items()}
        if sorted(sigma.values()) != list(range(1, n + 1)):
            raise MapError(f"seed {seed} does not give a bijection of squares")
        self.square_image = tuple(sigma[i] for i in range(1, n + 1))
        self._centre_images = {i: charts[i] for i in range(1, n + 1)}
        self._preimage_of_square = {j: i for i, j in sigma.items()}

    # -- points ------------------------------------------------------------
    def _forward(self, chart) -> tuple:
        sq, x, y = chart
        h = Fraction(1, 2)
        v = _mat_vec(self.matrix, (x - h, y - h))
        return self._trace_vector(self._centre_images[sq], v)

    def _backward(self, chart) -> tuple:
        sq, x, y = chart
        i = self._preimage_of_square[sq]
        wsq, wx, wy = self._centre_images[i]
        v = _mat_vec(self.inverse_matrix, (x - wx, y - wy))
        h = self.num(Fraction(1, 2))
        return self._trace_vector((i, h, h), v)

    def apply(self, p: SurfacePoint, power: int = 1) -> SurfacePoint:
        s = self.surface
        chart = (p.square, p.x, p.y)
        for _ in range(abs(power)):
            if power > 0:
                chart = self._forward(chart)
            else:
                chart = self._backward(chart)
        return s.point(*chart)

    # -- singularities -----------------------------------------------------
    def _orbit(self, p: SurfacePoint, cap: int) -> list[SurfacePoint]:
        orbit = [p]
        cur = p
        for _ in range(cap):
            cur = self.apply(cur)
            if cur == p:
                return orbit
            orbit.append(cur)
        raise MapError(f"marked point {p} is not periodic (no return within {cap} steps)")

    def _build_singularities(self, marked):
        s = self.surface
        pts: list[tuple[SurfacePoint, bool]] = []
        for v in s.cone_points:
            sq, cx, cy = v.corners[0]
            pts.append((s.point(sq, self.num(cx), self.num(cy)), True))
        for m in marked:
            if len(m) == 2:
                sq, (x, y) = 1, m
            else:
                sq, x, y = m
            x, y = Fraction(x), Fraction(y)
            if not (0 <= x <= 1 and 0 <= y <= 1):
                raise MapError(f"marked point ({x}, {y}) is outside the unit square")
            p = s.point(sq, self.num(x), self.num(y))
            if any(p == q for q, _ in pts):
                continue
            den = lcm(x.denominator, y.denominator)
            for q in self._orbit(p, s.n_squares * den * den + 1):
                if not any(q == r for r, _ in pts):
                    pts.append((q, s.is_cone(q.square, q.x, q.y)))
        if not pts:
            raise MapError("no singular or marked points: mark at least one periodic point")
        key = lambda item: (item[0].square, item[0].x, item[0].y)
        pts.sort(key=key)
        sings = []
        for idx, (p, cone) in enumerate(pts):
            prongs = len(s.sectors(p.square, p.x, p.y)) // 2
            period = len(self._orbit(p, 10 * len(pts) + 10))
            sings.append(Singularity(idx, p, prongs, cone, period))
        # images of singular points must be singular
        index = {x.point: x.id for x in sings}
        self.singularity_image = []
        for x in sings:
            img = self.apply(x.point)
            if img not in index:
                raise MapError(f"image of singular point {x.point} is not singular")
            self.singularity_image.append(index[img])
        self.singularities = sings
        self._sing_index = index

    def singularity_at(self, p: SurfacePoint):
        return self._sing_index.get(p)

    # -- separatrices ------------------------------------------------------
    def _build_separatrices(self) -> list[Separatrix]:
        s = self.surface
        seps = []
        for sing in self.singularities:
            p = sing.point
            count = {"u": 0, "s": 0}
            for chart, quad in s.sectors(p.square, p.x, p.y):
                inside = [d for d in self.directions if (d[0].sign(), d[1].sign()) == quad]
                # counter-clockwise within the quadrant
                inside.sort(key=lambda d: sum(1 for e in inside if cross(e, d) > 0))
                for d in inside:
                    tag = self.tag_of(d)
                    seps.append(Separatrix(len(seps), sing.id, tag, count[tag], chart, d))
                    count[tag] += 1
            if count["u"] != sing.prongs or count["s"] != sing.prongs:
                raise MapError(f"prong count mismatch at {p}")
        self._seps_tmp = seps
        images = []
        for sep in seps:
            images.append(self._match_image(sep, seps))
        if sorted(images) != list(range(len(seps))):
            raise MapError("separatrix images are not a bijection")
        return [Separatrix(x.id, x.base, x.tag, x.prong, x.chart, x.direction, images[x.id]) for x in seps]

    def _match_image(self, sep: Separatrix, seps) -> int:
        arc = self.sep_arc(sep, self.num(1))
        t0 = arc.chunks[0].t1 / 2
        p = arc.point_at(t0)
        fp = self.apply(p)
        t1 = t0 * self.scale(sep.tag, 1)
        target = self.singularity_image[sep.base]
        d = (self.eps * sep.direction[0], self.eps * sep.direction[1])
        found = []
        for cand in seps:
            if cand.base != target or cand.direction != d:
                continue
            carc = self.sep_arc(cand, t1)
            if carc.hi == t1 and carc.end == fp:
                found.append(cand.id)
        if len(found) != 1:
            raise MapError(f"could not match the image of separatrix {sep.id} ({len(found)} candidates)")
        return found[0]

    def sep_arc(self, sep: Separatrix, length) -> LeafArc:
        zero = self.num(0)
        return LeafArc(self.surface, sep.chart, sep.direction, zero, self.num(length), sep.tag, self.stops)

    def sep_permutation(self, power: int = 1) -> list[int]:
        perm = list(range(len(self.separatrices)))
        step = [x.image for x in self.separatrices]
        if power < 0:
            inv = [0] * len(step)
            for i, j in enumerate(step):
                inv[j] = i
            step = inv
        for _ in range(abs(power)):
            perm = [step[i] for i in perm]
        return perm

    def sep_cycle_length(self, sep_id: int) -> int:
        k, cur = 1, self.separatrices[sep_id].image
        while cur != sep_id:
            cur = self.separatrices[cur].image
            k += 1
        return k

    # -- arcs --------------------------------------------------------------
    def check_direction(self, d):
        if not any(d[0] == e[0] and d[1] == e[1] for e in self.directions):
            raise MapError(f"direction {d} is not registered with this map")

    def trace(self, chart, d, lo, hi, tag: str | None = None) -> LeafArc:
        self.check_direction(d)
        sq, x, y = chart
        if not self.surface.allows(chart, d):
            chart = self.surface.chart_for(sq, x, y, d)
        return LeafArc(self.surface, chart, d, self.num(lo), self.num(hi), tag or self.tag_of(d), self.stops)

    def sep_of_anchor(self, chart, d):
        p = self.surface.point(*chart)
        sid = self.singularity_at(p)
        if sid is None:
            return None
        for sep in self.separatrices:
            if sep.base == sid and sep.direction == d and sep.chart[0] == chart[0]:
                return sep
        raise MapError("anchor chart does not match a separatrix sector")

    def apply_arc(self, arc: LeafArc, power: int = 1) -> LeafArc:
        tag = self.tag_of(arc.d)
        factor = self.scale(tag, power)
        sign = self.eps ** abs(power)
        d = (sign * arc.d[0], sign * arc.d[1])
        sep = self.sep_of_anchor(arc.anchor, arc.d)
        if sep is not None:
            img = self.separatrices[self.sep_permutation(power)[sep.id]]
            chart = img.chart
        else:
            p = self.apply(self.surface.point(*arc.anchor), power)
            chart = self.surface.chart_for(p.square, p.x, p.y, d)
        return LeafArc(self.surface, chart, d, arc.lo * factor, arc.hi * factor, tag, self.stops)

    def to_json(self) -> dict:
        return {
            "surface": self.surface.to_json(),
            "matrix": [list(r) for r in self.matrix],
            "lambda": str(self.lam),
            "dir_u": [str(c) for c in self.dir_u],
            "dir_s": [str(c) for c in self.dir_s],
            "square_image": list(self.square_image),
            "singularities": [
                {"id": x.id, "point": x.point.to_json(), "prongs": x.prongs, "cone": x.cone, "period": x.period}
                for x in self.singularities
            ],
            "separatrices": [
                {"id": x.id, "base": x.base, "tag": x.tag, "prong": x.prong, "image": x.image}
                for x in self.separatrices
            ],
        }


def make_torus_map(matrix, marked_points: Sequence) -> PAMap:
    if not marked_points:
        raise MapError("the torus needs at least one marked periodic point")
    return PAMap(build_surface([1], [1]), matrix, (1, 1), marked_points)


def make_origami_map(surface: FlatSurface, matrix, seed: tuple[int, int], marked: Sequence = ()) -> PAMap:
    if not surface.cone_points and not marked:
        # a flat torus cover: the vertices form an invariant set
        marked = [(v.corners[0][0], v.corners[0][1], v.corners[0][2]) for v in surface.vertices]
    return PAMap(surface, matrix, seed, marked)


def find_origami_map(surface: FlatSurface, matrix, marked: Sequence = ()) -> PAMap:
    """Try every seed ``(1, j)`` and return the first consistent map."""
    errors = []
    for j in range(1, surface.n_squares + 1):
        try:
            return make_origami_map(surface, matrix, (1, j), marked)
        except MapError as exc:
            if "hyperbolic" in str(exc) or "det" in str(exc):
                raise
            errors.append(str(exc))
    raise MapError("no seed gives a consistent affine map: " + "; ".join(errors))


def apply_map(m: PAMap, x: SurfacePoint, power: int) -> SurfacePoint:
    return m.apply(x, power)


def apply_map_arc(m: PAMap, arc: LeafArc, power: int) -> LeafArc:
    return m.apply_arc(arc, power)


def separatrices(m: PAMap) -> list[Separatrix]:
    return list(m.separatrices)


def _parse_rational(v) -> Fraction:
    return Fraction(v) if not isinstance(v, float) else Fraction(v).limit_denominator()


def map_from_json(obj: dict) -> PAMap:
    kind = obj.get("kind")
    matrix = obj["matrix"]
    if kind == "torus":
        marked = [tuple(_parse_rational(c) for c in m) for m in obj.get("marked", [])]
        return make_torus_map(matrix, marked)
    if kind == "origami":
        surface = build_surface(obj["right"], obj["top"])
        if obj.get("squares") not in (None, surface.n_squares):
            raise MapError("'squares' does not match the permutation size")
        marked = [tuple(_parse_rational(c) for c in m) for m in obj.get("marked", [])]
        if "seed" in obj:
            return make_origami_map(surface, matrix, tuple(obj["seed"]), marked)
        return find_origami_map(surface, matrix, marked)
    raise MapError(f"unknown map kind {kind!r}")
