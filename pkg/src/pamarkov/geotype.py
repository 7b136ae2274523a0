"""Geometric types of constructed partitions and the invariants built on them."""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations

import mpmath

from .graphs import compatibility_coefficient, graphs_for
from .intersections import FirstIntersectionPoint, first_intersection_points
from .pamap import PAMap
from .partition import MarkovPartition, PreconditionError, build_partition, sweep_image

__all__ = [
    "GeoTypeError",
    "GeometricType",
    "GeometricPartition",
    "geometrize",
    "extract_type",
    "canonical_type",
    "canonical_key",
    "flip_type",
    "relabel",
    "incidence_matrix",
    "perron_root",
    "compatibility_order",
    "primitive_types",
    "compare_invariants",
    "Comparison",
]


BRUTE_FORCE_LIMIT = 8


class GeoTypeError(RuntimeError):
    """Type extraction failed: the partition is not Markov."""


@dataclass(frozen=True)
class GeometricType:
    """``(n, {(h_i, v_i)}, rho, eps)`` with 1-based labels.

    ``rho`` and ``eps`` are tuples of ``((i, j), value)`` sorted by ``(i, j)``.
    """

    n: int
    pairs: tuple
    rho: tuple
    eps: tuple

    def __post_init__(self):
        hs = sum(h for h, _ in self.pairs)
        vs = sum(v for _, v in self.pairs)
        if hs != vs:
            raise GeoTypeError(f"sum of h ({hs}) differs from sum of v ({vs})")
        H = {(i, j) for i, (h, _) in enumerate(self.pairs, 1) for j in range(1, h + 1)}
        V = {(k, l) for k, (_, v) in enumerate(self.pairs, 1) for l in range(1, v + 1)}
        if {a for a, _ in self.rho} != H or {b for _, b in self.rho} != V or len(self.rho) != len(H):
            raise GeoTypeError("rho is not a bijection between the subrectangle labels")
        if {a for a, _ in self.eps} != H:
            raise GeoTypeError("eps is not defined on every horizontal subrectangle")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "pairs": [list(p) for p in self.pairs],
            "rho": [[list(a), list(b)] for a, b in self.rho],
            "eps": [[list(a), s] for a, s in self.eps],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict) -> "GeometricType":
        return cls(
            obj["n"],
            tuple(tuple(p) for p in obj["pairs"]),
            tuple(sorted((tuple(a), tuple(b)) for a, b in obj["rho"])),
            tuple(sorted((tuple(a), s) for a, s in obj["eps"])),
        )


@dataclass
class GeometricPartition:
    """A partition with one vertical direction for all rectangles: ``+dir_u`` or, flipped, ``-dir_u``."""

    partition: MarkovPartition
    flip: bool = False

    @property
    def vertical(self) -> tuple:
        Y = self.partition.frame.Y
        return (-Y[0], -Y[1]) if self.flip else Y

    @property
    def horizontal(self) -> tuple:
        X = self.partition.frame.X
        return (-X[0], -X[1]) if self.flip else X


def geometrize(p: MarkovPartition, flip: bool = False) -> GeometricPartition:
    return GeometricPartition(p, flip)


def extract_type(gp: GeometricPartition) -> GeometricType:
    """Read ``(h_i, v_i)``, ``rho`` and ``eps`` off the image bands of every rectangle."""
    p = gp.partition
    m = p.map
    bands, findings = sweep_image(p, 1)
    if findings:
        raise GeoTypeError("; ".join(findings))
    lam = m.lam
    n = len(p.rectangles)
    # horizontal subrectangles of R_i: bands of f(R_i), ordered by their source height in R_i
    horizontal = []
    for i, bl in enumerate(bands):
        H = p.rectangles[i].height * lam
        src = [(b.y0 / lam if m.eps > 0 else (H - b.y1) / lam, b) for b in bl]
        src.sort(key=lambda s: s[0], reverse=gp.flip)
        horizontal.append([b for _, b in src])
    # vertical subrectangles of R_k: every band landing in R_k, left to right
    vertical = {k: [] for k in range(n)}
    for i, hl in enumerate(horizontal):
        for j, b in enumerate(hl):
            vertical[b.target].append((b.x0, i, j))
    for k in vertical:
        vertical[k].sort(key=lambda v: v[0], reverse=gp.flip)
    where = {}
    for k, vl in vertical.items():
        for l, (_, i, j) in enumerate(vl):
            where[(i, j)] = (k + 1, l + 1)
    pairs = tuple((len(horizontal[i]), len(vertical[i])) for i in range(n))
    rho = tuple(sorted(((i + 1, j + 1), where[(i, j)]) for i in range(n) for j in range(len(horizontal[i]))))
    eps = tuple(((i + 1, j + 1), m.eps) for (i, j) in sorted((a - 1, b - 1) for (a, b), _ in rho))
    return GeometricType(n, pairs, rho, eps)


# -- canonical forms -------------------------------------------------------------


def relabel(t: GeometricType, perm) -> GeometricType:
    """Rename rectangle ``i`` to ``perm[i-1]`` (1-based)."""
    pairs = [None] * t.n
    for i, pr in enumerate(t.pairs, 1):
        pairs[perm[i - 1] - 1] = pr
    rho = tuple(sorted(((perm[i - 1], j), (perm[k - 1], l)) for (i, j), (k, l) in t.rho))
    eps = tuple(sorted(((perm[i - 1], j), s) for (i, j), s in t.eps))
    return GeometricType(t.n, tuple(pairs), rho, eps)


def flip_type(t: GeometricType) -> GeometricType:
    """Type of the same partition under the reversed vertical (and horizontal) direction."""
    h = {i: pr[0] for i, pr in enumerate(t.pairs, 1)}
    v = {k: pr[1] for k, pr in enumerate(t.pairs, 1)}
    rho = tuple(sorted(((i, h[i] + 1 - j), (k, v[k] + 1 - l)) for (i, j), (k, l) in t.rho))
    eps = tuple(sorted(((i, h[i] + 1 - j), s) for (i, j), s in t.eps))
    return GeometricType(t.n, t.pairs, rho, eps)


def _traversal_labels(t: GeometricType, start: int) -> list[int] | None:
    """Labels in order of discovery from ``start``, following images then preimages in subrectangle order."""
    fwd = {}
    for (i, j), (k, _) in t.rho:
        fwd.setdefault(i, []).append((j, k))
    back = {}
    for (i, _), (k, l) in t.rho:
        back.setdefault(k, []).append((l, i))
    order = [start]
    seen = {start}
    idx = 0
    while idx < len(order):
        i = order[idx]
        idx += 1
        for _, k in sorted(fwd.get(i, ())):
            if k not in seen:
                seen.add(k)
                order.append(k)
        for _, k in sorted(back.get(i, ())):
            if k not in seen:
                seen.add(k)
                order.append(k)
    if len(order) != t.n:
        return None
    perm = [0] * t.n
    for new, old in enumerate(order, 1):
        perm[old - 1] = new
    return perm


def _candidates(t: GeometricType):
    found = False
    for start in range(1, t.n + 1):
        perm = _traversal_labels(t, start)
        if perm is not None:
            found = True
            yield relabel(t, perm)
    if not found:
        # disconnected incidence graph: fall back to every relabeling
        if t.n > BRUTE_FORCE_LIMIT:
            raise GeoTypeError(f"disconnected type with {t.n} rectangles is too large to canonicalize")
        for perm in permutations(range(1, t.n + 1)):
            yield relabel(t, list(perm))


def canonical_type(t: GeometricType, flip_quotient: bool = False) -> GeometricType:
    """Least serialization over the relabelings induced by a traversal from each rectangle.

    A traversal labeling depends only on the type and the start, so the
    minimum is invariant under every relabeling of the input.
    """
    sources = [t, flip_type(t)] if flip_quotient else [t]
    return min((c for s in sources for c in _candidates(s)), key=lambda c: c.dumps())


def canonical_key(t: GeometricType, flip_quotient: bool = False) -> str:
    return canonical_type(t, flip_quotient).dumps()


# -- matrices --------------------------------------------------------------------


def incidence_matrix(t: GeometricType) -> list[list[int]]:
    a = [[0] * t.n for _ in range(t.n)]
    for (i, _), (k, _) in t.rho:
        a[i - 1][k - 1] += 1
    return a


def perron_root(matrix, prec: int = 256, steps: int = 4000):
    """Dominant eigenvalue of a non-negative matrix by power iteration."""
    n = len(matrix)
    with mpmath.workprec(prec):
        v = [mpmath.mpf(1)] * n
        root = mpmath.mpf(0)
        tol = mpmath.mpf(2) ** (-prec // 2)
        for _ in range(steps):
            w = [mpmath.fsum(matrix[i][j] * v[j] for j in range(n)) for i in range(n)]
            norm = max(abs(x) for x in w)
            if norm == 0:
                return mpmath.mpf(0)
            w = [x / norm for x in w]
            if abs(norm - root) < tol and max(abs(a - b) for a, b in zip(v, w)) < tol:
                return norm
            v, root = w, norm
        return root


# -- invariants ------------------------------------------------------------------


def compatibility_order(m: PAMap, points: list[FirstIntersectionPoint] | None = None) -> int:
    """``n(f)``: the largest compatibility coefficient over the orbit representatives."""
    points = first_intersection_points(m) if points is None else points
    return max(compatibility_coefficient(m, z) for z in points)


def primitive_types(
    m: PAMap,
    n: int,
    points: list[FirstIntersectionPoint] | None = None,
    flip_quotient: bool = False,
    order: int | None = None,
) -> list[str]:
    """Sorted canonical serializations of the types of ``R(z, n)`` over representatives ``z``."""
    points = first_intersection_points(m) if points is None else points
    need = compatibility_order(m, points) if order is None else order
    if n < need:
        raise PreconditionError(f"n={n} is below the compatibility order {need}")
    keys = set()
    for z in points:
        b = graphs_for(m, z)
        p = build_partition(m, z, n, b)
        keys.add(canonical_key(extract_type(geometrize(p)), flip_quotient))
    return sorted(keys)


@dataclass
class Comparison:
    status: str
    order_a: int
    order_b: int
    types_a: list
    types_b: list
    flip_quotient: bool

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "order_a": self.order_a,
            "order_b": self.order_b,
            "types_a": [json.loads(t) for t in self.types_a],
            "types_b": [json.loads(t) for t in self.types_b],
            "quotient": "relabel+flip" if self.flip_quotient else "relabel",
        }


def compare_invariants(ma: PAMap, mb: PAMap, flip_quotient: bool = False) -> Comparison:
    """Compare ``n(f)`` and the canonical types at that order.

    Unequal orders prove the maps are not conjugate.  Equal type sets give
    ``equivalent``; a mismatch at a single order is only ``inconclusive``.
    """
    pa, pb = first_intersection_points(ma), first_intersection_points(mb)
    na, nb = compatibility_order(ma, pa), compatibility_order(mb, pb)
    if na != nb:
        return Comparison("distinct", na, nb, [], [], flip_quotient)
    ta = primitive_types(ma, na, pa, flip_quotient, na)
    tb = primitive_types(mb, nb, pb, flip_quotient, nb)
    return Comparison("equivalent" if ta == tb else "inconclusive", na, nb, ta, tb, flip_quotient)
