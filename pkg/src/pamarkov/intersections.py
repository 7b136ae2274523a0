"""First intersection points of a stable and an unstable separatrix.

A point ``z`` on stable separatrix ``a`` (from ``p``) and unstable
separatrix ``b`` (from ``q``) is a first intersection point when the
half-open initial segments ``(p,z]`` and ``(q,z]`` meet only at ``z``.
Orbits are enumerated one separatrix pair at a time inside a fundamental
domain of ``g = f^k``, where ``k`` is the least power fixing both
separatrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm

from .flatsurf import SurfacePoint, arc_intersections, point_on_arc
from .pamap import MapError, PAMap
from .qfield import QuadNum

__all__ = [
    "FirstIntersectionPoint",
    "IntersectionCapExceeded",
    "is_first_intersection",
    "first_intersection_points",
    "all_first_intersection_points",
    "locate_on_separatrix",
    "image_point",
]

# doubling steps allowed when growing an arc to find a crossing
MAX_DOUBLINGS = 24


class IntersectionCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class FirstIntersectionPoint:
    z: SurfacePoint
    stable: int
    unstable: int
    stable_pos: QuadNum
    unstable_pos: QuadNum
    representative: bool = True
    orbit_size_hint: int = 1

    def to_json(self) -> dict:
        return {
            "z": self.z.to_json(),
            "p": self.stable,
            "q": self.unstable,
            "stable_pos": str(self.stable_pos),
            "unstable_pos": str(self.unstable_pos),
            "stable_pos_float": float(self.stable_pos),
            "unstable_pos_float": float(self.unstable_pos),
            "orbit_size_hint": self.orbit_size_hint,
        }


def locate_on_separatrix(m: PAMap, sep_id: int, z: SurfacePoint):
    """Position of ``z`` along a separatrix, growing the arc by doubling."""
    sep = m.separatrices[sep_id]
    length = m.num(1)
    for _ in range(MAX_DOUBLINGS):
        arc = m.sep_arc(sep, length)
        t = point_on_arc(z, arc)
        if t is not None:
            return t
        length = length * 2
    return None


def _crossings(m: PAMap, a: int, b: int, s_len, u_len) -> list[tuple]:
    """All ``(s, u, z)`` with ``z`` on ``a[0,s_len]`` and ``b[0,u_len]``."""
    sa = m.sep_arc(m.separatrices[a], s_len)
    ub = m.sep_arc(m.separatrices[b], u_len)
    return [(s, u, z) for z, s, u in arc_intersections(sa, ub)]


def _is_first(crossings, s, u) -> bool:
    for s2, u2, _ in crossings:
        if s2.sign() > 0 and u2.sign() > 0 and s2 <= s and u2 <= u and (s2, u2) != (s, u):
            return False
    return True


def is_first_intersection(m: PAMap, stable: int, unstable: int, z: SurfacePoint) -> bool:
    if m.separatrices[stable].tag != "s" or m.separatrices[unstable].tag != "u":
        raise MapError("expected a stable and an unstable separatrix id")
    if m.singularity_at(z) is not None:
        raise MapError("a singular point is never a first intersection point")
    s = locate_on_separatrix(m, stable, z)
    u = locate_on_separatrix(m, unstable, z)
    if s is None or u is None:
        raise MapError(f"{z} does not lie on both separatrices")
    return _is_first(_crossings(m, stable, unstable, s, u), s, u)


def _seed_crossing(m: PAMap, a: int, b: int):
    """Crossing of ``b`` with ``a[0,1]`` of minimal unstable position."""
    one = m.num(1)
    length = one
    for _ in range(MAX_DOUBLINGS):
        found = [c for c in _crossings(m, a, b, one, length) if c[0].sign() > 0 and c[1].sign() > 0]
        if found:
            return min(found, key=lambda c: c[1])
        length = length * 2
    raise IntersectionCapExceeded(f"unstable separatrix {b} never crossed stable separatrix {a}")


def _pair_candidates(m: PAMap, a: int, b: int, shift: int = 0) -> tuple[list[tuple], QuadNum, int]:
    k = lcm(m.sep_cycle_length(a), m.sep_cycle_length(b))
    s0, u0, _ = _seed_crossing(m, a, b)
    gk = m.lam ** k
    # replace z0 by g^shift(z0)
    s0, u0 = s0 / gk**shift, u0 * gk**shift
    s_low = s0 / gk
    crossings = _crossings(m, a, b, s0, u0 * gk)
    out = [(s, u, z) for s, u, z in crossings if s > s_low and u.sign() > 0 and _is_first(crossings, s, u)]
    return out, s0, k


def all_first_intersection_points(m: PAMap, shift: int = 0) -> list[FirstIntersectionPoint]:
    """One fundamental domain's worth of first intersection points per separatrix pair.

    Orbit classes are merged exactly: ``f`` sends ``(a, b, s, u)`` to
    ``(pi a, pi b, s/lambda, u*lambda)``, which is then reduced into the
    fundamental domain of the image pair.
    """
    stable = [x.id for x in m.separatrices if x.tag == "s"]
    unstable = [x.id for x in m.separatrices if x.tag == "u"]
    pairs = {}
    for a in stable:
        for b in unstable:
            pairs[(a, b)] = _pair_candidates(m, a, b, shift)

    items = []
    index = {}
    for (a, b), (cands, _, _) in pairs.items():
        for s, u, z in cands:
            index[(a, b, s)] = len(items)
            items.append((a, b, s, u, z))
    parent = list(range(len(items)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    step = m.sep_permutation(1)
    for idx, (a, b, s, u, _) in enumerate(items):
        _, _, k = pairs[(a, b)]
        ca, cb, cs = a, b, s
        for _ in range(k):
            ca, cb, cs = step[ca], step[cb], cs * m.scale("s", 1)
            _, s0, kk = pairs[(ca, cb)]
            gk = m.lam ** kk
            while cs > s0:
                cs = cs / gk
            while cs <= s0 / gk:
                cs = cs * gk
            j = index.get((ca, cb, cs))
            if j is None:
                raise MapError("image of a first intersection point is missing from its fundamental domain")
            ri, rj = find(idx), find(j)
            if ri != rj:
                parent[ri] = rj

    classes: dict[int, list[int]] = {}
    for i in range(len(items)):
        classes.setdefault(find(i), []).append(i)
    reps = {}
    for members in classes.values():
        best = min(members, key=lambda i: (items[i][0], items[i][2]))
        for i in members:
            reps[i] = (best, len(members))
    out = []
    for i, (a, b, s, u, z) in enumerate(items):
        best, size = reps[i]
        out.append(FirstIntersectionPoint(z, a, b, s, u, best == i, size))
    out.sort(key=lambda p: (p.stable, p.stable_pos, p.unstable))
    return out


def first_intersection_points(m: PAMap) -> list[FirstIntersectionPoint]:
    """Orbit representatives, sorted by (stable separatrix, stable position)."""
    return [p for p in all_first_intersection_points(m) if p.representative]


def image_point(m: PAMap, p: FirstIntersectionPoint, power: int = 1) -> FirstIntersectionPoint:
    """``f^power(z)``, which is again a first intersection point."""
    perm = m.sep_permutation(power)
    return FirstIntersectionPoint(
        m.apply(p.z, power),
        perm[p.stable],
        perm[p.unstable],
        p.stable_pos * m.scale("s", power),
        p.unstable_pos * m.scale("u", power),
        False,
        p.orbit_size_hint,
    )
