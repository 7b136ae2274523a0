"""Adapted graphs, rails, compatibility and the compatibility coefficient.

Every interval of a generated graph is an initial segment of a separatrix,
so a graph is stored as ``{separatrix id: length}`` together with a label
``(transverse separatrix, position)`` for the far endpoint.  Because
distinct separatrices are disjoint, point and segment containment in a
graph reduces to comparing positions on a single separatrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .flatsurf import LeafArc, arc_intersections, cross
from .intersections import FirstIntersectionPoint
from .pamap import MapError, PAMap
from .qfield import QuadNum

__all__ = [
    "AdaptedGraph",
    "Rail",
    "Compatibility",
    "GraphCapExceeded",
    "primitive_segment",
    "unstable_seed_family",
    "generate_graph",
    "check_adapted",
    "extreme_rails",
    "rail_witness_ok",
    "is_compatible",
    "compatibility_bound",
    "compatibility_coefficient",
    "graphs_for",
    "GraphBundle",
    "STABILITY_WINDOW",
]

STABILITY_WINDOW = 3
MAX_DOUBLINGS = 24


class GraphCapExceeded(RuntimeError):
    pass


def _other(tag: str) -> str:
    return "u" if tag == "s" else "s"


@dataclass
class AdaptedGraph:
    """Initial separatrix segments of one foliation.

    ``lengths[sep]`` is the transverse measure of the interval on ``sep``;
    ``labels[sep]`` places its far endpoint as ``(transverse sep, position)``.
    """

    tag: str
    lengths: dict
    labels: dict = field(default_factory=dict)

    def contains(self, sep: int, pos) -> bool:
        length = self.lengths.get(sep)
        return length is not None and pos <= length

    def arcs(self, m: PAMap) -> dict:
        return {sid: m.sep_arc(m.separatrices[sid], length) for sid, length in sorted(self.lengths.items())}

    def image(self, m: PAMap, power: int) -> "AdaptedGraph":
        perm = m.sep_permutation(power)
        own = m.scale(self.tag, power)
        other = m.scale(_other(self.tag), power)
        lengths = {perm[s]: length * own for s, length in self.lengths.items()}
        labels = {perm[s]: (perm[t], pos * other) for s, (t, pos) in self.labels.items()}
        return AdaptedGraph(self.tag, lengths, labels)

    def to_json(self, m: PAMap | None = None) -> dict:
        out = {
            "tag": self.tag,
            "intervals": [
                {
                    "separatrix": s,
                    "length": str(length),
                    "length_float": float(length),
                    "endpoint": None
                    if s not in self.labels
                    else {"separatrix": self.labels[s][0], "position": str(self.labels[s][1])},
                }
                for s, length in sorted(self.lengths.items())
            ],
        }
        if m is not None:
            out["arcs"] = [arc.to_json() for arc in self.arcs(m).values()]
        return out


@dataclass(frozen=True)
class Rail:
    """Segment ``[lo, hi]`` of separatrix ``sep`` (transverse to its graph)."""

    sep: int
    lo: QuadNum
    hi: QuadNum
    kind: str = "extreme"
    side: int = 0
    anchor: str = ""

    def image(self, m: PAMap, tag: str, power: int) -> "Rail":
        k = m.scale(tag, power)
        return Rail(m.sep_permutation(power)[self.sep], self.lo * k, self.hi * k, self.kind, self.side, self.anchor)

    def to_json(self) -> dict:
        return {"separatrix": self.sep, "lo": str(self.lo), "hi": str(self.hi), "side": self.side, "anchor": self.anchor}


# -- construction --------------------------------------------------------------


def primitive_segment(m: PAMap, z: FirstIntersectionPoint) -> LeafArc:
    """The unstable arc from the base of ``z``'s unstable separatrix to ``z``."""
    return m.sep_arc(m.separatrices[z.unstable], z.unstable_pos)


def unstable_seed_family(m: PAMap, z: FirstIntersectionPoint) -> AdaptedGraph:
    """Union of ``f^-i`` of the primitive segment, as maximal arcs per separatrix.

    ``f^-c`` returns the segment to its own separatrix, shorter, so the union
    stabilizes after one separatrix cycle.
    """
    inv = m.sep_permutation(-1)
    lengths: dict = {}
    sep, length = z.unstable, z.unstable_pos
    shrink = m.scale("u", -1)
    for i in range(4 * len(m.separatrices) + 1):
        if sep in lengths and length <= lengths[sep]:
            return AdaptedGraph("u", lengths)
        lengths[sep] = length if sep not in lengths else max(lengths[sep], length)
        sep, length = inv[sep], length * shrink
    raise GraphCapExceeded("seed family did not stabilize")


def _first_hit(m: PAMap, sep_id: int, targets: dict):
    """First crossing (position > 0) of separatrix ``sep_id`` with the target arcs.

    Returns ``(position, target sep, position on target)``.
    """
    sep = m.separatrices[sep_id]
    length = max([m.num(1)] + [v for v in targets.values()])
    arcs = {t: m.sep_arc(m.separatrices[t], l) for t, l in targets.items()}
    for _ in range(MAX_DOUBLINGS):
        ray = m.sep_arc(sep, length)
        best = None
        for t, arc in arcs.items():
            for _, pos, tpos in arc_intersections(ray, arc):
                if pos.sign() > 0 and (best is None or pos < best[0]):
                    best = (pos, t, tpos)
        if best is not None:
            return best
        length = length * 2
    raise GraphCapExceeded(f"separatrix {sep_id} never reached the seed family")


def generate_graph(m: PAMap, seeds: AdaptedGraph, tag: str) -> AdaptedGraph:
    """Segments from every ``tag`` separatrix to its first hit on the seeds."""
    if seeds.tag == tag:
        raise MapError("seeds must belong to the transverse foliation")
    lengths, labels = {}, {}
    for sep in m.separatrices:
        if sep.tag != tag:
            continue
        pos, t, tpos = _first_hit(m, sep.id, seeds.lengths)
        lengths[sep.id] = pos
        labels[sep.id] = (t, tpos)
    g = AdaptedGraph(tag, lengths, labels)
    problems = check_adapted(m, g)
    if problems:
        raise MapError("generated graph is not adapted: " + "; ".join(problems))
    return g


def check_adapted(m: PAMap, g: AdaptedGraph) -> list[str]:
    """Exact invariance and coverage checks; returns a list of problems."""
    problems = []
    power = 1 if g.tag == "s" else -1
    image = g.image(m, power)
    for s, length in image.lengths.items():
        if not g.contains(s, length):
            problems.append(f"image of the interval on separatrix {s} is not contained in the graph")
    for sep in m.separatrices:
        if sep.tag == g.tag and sep.id not in g.lengths:
            problems.append(f"separatrix {sep.id} carries no interval")
    for s, length in g.lengths.items():
        if length.sign() <= 0:
            problems.append(f"interval on separatrix {s} is degenerate")
    return problems


# -- rails -------------------------------------------------------------------


def _crossings_along(m: PAMap, sep_id: int, graph: AdaptedGraph, length) -> list[tuple]:
    """Crossings of ``sep_id[0, length]`` with the graph: ``(position, sides)``.

    ``sides`` lists the sides (+1 left, -1 right of the separatrix direction)
    on which the graph continues from the crossing point.
    """
    sep = m.separatrices[sep_id]
    ray = m.sep_arc(sep, length)
    out = []
    for gid, glen in graph.lengths.items():
        garc = m.sep_arc(m.separatrices[gid], glen)
        gdir = m.separatrices[gid].direction
        for _, pos, gpos in arc_intersections(ray, garc):
            if pos.sign() <= 0:
                continue
            if gpos < glen:
                sides = (1, -1)
            else:
                back = (-gdir[0], -gdir[1])
                sides = (cross(sep.direction, back).sign(),)
            out.append((pos, sides))
    out.sort(key=lambda c: c[0])
    return out


def _walk_up(m: PAMap, sep_id: int, graph: AdaptedGraph, start, side: int):
    length = start + 1
    for _ in range(MAX_DOUBLINGS):
        for pos, sides in _crossings_along(m, sep_id, graph, length):
            if pos > start and side in sides:
                return pos
        length = length * 2
    raise GraphCapExceeded(f"rail along separatrix {sep_id} never closed")


def _walk_down(m: PAMap, sep_id: int, graph: AdaptedGraph, start, side: int):
    best = m.num(0)  # the singular base always stops a rail
    for pos, sides in _crossings_along(m, sep_id, graph, start):
        if pos < start and side in sides and pos > best:
            best = pos
    return best


def extreme_rails(m: PAMap, graph: AdaptedGraph) -> list[Rail]:
    """Extreme transverse rails of ``graph``.

    Rails start at non-regular points of the graph: every transverse prong of
    a singularity (on both sides) and every far endpoint (on the side the
    interval lies).  Each runs to the first graph point where the graph
    continues on the same side.
    """
    rails = set()
    rail_tag = _other(graph.tag)
    for sep in m.separatrices:
        if sep.tag != rail_tag:
            continue
        for side in (1, -1):
            hi = _walk_up(m, sep.id, graph, m.num(0), side)
            rails.add(Rail(sep.id, m.num(0), hi, "extreme", side, f"prong {sep.id}"))
    for gid, (tsep, tpos) in graph.labels.items():
        gdir = m.separatrices[gid].direction
        tdir = m.separatrices[tsep].direction
        side = cross(tdir, (-gdir[0], -gdir[1])).sign()
        hi = _walk_up(m, tsep, graph, tpos, side)
        lo = _walk_down(m, tsep, graph, tpos, side)
        rails.add(Rail(tsep, tpos, hi, "extreme", side, f"endpoint {gid}"))
        rails.add(Rail(tsep, lo, tpos, "extreme", side, f"endpoint {gid}"))
    return sorted(rails, key=lambda r: (r.sep, r.lo, r.hi, -r.side))


def rail_witness_ok(m: PAMap, graph: AdaptedGraph, rail: Rail) -> bool:
    """Spot-check the rectangle beside ``rail``: a parallel leaf just off it is a regular rail.

    From a point a small step off the rail's midpoint, on the rail's side,
    the leaf must first meet the graph at half the rail length both ways.
    """
    sep = m.separatrices[rail.sep]
    d = sep.direction
    half = (rail.hi - rail.lo) / 2
    mid = m.sep_arc(sep, rail.hi).chart_at(rail.lo + half)
    t = m.dir_s if graph.tag == "s" else m.dir_u
    if cross(d, t).sign() != rail.side:
        t = (-t[0], -t[1])
    arcs = [m.sep_arc(m.separatrices[gid], glen) for gid, glen in graph.lengths.items()]
    eps = half / 8
    for _ in range(8):
        step = m.trace(mid, t, 0, eps)
        eps = eps / 4
        if step.hit_singularity:
            continue
        start = step.chart_at(step.hi)
        ends = []
        for way in (d, (-d[0], -d[1])):
            leaf = m.trace(start, way, 0, half * 2)
            hits = [pos for a in arcs for _, pos, _ in arc_intersections(leaf, a) if pos.sign() > 0]
            ends.append(min(hits) if hits else None)
        if ends == [half, half]:
            return True
    return False


# -- compatibility -------------------------------------------------------------


@dataclass
class Compatibility:
    ok: bool
    problems: list

    def __bool__(self):
        return self.ok


def is_compatible(
    s_graph: AdaptedGraph,
    u_graph: AdaptedGraph,
    s_rails: list[Rail] | None = None,
    u_rails: list[Rail] | None = None,
    m: PAMap | None = None,
) -> Compatibility:
    """Endpoint and extreme-rail containment, both ways.

    ``s_rails`` are the unstable extreme rails of ``s_graph`` and ``u_rails``
    the stable extreme rails of ``u_graph``; they are computed when ``m`` is
    given and the rails are not.
    """
    if s_graph.tag != "s" or u_graph.tag != "u":
        raise MapError("is_compatible needs a stable graph and an unstable graph")
    if s_rails is None or u_rails is None:
        if m is None:
            raise MapError("rails or the map are required")
        s_rails = extreme_rails(m, s_graph) if s_rails is None else s_rails
        u_rails = extreme_rails(m, u_graph) if u_rails is None else u_rails
    problems = []
    for s, (t, pos) in sorted(s_graph.labels.items()):
        if not u_graph.contains(t, pos):
            problems.append(f"endpoint of stable interval {s} (on {t} at {float(pos):.6g}) not in the unstable graph")
    for s, (t, pos) in sorted(u_graph.labels.items()):
        if not s_graph.contains(t, pos):
            problems.append(f"endpoint of unstable interval {s} (on {t} at {float(pos):.6g}) not in the stable graph")
    for r in s_rails:
        if not u_graph.contains(r.sep, r.hi):
            problems.append(f"unstable rail on {r.sep} up to {float(r.hi):.6g} not in the unstable graph")
    for r in u_rails:
        if not s_graph.contains(r.sep, r.hi):
            problems.append(f"stable rail on {r.sep} up to {float(r.hi):.6g} not in the stable graph")
    return Compatibility(not problems, problems)


@dataclass
class GraphBundle:
    """Everything derived from one first intersection point."""

    z: FirstIntersectionPoint
    seeds: AdaptedGraph
    delta_s: AdaptedGraph
    delta_u: AdaptedGraph
    s_rails: list
    u_rails: list

    def iterate(self, m: PAMap, n: int) -> tuple[AdaptedGraph, list]:
        return self.delta_u.image(m, n), [r.image(m, "s", n) for r in self.u_rails]

    def compatible(self, m: PAMap, n: int) -> Compatibility:
        ug, urails = self.iterate(m, n)
        return is_compatible(self.delta_s, ug, self.s_rails, urails)


def graphs_for(m: PAMap, z: FirstIntersectionPoint) -> GraphBundle:
    seeds = unstable_seed_family(m, z)
    ds = generate_graph(m, seeds, "s")
    du = generate_graph(m, ds, "u")
    return GraphBundle(z, seeds, ds, du, extreme_rails(m, ds), extreme_rails(m, du))


def _min_power(m: PAMap, small, big) -> int:
    """Least ``n >= 0`` with ``small * lam^n >= big``."""
    n = 0
    lam = m.lam
    while small * lam**n < big:
        n += 1
        if n > 10_000:
            raise GraphCapExceeded("power bound diverged")
    return n


def compatibility_bound(m: PAMap, b: GraphBundle) -> int:
    """Power ``N`` beyond which compatibility is guaranteed.

    Unstable lengths grow by ``lambda^n`` under ``f^n``; the shortest
    interval of ``delta_u`` must outgrow the farthest stable endpoint label
    and the farthest unstable rail end.  Symmetrically for the stable side
    under ``f^-n``.
    """
    g_u = min(b.delta_u.lengths.values())
    g_s = min(b.delta_s.lengths.values())
    f_u = max(pos for _, pos in b.delta_s.labels.values())
    f_s = max(pos for _, pos in b.delta_u.labels.values())
    m_u = max((r.hi for r in b.s_rails), default=m.num(0))
    m_s = max((r.hi for r in b.u_rails), default=m.num(0))
    return max(
        _min_power(m, g_u, max(f_u, m_u)),
        _min_power(m, g_s, max(f_s, m_s)),
    )


def compatibility_coefficient(m: PAMap, z: FirstIntersectionPoint, bundle: GraphBundle | None = None) -> int:
    """Least ``n`` such that ``delta_s`` and ``f^n'(delta_u)`` are compatible for every ``n' >= n``."""
    b = bundle or graphs_for(m, z)
    top = compatibility_bound(m, b)
    for n in range(top, top + STABILITY_WINDOW + 1):
        if not b.compatible(m, n):
            raise MapError(f"graphs incompatible at n={n} beyond the bound {top}")
    n = top
    while n > 0 and b.compatible(m, n - 1):
        n -= 1
    return n
