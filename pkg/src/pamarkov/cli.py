"""Command-line front end.

Every subcommand reads a map description (a JSON file or inline JSON),
writes one JSON artifact (or SVG for ``render``) and exits with

* 0 on success,
* 1 on invalid input,
* 2 on a precondition violation such as ``n < n(z)``,
* 3 when an internal search cap is exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import graphs as graphs_mod
from . import intersections as inter_mod
from . import partition as part_mod
from .flatsurf import SurfaceError
from .geotype import (
    GeoTypeError,
    canonical_type,
    compare_invariants,
    compatibility_order,
    extract_type,
    geometrize,
    incidence_matrix,
    perron_root,
    primitive_types,
)
from .graphs import GraphCapExceeded, compatibility_bound, compatibility_coefficient, graphs_for
from .intersections import IntersectionCapExceeded, first_intersection_points
from .pamap import MapError, map_from_json
from .partition import (
    MarkovPartition,
    PartitionError,
    PreconditionError,
    Rectangle,
    build_partition,
    validate_adapted,
    validate_markov,
)
from .qfield import QuadFieldError, QuadNum
from .render import render_graphs, render_partition

SCHEMA_VERSION = 1
DEFAULT_TRACE_CAP = 24


class InputError(ValueError):
    pass


# -- io --------------------------------------------------------------------------


def load_map_spec(text: str) -> dict:
    """Parse ``--map``: inline JSON when it starts with ``{``, otherwise a file path."""
    try:
        if text.lstrip().startswith("{"):
            obj = json.loads(text)
        else:
            obj = json.loads(Path(text).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read map {text!r}: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError("a map description must be a JSON object")
    return obj


def build_map(spec: dict):
    try:
        return map_from_json({k: v for k, v in spec.items() if k != "schema_version"})
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (MapError, SurfaceError, QuadFieldError)):
            raise
        raise InputError(f"malformed map description: {exc}") from exc


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path: str | None, text: str):
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def partition_from_json(obj: dict) -> MarkovPartition:
    """Rebuild a partition artifact (rectangles only; graphs are not needed to re-render)."""
    try:
        m = build_map(obj["map"])
        body = obj["result"]["partition"]
        rects = []
        for r in body["rectangles"]:
            sq, x, y = r["center"]
            rects.append(
                Rectangle(
                    r["id"],
                    (sq, QuadNum.parse(x, m.D), QuadNum.parse(y, m.D)),
                    QuadNum.parse(r["width"], m.D),
                    QuadNum.parse(r["height"], m.D),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (MapError, SurfaceError)):
            raise
        raise InputError(f"malformed partition artifact: {exc}") from exc
    return MarkovPartition(m, rects, n=body.get("n"))


# -- helpers ---------------------------------------------------------------------


_CAP_MODULES = (inter_mod, graphs_mod, part_mod)


def _set_caps(cap: int) -> list[int]:
    old = [mod.MAX_DOUBLINGS for mod in _CAP_MODULES]
    for mod in _CAP_MODULES:
        mod.MAX_DOUBLINGS = cap
    return old


def _params(args) -> dict:
    skip = {"func", "map", "map_a", "map_b", "out", "svg", "partition"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _envelope(args, spec, result) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": args.command, "params": _params(args), "result": result}
    if spec is not None:
        out["map"] = spec
    return out


def _pick_z(m, index: int):
    reps = first_intersection_points(m)
    if not 0 <= index < len(reps):
        raise InputError(f"--z {index} is out of range: {len(reps)} representatives")
    return reps[index]


def _resolve_n(m, z, bundle, n_arg) -> int:
    if n_arg == "auto":
        return compatibility_coefficient(m, z, bundle)
    try:
        return int(n_arg)
    except ValueError as exc:
        raise InputError(f"--n must be an integer or 'auto', not {n_arg!r}") from exc


def _report_json(reports: dict) -> dict:
    return {k: v.to_json() for k, v in reports.items()}


# -- subcommands -----------------------------------------------------------------


def cmd_describe(args):
    spec = load_map_spec(args.map)
    m = build_map(spec)
    s = m.surface
    result = m.to_json()
    result["genus"] = s.genus
    result["lambda_float"] = float(m.lam)
    return _envelope(args, spec, result)


def cmd_first_points(args):
    spec = load_map_spec(args.map)
    m = build_map(spec)
    pts = inter_mod.all_first_intersection_points(m) if args.all else first_intersection_points(m)
    result = {"count": len(pts), "points": [dict(p.to_json(), representative=p.representative) for p in pts]}
    return _envelope(args, spec, result)


def cmd_graphs(args):
    spec = load_map_spec(args.map)
    m = build_map(spec)
    z = _pick_z(m, args.z)
    b = graphs_for(m, z)
    n = _resolve_n(m, z, b, args.n)
    ug = b.delta_u.image(m, n)
    urails = [r.image(m, "s", n) for r in b.u_rails]
    compat = graphs_mod.is_compatible(b.delta_s, ug, b.s_rails, urails)
    result = {
        "z": z.to_json(),
        "n": n,
        "seeds": b.seeds.to_json(),
        "delta_s": b.delta_s.to_json(m),
        "f_n_delta_u": ug.to_json(m),
        "unstable_rails_of_delta_s": [r.to_json() for r in b.s_rails],
        "stable_rails_of_f_n_delta_u": [r.to_json() for r in urails],
        "compatible": compat.ok,
        "diagnostics": compat.problems,
    }
    if args.svg:
        write_atomic(args.svg, render_graphs(m, {"delta_s": b.delta_s, "f_n_delta_u": ug}, f"graphs n={n}"))
    return _envelope(args, spec, result)


def cmd_coefficient(args):
    spec = load_map_spec(args.map)
    m = build_map(spec)
    z = _pick_z(m, args.z)
    b = graphs_for(m, z)
    n = compatibility_coefficient(m, z, b)
    result = {
        "z": z.to_json(),
        "coefficient": n,
        "bound": compatibility_bound(m, b),
        "stability_window": graphs_mod.STABILITY_WINDOW,
    }
    return _envelope(args, spec, result)


def _partition_for(args):
    spec = load_map_spec(args.map)
    m = build_map(spec)
    z = _pick_z(m, args.z)
    b = graphs_for(m, z)
    n = _resolve_n(m, z, b, args.n)
    return spec, m, build_partition(m, z, n, b)


def cmd_partition(args):
    spec, m, p = _partition_for(args)
    result = {"partition": p.to_json()}
    if not args.no_validate:
        markov = validate_markov(p)
        adapted = validate_adapted(p, args.period_cap)
        result["validate_markov"] = _report_json(markov)
        result["validate_adapted"] = _report_json(adapted)
    if args.svg:
        write_atomic(args.svg, render_partition(p, f"R(z,{p.n})"))
    return _envelope(args, spec, result)


def cmd_geotype(args):
    spec, m, p = _partition_for(args)
    t = extract_type(geometrize(p, args.flip))
    mat = incidence_matrix(t)
    result = {
        "n": p.n,
        "type": t.to_json(),
        "canonical": canonical_type(t, args.flip_quotient).to_json(),
        "incidence_matrix": mat,
        "perron_root_float": float(perron_root(mat)),
        "lambda_float": float(m.lam),
    }
    return _envelope(args, spec, result)


def cmd_order(args):
    spec = load_map_spec(args.map)
    m = build_map(spec)
    reps = first_intersection_points(m)
    coeffs = [compatibility_coefficient(m, z) for z in reps]
    return _envelope(args, spec, {"order": max(coeffs), "coefficients": coeffs})


def cmd_types(args):
    spec = load_map_spec(args.map)
    m = build_map(spec)
    reps = first_intersection_points(m)
    order = compatibility_order(m, reps)
    n = order if args.n == "auto" else _resolve_n(m, None, None, args.n)
    types = primitive_types(m, n, reps, args.flip_quotient, order)
    result = {
        "n": n,
        "order": order,
        "quotient": "relabel+flip" if args.flip_quotient else "relabel",
        "types": [json.loads(t) for t in types],
    }
    return _envelope(args, spec, result)


def cmd_compare(args):
    spec_a, spec_b = load_map_spec(args.map_a), load_map_spec(args.map_b)
    ma, mb = build_map(spec_a), build_map(spec_b)
    result = compare_invariants(ma, mb, args.flip_quotient).to_json()
    out = _envelope(args, None, result)
    out["map_a"], out["map_b"] = spec_a, spec_b
    return out


def cmd_render(args):
    if args.partition:
        try:
            obj = json.loads(Path(args.partition).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read partition {args.partition!r}: {exc}") from exc
        p = partition_from_json(obj)
    elif args.map:
        _, _, p = _partition_for(args)
    else:
        raise InputError("render needs --partition or --map")
    return render_partition(p, f"R(z,{p.n})")


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pamarkov", description=__doc__.splitlines()[0])
    parser.add_argument("--trace-cap", type=int, default=DEFAULT_TRACE_CAP, help="doubling steps allowed when growing an arc")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, map_arg=True, z=False, n=False, out=True):
        p = sub.add_parser(name, help=help_text)
        if map_arg:
            p.add_argument("--map", required=True, help="map JSON file or inline JSON")
        if z:
            p.add_argument("--z", type=int, default=0, help="index of the orbit representative")
        if n:
            p.add_argument("--n", default="auto", help="order n or 'auto'")
        if out:
            p.add_argument("--out", help="output path (stdout when omitted)")
        p.set_defaults(func=func)
        return p

    add("describe", cmd_describe, "surface, stretch factor, singularities and separatrices")
    fp = add("first-points", cmd_first_points, "first intersection points")
    fp.add_argument("--all", action="store_true", help="every point of the fundamental domains, not only representatives")
    g = add("graphs", cmd_graphs, "delta_s(z), f^n(delta_u(z)) and their extreme rails", z=True, n=True)
    g.add_argument("--svg", help="optional SVG overlay")
    add("coefficient", cmd_coefficient, "compatibility coefficient n(z)", z=True)
    p = add("partition", cmd_partition, "build and validate R(z,n)", z=True, n=True)
    p.add_argument("--svg", help="optional SVG rendering")
    p.add_argument("--no-validate", action="store_true")
    p.add_argument("--period-cap", type=int, default=None, help="largest period searched on the boundary")
    gt = add("geotype", cmd_geotype, "geometric type of R(z,n)", z=True, n=True)
    gt.add_argument("--flip", action="store_true", help="geometrize with the vertical direction -dir_u")
    gt.add_argument("--flip-quotient", action="store_true", help="canonicalize modulo the global flip too")
    add("order", cmd_order, "compatibility order n(f)")
    t = add("types", cmd_types, "canonical primitive types T(f,n)", n=True)
    t.add_argument("--flip-quotient", action="store_true")
    c = add("compare", cmd_compare, "compare n(f) and T(f,n(f)) of two maps", map_arg=False)
    c.add_argument("--map-a", required=True)
    c.add_argument("--map-b", required=True)
    c.add_argument("--flip-quotient", action="store_true")
    r = sub.add_parser("render", help="SVG of a partition artifact (or of R(z,n) for --map)")
    r.add_argument("--partition", help="partition JSON written by the partition subcommand")
    r.add_argument("--map")
    r.add_argument("--z", type=int, default=0)
    r.add_argument("--n", default="auto")
    r.add_argument("--out", help="SVG path (stdout when omitted)")
    r.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are input errors; --help exits cleanly
        return 0 if exc.code in (0, None) else 1
    old = _set_caps(args.trace_cap)
    try:
        result = args.func(args)
        text = result if isinstance(result, str) else dump_json(result)
        write_atomic(args.out, text)
    except (InputError, MapError, SurfaceError, QuadFieldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return 2
    except (IntersectionCapExceeded, GraphCapExceeded, PartitionError, GeoTypeError) as exc:
        print(f"cap exceeded or internal diagnostic: {exc}", file=sys.stderr)
        return 3
    finally:
        for mod, cap in zip(_CAP_MODULES, old):
            mod.MAX_DOUBLINGS = cap
    return 0


if __name__ == "__main__":
    sys.exit(main())
