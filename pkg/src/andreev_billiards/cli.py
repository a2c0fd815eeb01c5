"""Command line: build table files, simulate orbits, run verification suites.

    andreev-billiards table make square --andreev 1 -o square.json
    andreev-billiards simulate square.json --position 1/2,1/2 --direction 0/1 --csv run.csv
    andreev-billiards verify jacobian --table square.json

Exit codes: 0 success, 1 a verification failed, 2 bad configuration,
3 the simulated orbit ran into a singularity.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from .andreev import AndreevPhasePoint, AndreevTable, InvalidAndreevTable, andreev_orbit
from .billiard import PhasePoint, SingularityReport, orbit
from .fractal import (
    InvalidSpec,
    LevelTooHigh,
    NotchSpec,
    TFractalSpec,
    build_notched_rect,
    build_tfractal,
)
from .geometry import GeometryError, Point, PolygonTable, Vec, validate_polygon
from . import suites
from .verify import InsufficientSamples

FORMAT_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SINGULAR = 0, 1, 2, 3

CSV_HEADER = ["event_index", "side", "hit_x", "hit_y", "r", "phi", "tau", "kind", "parity_after"]


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# table files


def _coord_out(v, rational: bool):
    return str(Fraction(v)) if rational else float(v)


def table_to_json(poly: PolygonTable, andreev_sides=(), rational: bool | None = None) -> str:
    rational = poly.exact if rational is None else rational
    doc = {
        "format_version": FORMAT_VERSION,
        "mode": "rational" if rational else "float64",
        "vertices": [[_coord_out(v.x, rational), _coord_out(v.y, rational)] for v in poly.vertices],
        "andreev_sides": sorted(int(i) for i in andreev_sides),
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def load_table(path: str):
    """Read a table file; returns an ``AndreevTable`` when Andreev sides are listed."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read table file {path}: {exc}") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {doc.get('format_version')!r}")
    mode = doc.get("mode", "float64")
    if mode not in ("float64", "rational"):
        raise ConfigError(f"unknown mode {mode!r}")
    conv = (lambda v: Fraction(str(v))) if mode == "rational" else (lambda v: float(Fraction(str(v))))
    try:
        verts = [(conv(x), conv(y)) for x, y in doc["vertices"]]
        poly = validate_polygon(verts, exact=mode == "rational")
        sides = doc.get("andreev_sides", [])
        if sides:
            return AndreevTable(poly, frozenset(sides))
        return poly
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid table file {path}: {exc}") from exc


def _parse_number(text: str):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def parse_position(text: str, exact: bool) -> Point:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"position must be 'x,y', got {text!r}")
    x, y = (_parse_number(p.strip()) for p in parts)
    return Point(x, y) if exact else Point(float(x), float(y))


def parse_direction(text, exact: bool):
    """``"dy/dx"`` gives the direction vector ``(dx, dy)`` (signs as written);
    anything else is an angle in radians."""
    text = str(text).strip()
    if "/" in text:
        num, den = text.split("/", 1)
        try:
            dy, dx = Fraction(num.strip()), Fraction(den.strip())
        except ValueError as exc:
            raise ConfigError(f"bad slope {text!r}") from exc
        if dx == 0 and dy == 0:
            raise ConfigError("slope 0/0 has no direction")
        return Vec(dx, dy) if exact else Vec(float(dx), float(dy))
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad direction {text!r}") from exc


# --------------------------------------------------------------------------
# table make


def cmd_table(args) -> int:
    rational = not args.float
    conv = Fraction if rational else float
    try:
        if args.shape == "square":
            poly = validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)], exact=rational)
        elif args.shape == "rect":
            if len(args.params) != 2:
                raise ConfigError("rect needs W H")
            w, h = (conv(_parse_number(p)) for p in args.params)
            poly = validate_polygon([(0, 0), (w, 0), (w, h), (0, h)], exact=rational)
        elif args.shape == "tfractal":
            if len(args.params) != 1:
                raise ConfigError("tfractal needs a level")
            spec = TFractalSpec(int(args.params[0]), _parse_number(args.base_width),
                                _parse_number(args.stem_ratio), _parse_number(args.crossbar_ratio))
            poly = build_tfractal(spec, exact=rational)
        else:
            vals = {k: _parse_number(getattr(args, k)) for k in
                    ("width", "height", "offset", "notch_width", "depth")}
            spec = NotchSpec(vals["width"], vals["height"], args.side, vals["offset"],
                             vals["notch_width"], vals["depth"])
            poly = build_notched_rect(spec, exact=rational)
        if args.andreev:
            AndreevTable(poly, frozenset(args.andreev))
    except (InvalidSpec, LevelTooHigh, GeometryError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    text = table_to_json(poly, args.andreev or (), rational)
    _write(args.out, text)
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate


def _fmt(v) -> str:
    return format(float(v) + 0.0, ".17g")  # no "-0"


def events_csv(events, termination) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for i, ev in enumerate(events):
        w.writerow([i, ev.side, _fmt(ev.hit.x), _fmt(ev.hit.y), _fmt(ev.r), _fmt(ev.phi),
                    _fmt(ev.tau), ev.kind, ev.parity_after])
    if isinstance(termination, SingularityReport):
        loc = termination.location
        w.writerow([len(events), "", _fmt(loc.x), _fmt(loc.y), "", "", "", "singularity", ""])
    return buf.getvalue()


def trajectory_svg(poly: PolygonTable, andreev_sides, points) -> str:
    """SVG 1.1 drawing of the table, its Andreev sides and one trajectory path."""
    x0, y0, x1, y1 = poly.bbox
    mx, my = 0.05 * (x1 - x0), 0.05 * (y1 - y0)

    def pt(p):
        # flip y so the picture is upright
        return f"{float(p[0]):.10g},{y0 + y1 - float(p[1]):.10g}"

    stroke = 0.004 * max(x1 - x0, y1 - y0)
    outline = " ".join(pt(v) for v in poly.vertices)
    lines = []
    for i in sorted(andreev_sides):
        s = poly.sides[i]
        (ax, ay), (bx, by) = pt(s.a).split(","), pt(s.b).split(",")
        lines.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke="#c0392b" '
                     f'stroke-width="{3 * stroke:.6g}"/>')
    path = "M " + " L ".join(pt(p) for p in points)
    body = "\n".join([
        f'<polygon points="{outline}" fill="none" stroke="black" stroke-width="{stroke:.6g}"/>',
        *lines,
        f'<path d="{path}" fill="none" stroke="#2c7fb8" stroke-width="{stroke:.6g}"/>',
    ])
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{x0 - mx:.10g} {y0 - my:.10g} {x1 - x0 + 2 * mx:.10g} {y1 - y0 + 2 * my:.10g}">\n'
        f"{body}\n</svg>\n"
    )


def _load_run_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    initial = dict(cfg.get("initial", {}))
    outputs = dict(cfg.get("outputs", {}))
    for key, val in (("position", args.position), ("direction", args.direction),
                     ("parity", args.parity)):
        if val is not None:
            initial[key] = val
    for key, val in (("csv", args.csv), ("svg", args.svg)):
        if val is not None:
            outputs[key] = val
    run = {
        "initial": initial,
        "outputs": outputs,
        "max_events": args.max_events if args.max_events is not None else cfg.get("max_events", 1000),
        "tolerance": args.tolerance if args.tolerance is not None else cfg.get("tolerance", 1e-9),
        "seed": cfg.get("seed", 0),
    }
    if "position" not in initial or "direction" not in initial:
        raise ConfigError("an initial position and direction are required")
    if not float(run["tolerance"]) > 0:
        raise ConfigError("tolerance must be positive")
    if int(initial.get("parity", 1)) not in (1, -1):
        raise ConfigError("parity must be +1 or -1")
    if int(run["max_events"]) < 1:
        raise ConfigError("max_events must be >= 1")
    return run


def cmd_simulate(args) -> int:
    table = load_table(args.table)
    run = _load_run_config(args)
    poly = table.base if isinstance(table, AndreevTable) else table
    andreev_sides = table.andreev_sides if isinstance(table, AndreevTable) else frozenset()
    init = run["initial"]
    pos = parse_position(str(init["position"]), poly.exact)
    d = parse_direction(init["direction"], poly.exact)
    exact = poly.exact and isinstance(d, Vec)
    if not exact:
        pos = Point(float(pos.x), float(pos.y))
        if isinstance(d, Vec):
            d = Vec(float(d.x), float(d.y))
    periodicity = "exact" if exact else float(run["tolerance"])
    parity = int(init.get("parity", 1))
    try:
        if isinstance(table, AndreevTable):
            orb = andreev_orbit(table, AndreevPhasePoint(pos, d, parity), int(run["max_events"]),
                                periodicity)
        else:
            orb = orbit(poly, PhasePoint(pos, d), int(run["max_events"]), periodicity)
    except GeometryError as exc:
        raise ConfigError(str(exc)) from exc
    text = events_csv(orb.events, orb.termination)
    out = run["outputs"]
    _write(out.get("csv"), text, newline="")
    if out.get("svg"):
        points = [pos] + [ev.hit for ev in orb.events]
        if isinstance(orb.termination, SingularityReport):
            points.append(orb.termination.location)
        _write(out["svg"], trajectory_svg(poly, andreev_sides, points))
    if isinstance(orb.termination, SingularityReport):
        print(f"singular termination: {orb.termination.kind} at "
              f"({float(orb.termination.location.x)!r}, {float(orb.termination.location.y)!r})",
              file=sys.stderr)
        return EXIT_SINGULAR
    return EXIT_OK


# --------------------------------------------------------------------------
# verify


def _andreev_table(args) -> AndreevTable:
    if not args.table:
        raise ConfigError(f"suite {args.suite} needs --table")
    table = load_table(args.table)
    if not isinstance(table, AndreevTable):
        raise ConfigError("the table file lists no Andreev sides")
    return table


def run_suite(args):
    s = args.suite
    if s == "tfractal":
        levels = tuple(int(v) for v in args.levels.split(","))
        ps = tuple(int(v) for v in args.ps.split(","))
        x0s = tuple(v.strip() for v in args.x0s.split(","))
        return suites.tfractal_suite(levels, ps, x0s)
    if s == "notch":
        return suites.notch_suite(args.n or 1000)
    table = _andreev_table(args)
    if s == "jacobian":
        return suites.jacobian_suite(table, args.n or 100, args.seed)
    if s == "measure":
        return suites.measure_suite(table, args.regions, args.n or 100_000, args.seed)
    if s == "volume-sign":
        return suites.volume_sign_suite(table, args.n or 50, args.seed)
    if s == "closed-flow":
        return suites.closed_flow_suite(table, args.n or 100, args.seed)
    if s == "parity":
        return suites.parity_suite(table, args.n or 1000, args.max_events, args.seed)
    if s == "two-copy":
        return suites.two_copy_suite(table, args.n or 1000, seed=args.seed)
    raise ConfigError(f"unknown suite {s!r}")


def cmd_verify(args) -> int:
    try:
        records, passed = run_suite(args)
    except (InsufficientSamples, InvalidAndreevTable, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _write(args.out, text)
    return EXIT_OK if passed else EXIT_FAIL


# --------------------------------------------------------------------------


def _write(path, text: str, newline=None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline=newline) as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="andreev-billiards",
                                description="Polygonal Andreev billiards: simulate and verify.")
    sub = p.add_subparsers(dest="command", required=True)

    tp = sub.add_parser("table", help="build a table file")
    tsub = tp.add_subparsers(dest="action", required=True)
    mk = tsub.add_parser("make", help="write a table file for a standard shape")
    mk.add_argument("shape", choices=["square", "rect", "tfractal", "notch"])
    mk.add_argument("params", nargs="*", help="rect: W H; tfractal: level")
    mk.add_argument("--andreev", type=int, nargs="*", default=[], help="Andreev side indices")
    mk.add_argument("--float", action="store_true", help="write float64 coordinates")
    mk.add_argument("--base-width", default="1")
    mk.add_argument("--stem-ratio", default="1/2")
    mk.add_argument("--crossbar-ratio", default="1/2")
    mk.add_argument("--width", default="10")
    mk.add_argument("--height", default="1")
    mk.add_argument("--side", type=int, default=2, help="0 bottom, 1 right, 2 top, 3 left")
    mk.add_argument("--offset", default="4")
    mk.add_argument("--notch-width", default="1")
    mk.add_argument("--depth", default="1/2")
    mk.add_argument("-o", "--out", default=None)
    mk.set_defaults(func=cmd_table)

    sp = sub.add_parser("simulate", help="trace an orbit, write CSV and optionally SVG")
    sp.add_argument("table")
    sp.add_argument("--config", help="JSON run configuration")
    sp.add_argument("--position", help="x,y (rationals allowed)")
    sp.add_argument("--direction", help="slope 'dy/dx' or an angle in radians")
    sp.add_argument("--parity", type=int)
    sp.add_argument("--max-events", type=int)
    sp.add_argument("--tolerance", type=float)
    sp.add_argument("--csv", help="CSV output path (default stdout)")
    sp.add_argument("--svg", help="SVG output path")
    sp.set_defaults(func=cmd_simulate)

    vp = sub.add_parser("verify", help="run a verification suite, JSON lines on stdout")
    vp.add_argument("suite", choices=["jacobian", "measure", "volume-sign", "closed-flow",
                                      "tfractal", "parity", "two-copy", "notch"])
    vp.add_argument("--table")
    vp.add_argument("--n", type=int, help="samples, directions, orbits or basepoints")
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--regions", type=int, default=10)
    vp.add_argument("--max-events", type=int, default=1000)
    vp.add_argument("--levels", default="1,2")
    vp.add_argument("--ps", default="3,5")
    vp.add_argument("--x0s", default="1/3,1/5,2/3")
    vp.add_argument("-o", "--out", default=None)
    vp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
