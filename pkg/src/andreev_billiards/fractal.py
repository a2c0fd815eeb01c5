"""Perturbed rectangular tables: rectangular pockets and T-fractal prefractals.

A perturbation is an extra region glued to a host side through a *mouth*,
the stretch of the original side that was opened up.  Orbits are followed
across the mouth as across a transparent segment and classified by how they
leave: anti-parallel to how they came in, or in the direction the flat side
would have sent them.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .billiard import CollisionEvent, Periodic, PhasePoint, Singularity, _collide, _event, orbit
from .geometry import (
    Point,
    PolygonTable,
    Side,
    Vec,
    angle_diff,
    angle_of,
    canonical_angle,
    cross,
    direction_vector,
    is_exact,
    reflect_vector,
    to_scalar,
    validate_polygon,
)

ANTI_PARALLEL = "AntiParallelReturn"
PASS_THROUGH = "PassThroughEquivalent"
OTHER = "Other"

MAX_TFRACTAL_LEVEL = 6

BOTTOM, RIGHT, TOP, LEFT = range(4)


class InvalidSpec(ValueError):
    pass


class LevelTooHigh(ValueError):
    pass


class NeverEnters(RuntimeError):
    pass


class NoExit(RuntimeError):
    pass


class DyadicBasepoint(ValueError):
    pass


class SingularHit(RuntimeError):
    pass


@dataclass(frozen=True)
class NotchSpec:
    """Rectangle ``[0, width] x [0, height]`` with a rectangular pocket.

    ``side`` indexes the host sides counterclockwise from the bottom
    (0 bottom, 1 right, 2 top, 3 left).  ``offset`` is where the mouth
    starts, measured along the x axis for top/bottom sides and along the
    y axis for left/right sides.
    """

    width: object
    height: object
    side: int
    offset: object
    notch_width: object
    depth: object


def _check_notch(spec: NotchSpec) -> None:
    if spec.width <= 0 or spec.height <= 0:
        raise InvalidSpec("host rectangle must have positive size")
    if spec.side not in (BOTTOM, RIGHT, TOP, LEFT):
        raise InvalidSpec(f"side must be 0..3, got {spec.side}")
    if spec.notch_width <= 0 or spec.depth <= 0:
        raise InvalidSpec("notch width and depth must be positive")
    along, across = (spec.width, spec.height) if spec.side in (BOTTOM, TOP) else (spec.height, spec.width)
    if spec.offset <= 0 or spec.offset + spec.notch_width >= along:
        raise InvalidSpec("notch must lie strictly inside the side (it overlaps a corner)")
    if spec.depth >= across:
        raise InvalidSpec("notch depth must be smaller than the opposing extent")


def build_notched_rect(spec: NotchSpec, exact: bool | None = None) -> PolygonTable:
    """Host rectangle with an axis-aligned pocket cut into one side (8 vertices)."""
    _check_notch(spec)
    W, H, o, w, d = spec.width, spec.height, spec.offset, spec.notch_width, spec.depth
    if spec.side == BOTTOM:
        verts = [(0, 0), (o, 0), (o, -d), (o + w, -d), (o + w, 0), (W, 0), (W, H), (0, H)]
    elif spec.side == RIGHT:
        verts = [(0, 0), (W, 0), (W, o), (W + d, o), (W + d, o + w), (W, o + w), (W, H), (0, H)]
    elif spec.side == TOP:
        verts = [(0, 0), (W, 0), (W, H), (o + w, H), (o + w, H + d), (o, H + d), (o, H), (0, H)]
    else:
        verts = [(0, 0), (W, 0), (W, H), (0, H), (0, o + w), (-d, o + w), (-d, o), (0, o)]
    return validate_polygon(verts, exact=exact)


def notch_mouth(spec: NotchSpec) -> tuple[Point, Point]:
    """Mouth segment, oriented like the host side (interior on its left)."""
    W, H, o, w = spec.width, spec.height, spec.offset, spec.notch_width
    if spec.side == BOTTOM:
        return Point(o, 0 * o), Point(o + w, 0 * o)
    if spec.side == RIGHT:
        return Point(W, o), Point(W, o + w)
    if spec.side == TOP:
        return Point(o + w, H), Point(o, H)
    return Point(0 * o, o + w), Point(0 * o, o)


@dataclass(frozen=True)
class TFractalSpec:
    level: int
    base_width: object = 1
    stem_ratio: object = Fraction(1, 2)
    crossbar_ratio: object = Fraction(1, 2)


def build_tfractal(spec: TFractalSpec, max_level: int = MAX_TFRACTAL_LEVEL,
                   exact: bool = True) -> PolygonTable:
    """Level-``n`` prefractal of the T-fractal table.

    Level 0 is the base square.  Level 1 puts a T-piece on its top edge: a
    stem ``s*l`` wide and ``s*l`` tall carrying a crossbar ``l`` wide and
    ``c*s*l`` tall, ``l`` being the base width.  Each further level hangs two
    half-size T-pieces on every newest crossbar, centred on its two ends, so
    level ``n`` has ``4 + 8 * (2**n - 1)`` vertices.
    """
    n = int(spec.level)
    if n < 0:
        raise InvalidSpec("level must be >= 0")
    if n > max_level:
        raise LevelTooHigh(f"level {n} exceeds the limit {max_level}")
    conv = (lambda v: Fraction(v)) if exact else float
    w = conv(spec.base_width)
    s, c = conv(spec.stem_ratio), conv(spec.crossbar_ratio)
    if w <= 0 or not 0 < s < 1 or not 0 < c < 1:
        raise InvalidSpec("base width must be positive and ratios must lie in (0, 1)")

    def piece(mid, y, ell, depth):
        # boundary of one T-piece and its descendants, traversed right to left
        half_stem = s * ell / 2
        y_stem = y + s * ell
        y_bar = y_stem + c * s * ell
        left, right = mid - ell / 2, mid + ell / 2
        out = [(mid + half_stem, y), (mid + half_stem, y_stem), (right, y_stem), (right, y_bar)]
        if depth > 1:
            out += piece(right, y_bar, ell / 2, depth - 1)
            out += piece(left, y_bar, ell / 2, depth - 1)
        out += [(left, y_bar), (left, y_stem), (mid - half_stem, y_stem), (mid - half_stem, y)]
        return out

    verts = [(0 * w, 0 * w), (w, 0 * w), (w, w)]
    if n >= 1:
        verts += piece(w / 2, w, w, n)
    verts.append((0 * w, w))
    return validate_polygon(verts, exact=exact)


def tfractal_mouth(spec: TFractalSpec) -> tuple[Point, Point]:
    """Opening of the first stem on the base square's top edge."""
    w = Fraction(spec.base_width)
    half_stem = Fraction(spec.stem_ratio) * w / 2
    return Point(w / 2 + half_stem, w), Point(w / 2 - half_stem, w)


@dataclass(frozen=True)
class Crossing:
    """Passage of the trajectory through the mouth."""

    point: Point
    direction: Vec
    time: object
    event_index: int  # number of wall collisions before the crossing


@dataclass(frozen=True)
class PerturbationVerdict:
    kind: str
    entry_event: Crossing
    exit_event: Crossing
    direction_delta: float
    mouth_offset: object  # signed displacement of the exit point along the mouth
    events: tuple[CollisionEvent, ...] = ()


def _mouth_param(pos, d, a: Point, b: Point, exact: bool):
    """Ray parameter where ``pos + s d`` crosses the open segment ``a-b``."""
    ex, ey = b.x - a.x, b.y - a.y
    denom = cross(d[0], d[1], ex, ey)
    if denom == 0:
        return None
    wx, wy = a.x - pos[0], a.y - pos[1]
    s = cross(wx, wy, ex, ey) / denom
    u = cross(wx, wy, d[0], d[1]) / denom
    if exact:
        ok = s > 0 and 0 < u < 1
    else:
        ok = s > 1e-12 and 0 < u < 1
    return s if ok else None


def _same_direction(u, v, exact: bool, tol: float) -> bool:
    if exact:
        return cross(u[0], u[1], v[0], v[1]) == 0 and u[0] * v[0] + u[1] * v[1] > 0
    return abs(angle_diff(angle_of(u), angle_of(v))) <= tol


def _classify(entry: Crossing, exit_: Crossing, mouth, exact: bool, tol: float, events):
    v, v_out = entry.direction, exit_.direction
    mouth_side = Side(*mouth)
    if _same_direction(v_out, Vec(-v[0], -v[1]), exact, tol):
        kind = ANTI_PARALLEL
    elif _same_direction(v_out, reflect_vector(v, mouth_side), exact, tol):
        kind = PASS_THROUGH
    else:
        kind = OTHER
    a, b = mouth
    ex, ey = b.x - a.x, b.y - a.y
    offset = ((exit_.point[0] - entry.point[0]) * ex + (exit_.point[1] - entry.point[1]) * ey)
    offset = offset / mouth_side.length
    delta = canonical_angle(angle_of(v_out) - angle_of(v))
    return PerturbationVerdict(kind, entry, exit_, delta, offset, tuple(events))


def classify_perturbation_orbit(table: PolygonTable, mouth, x0, theta, max_events: int = 10_000,
                                tol: float = 1e-9) -> PerturbationVerdict:
    """Follow the orbit of ``(x0, theta)`` through its first visit to the
    perturbation behind ``mouth`` and classify the way it leaves.

    ``mouth`` is oriented with the host interior on its left.  Raises
    ``NeverEnters`` if the orbit does not reach the mouth within
    ``max_events`` collisions and ``NoExit`` if it does not leave again.
    """
    a, b = Point(*mouth[0]), Point(*mouth[1])
    d = direction_vector(theta)
    pos = Point(*x0)
    exact = table.exact and is_exact(pos.x, pos.y, d.x, d.y, a.x, a.y, b.x, b.y)
    # outward normal of the mouth: right of a -> b
    nx, ny = b.y - a.y, -(b.x - a.x)
    side = None
    entry = None
    t = 0
    events = []
    for k in range(max_events + 1):
        try:
            cand, out, kind = _collide(table, pos, d, side, t0=t)
        except Singularity as exc:
            raise SingularHit(str(exc)) from exc
        s_m = _mouth_param(pos, d, a, b, exact)
        if s_m is not None and s_m < cand.s:
            going_out = d[0] * nx + d[1] * ny > 0
            p_m = Point(pos.x + s_m * d[0], pos.y + s_m * d[1])
            t_m = t + cand.tau * (s_m / cand.s)
            if entry is None and going_out:
                entry = Crossing(p_m, d, t_m, k)
            elif entry is not None and not going_out:
                return _classify(entry, Crossing(p_m, d, t_m, k), (a, b), exact, tol, events)
        if k == max_events:
            break
        if entry is not None:
            events.append(_event(table, cand, d, out, kind, 1))
        t += cand.tau
        pos, d, side = cand.hit, out, cand.side
    if entry is None:
        raise NeverEnters("orbit never reaches the mouth")
    raise NoExit("orbit does not leave the perturbation within the event budget")


@dataclass(frozen=True)
class TFractalReport:
    level: int
    p: int
    x0: Fraction
    periodic: bool
    anti_parallel_exit: bool
    period_events: int
    excursions: int


def _is_dyadic(q: Fraction) -> bool:
    den = q.denominator
    return den & (den - 1) == 0


def tfractal_theorem_check(level: int, p: int, x0, max_events: int = 200_000,
                           spec: TFractalSpec | None = None) -> TFractalReport:
    """Exact orbit from ``(x0, 0)`` with slope ``1/p`` on a T-fractal prefractal.

    Reports whether the orbit closes and whether every excursion above the
    base square exits anti-parallel to the way it went in.
    """
    p = int(p)
    if p <= 1 or p % 2 == 0:
        raise ValueError("p must be an odd integer > 1")
    x0 = to_scalar(x0, exact=True)
    if not 0 < x0 < 1:
        raise ValueError("x0 must lie in (0, 1)")
    if _is_dyadic(x0):
        raise DyadicBasepoint(f"x0 = {x0} is a dyadic rational")
    spec = spec or TFractalSpec(level)
    table = build_tfractal(spec)
    d0 = Vec(p, 1)
    start = PhasePoint(Point(x0, Fraction(0)), d0, side=0)
    orb = orbit(table, start, max_events, periodicity="exact")
    if isinstance(orb.termination, Periodic):
        periodic = True
    elif hasattr(orb.termination, "kind"):
        raise SingularHit(f"orbit hits a {orb.termination.kind} singularity")
    else:
        periodic = False

    top = Fraction(spec.base_width)
    pos, entry, excursions, anti = start.position, None, 0, True
    for ev in orb.events:
        if pos.y < top < ev.hit.y:
            entry = ev.incoming
        elif pos.y > top > ev.hit.y:
            excursions += 1
            w = ev.incoming
            if entry is None or cross(w.x, w.y, entry.x, entry.y) != 0 or \
                    w.x * entry.x + w.y * entry.y >= 0:
                anti = False
            entry = None
        pos = ev.hit
    period = orb.termination.period_events if periodic else len(orb.events)
    return TFractalReport(level, p, x0, periodic, anti, period, excursions)


def notch_scan(spec: NotchSpec, direction, basepoints, max_events: int = 10_000):
    """Classify orbits from a list of basepoints at one fixed direction."""
    table = build_notched_rect(spec)
    mouth = notch_mouth(spec)
    out = []
    for x0 in basepoints:
        try:
            out.append(classify_perturbation_orbit(table, mouth, x0, direction, max_events))
        except (NeverEnters, NoExit, SingularHit) as exc:
            out.append(exc)
    return out


__all__ = [
    "NotchSpec", "TFractalSpec", "PerturbationVerdict", "TFractalReport", "Crossing",
    "build_notched_rect", "notch_mouth", "build_tfractal", "tfractal_mouth",
    "classify_perturbation_orbit", "tfractal_theorem_check", "notch_scan",
    "InvalidSpec", "LevelTooHigh", "NeverEnters", "NoExit", "DyadicBasepoint", "SingularHit",
    "ANTI_PARALLEL", "PASS_THROUGH", "OTHER",
]
