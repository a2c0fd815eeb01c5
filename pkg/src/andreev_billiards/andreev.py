"""Andreev billiards: retro-reflection with parity on a set of vertical sides.

The canonical state lives on the single table B+ and carries a parity in
{+1, -1}.  The glued two-copy picture (B+ and its mirror image B- across a
vertical axis) is available as a view through ``to_two_copy`` /
``from_two_copy``, and ``glued_step`` steps that picture directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .billiard import (
    ANDREEV,
    CollisionEvent,
    MaxEvents,
    Periodic,
    Singularity,
    SingularityReport,
    Termination,
    _advance,
    _collide,
    _event,
    _param,
    _trace,
)
from .geometry import (
    GeometryError,
    Point,
    PolygonTable,
    Vec,
    angle_of,
    direction_vector,
    ray_cast,
    reflect_vector,
    validate_polygon,
)

PLUS = "plus"
MINUS = "minus"


class InvalidAndreevTable(GeometryError):
    pass


@dataclass(frozen=True)
class AndreevTable:
    base: PolygonTable
    andreev_sides: frozenset[int]
    mirror_axis: object = None  # x-coordinate of the vertical mirror line

    def __post_init__(self):
        sides = frozenset(int(i) for i in self.andreev_sides)
        object.__setattr__(self, "andreev_sides", sides)
        if not sides:
            raise InvalidAndreevTable("the Andreev subset must be nonempty")
        n = self.base.side_count
        for i in sides:
            if not 0 <= i < n:
                raise InvalidAndreevTable(f"side index {i} out of range")
            side = self.base.sides[i]
            if not side.is_vertical():
                raise InvalidAndreevTable(f"Andreev side {i} is not vertical")
            for v in self.base.vertices:
                if v in (side.a, side.b):
                    continue
                if v.x == side.a.x and min(side.a.y, side.b.y) < v.y < max(side.a.y, side.b.y):
                    raise InvalidAndreevTable(f"vertex {v} lies inside Andreev side {i}")
        if self.mirror_axis is None:
            object.__setattr__(self, "mirror_axis", _default_axis(self.base, sides))
        c = self.mirror_axis
        xs = [v.x for v in self.base.vertices]
        if min(xs) < c < max(xs):
            raise InvalidAndreevTable("mirror axis crosses the interior of the table")

    @property
    def exact(self) -> bool:
        return self.base.exact

    def reflect_point(self, p) -> Point:
        return Point(2 * self.mirror_axis - p[0], p[1])

    @staticmethod
    def reflect_direction(d) -> Vec:
        # theta -> pi - theta
        return Vec(-d[0], d[1])

    def mirrored_base(self) -> PolygonTable:
        """The mirror copy B-, listed counterclockwise.

        Side ``i`` of B+ maps to side ``n - 1 - i`` of the returned polygon.
        """
        verts = [self.reflect_point(v) for v in reversed(self.base.vertices)]
        # reversing the list turns side (v_i, v_{i+1}) into index n-1-i after a rotation
        verts = verts[-1:] + verts[:-1]
        return PolygonTable(tuple(verts), exact=self.base.exact)


def _default_axis(base: PolygonTable, sides) -> object:
    xs = [v.x for v in base.vertices]
    side = base.sides[min(sides)]
    # counterclockwise boundary: a side running upward has the exterior on its right (+x)
    return max(xs) if side.b.y > side.a.y else min(xs)


def make_andreev_table(vertices, andreev_sides, mirror_axis=None, exact=None) -> AndreevTable:
    return AndreevTable(validate_polygon(vertices, exact=exact), frozenset(andreev_sides), mirror_axis)


@dataclass(frozen=True)
class AndreevPhasePoint:
    position: Point
    direction: Vec
    parity: int = 1
    side: int | None = None

    def __post_init__(self):
        if self.parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        object.__setattr__(self, "position", Point(*self.position))
        object.__setattr__(self, "direction", direction_vector(self.direction))

    @property
    def theta(self) -> float:
        return angle_of(self.direction)


@dataclass(frozen=True)
class TwoCopyPoint:
    copy: str
    position: Point
    direction: Vec
    side: int | None = None  # side index in the copy's own polygon

    def __post_init__(self):
        if self.copy not in (PLUS, MINUS):
            raise ValueError("copy must be 'plus' or 'minus'")
        object.__setattr__(self, "position", Point(*self.position))
        object.__setattr__(self, "direction", direction_vector(self.direction))


@dataclass(frozen=True)
class AndreevOrbit:
    initial: AndreevPhasePoint
    events: tuple[CollisionEvent, ...]
    termination: Termination = field(default_factory=MaxEvents)

    @property
    def length(self):
        return sum(e.tau for e in self.events)


def andreev_step(table: AndreevTable, state: AndreevPhasePoint):
    """One collision of the Andreev billiard map.

    Specular off ordinary sides; on an Andreev side the direction is
    reversed in place and the parity flips.
    """
    cand, out, kind = _collide(table.base, state.position, state.direction, state.side,
                               table.andreev_sides)
    parity = -state.parity if kind == ANDREEV else state.parity
    ev = _event(table.base, cand, state.direction, out, kind, parity)
    return ev, AndreevPhasePoint(cand.hit, out, parity, cand.side)


def andreev_flow(table: AndreevTable, state: AndreevPhasePoint, t,
                 log: list | None = None) -> Union[AndreevPhasePoint, SingularityReport]:
    """Transport by arclength ``t``; negative ``t`` runs the time-reversed dynamics.

    If ``log`` is given, ``(side, kind)`` is appended for every collision.
    """
    if t == 0:
        return state
    if t < 0:
        rev = AndreevPhasePoint(state.position, _neg(state.direction), state.parity, state.side)
        out = andreev_flow(table, rev, -t, log)
        if isinstance(out, SingularityReport):
            return SingularityReport(out.kind, out.location, -out.time)
        return AndreevPhasePoint(out.position, _neg(out.direction), out.parity, out.side)
    return _flow_param(table, state, _param(t, state.direction), log)


def _flow_param(table, state, s, log=None):
    try:
        pos, d, side, parity = _advance(table.base, state.position, state.direction, state.side,
                                        state.parity, s, table.andreev_sides, log)
    except Singularity as exc:
        return exc.report
    return AndreevPhasePoint(pos, d, parity, side)


def _neg(d) -> Vec:
    return Vec(-d[0], -d[1])


def andreev_orbit(table: AndreevTable, initial: AndreevPhasePoint, max_events: int,
                  periodicity="off") -> AndreevOrbit:
    """Collision sequence with parity; recurrence requires matching parity."""
    tr = _trace(table.base, initial.position, initial.direction, initial.side, initial.parity,
                max_events, periodicity, table.andreev_sides)
    return AndreevOrbit(initial, tuple(tr.events), tr.termination)


def to_two_copy(state: AndreevPhasePoint, table: AndreevTable) -> TwoCopyPoint:
    if state.parity == 1:
        return TwoCopyPoint(PLUS, state.position, state.direction, state.side)
    side = None if state.side is None else table.base.side_count - 1 - state.side
    return TwoCopyPoint(MINUS, table.reflect_point(state.position),
                        table.reflect_direction(state.direction), side)


def from_two_copy(point: TwoCopyPoint, table: AndreevTable) -> AndreevPhasePoint:
    if point.copy == PLUS:
        return AndreevPhasePoint(point.position, point.direction, 1, point.side)
    side = None if point.side is None else table.base.side_count - 1 - point.side
    return AndreevPhasePoint(table.reflect_point(point.position),
                             table.reflect_direction(point.direction), -1, side)


def glued_step(table: AndreevTable, point: TwoCopyPoint, mirrored: PolygonTable | None = None):
    """One collision of the glued two-copy billiard.

    Inside either copy the ball reflects specularly.  Reaching A+ (or A-)
    at ``y`` with direction ``w`` it continues from ``rho(y)`` in the other
    copy with direction ``r(w) + pi``, ``r`` being reflection in the side.
    Returns ``(point_after, crossed)``.
    """
    n = table.base.side_count
    if point.copy == PLUS:
        poly, a_sides = table.base, table.andreev_sides
    else:
        poly = mirrored if mirrored is not None else table.mirrored_base()
        a_sides = frozenset(n - 1 - i for i in table.andreev_sides)
    cand = ray_cast(point.position, point.direction, poly, point.side)
    w = point.direction
    if cand.side in a_sides:
        rw = reflect_vector(w, poly.sides[cand.side])
        other = MINUS if point.copy == PLUS else PLUS
        return TwoCopyPoint(other, table.reflect_point(cand.hit), _neg(rw), n - 1 - cand.side), True
    out = reflect_vector(w, poly.sides[cand.side])
    return TwoCopyPoint(point.copy, cand.hit, out, cand.side), False


__all__ = [
    "AndreevTable", "AndreevPhasePoint", "TwoCopyPoint", "AndreevOrbit", "InvalidAndreevTable",
    "make_andreev_table", "andreev_step", "andreev_flow", "andreev_orbit", "to_two_copy",
    "from_two_copy", "glued_step", "PLUS", "MINUS", "Periodic",
]
