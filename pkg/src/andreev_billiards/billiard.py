"""Classical polygonal billiard: collision map, flow and orbits.

The stepping core here also drives the Andreev dynamics: ``_collide`` takes
a set of sides on which the ball retro-reflects instead of reflecting
specularly, and orbit tracing carries a parity that flips on those sides.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .geometry import (
    CornerHit,
    GrazingImpact,
    Point,
    PolygonTable,
    Vec,
    angle_diff,
    angle_of,
    cross,
    direction_vector,
    is_exact,
    norm,
    _phi,
    ray_cast,
    reflect_vector,
)

SPECULAR = "specular"
ANDREEV = "andreev"

DEFAULT_POSITION_TOL = 1e-9
DEFAULT_DIRECTION_TOL = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    """Position and direction of the ball.

    ``direction`` may be given as an angle in radians or as a vector; it is
    stored as a vector.  ``side`` records the boundary side the point sits
    on, if any, so the next ray cast can skip it.
    """

    position: Point
    direction: Vec
    side: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", Point(*self.position))
        object.__setattr__(self, "direction", direction_vector(self.direction))

    @property
    def theta(self) -> float:
        return angle_of(self.direction)


@dataclass(frozen=True)
class CollisionEvent:
    side: int
    hit: Point
    r: float
    phi: float
    tau: object
    incoming: Vec
    outgoing: Vec
    kind: str = SPECULAR
    parity_after: int = 1

    @property
    def incoming_angle(self) -> float:
        return angle_of(self.incoming)

    @property
    def outgoing_angle(self) -> float:
        return angle_of(self.outgoing)


@dataclass(frozen=True)
class SingularityReport:
    kind: str  # "corner" | "grazing"
    location: Point
    time: object


@dataclass(frozen=True)
class MaxEvents:
    pass


@dataclass(frozen=True)
class Periodic:
    period_events: int
    period_length: object


Termination = Union[MaxEvents, SingularityReport, Periodic]


@dataclass(frozen=True)
class Orbit:
    initial: PhasePoint
    events: tuple[CollisionEvent, ...]
    termination: Termination

    @property
    def length(self):
        return sum(e.tau for e in self.events)


class Singularity(Exception):
    """The flow reaches a corner or hits a side tangentially.

    ``s`` is the ray parameter of the failure along the current segment.
    """

    def __init__(self, report: SingularityReport, s=None):
        super().__init__(f"{report.kind} singularity at ({float(report.location.x)!r}, "
                         f"{float(report.location.y)!r})")
        self.report = report
        self.s = s


def _collide(table: PolygonTable, position, d: Vec, exclude, retro_sides=frozenset(), t0=0):
    """Cast to the next wall and apply the reflection law there.

    Returns ``(candidate, outgoing, kind)``.  Raises ``Singularity`` with the
    absolute time ``t0 + tau`` of the failure.
    """
    try:
        cand = ray_cast(position, d, table, exclude)
    except CornerHit as exc:
        raise Singularity(SingularityReport("corner", exc.point, t0 + exc.tau), exc.s) from exc
    if cand.side in retro_sides:
        return cand, Vec(-d.x, -d.y), ANDREEV
    try:
        out = reflect_vector(d, table.sides[cand.side])
    except GrazingImpact as exc:
        raise Singularity(SingularityReport("grazing", cand.hit, t0 + cand.tau), cand.s) from exc
    return cand, out, SPECULAR


def _event(table, cand, d, out, kind, parity_after) -> CollisionEvent:
    # the hit lies on the side by construction, so skip boundary_coords' check
    r = cand.r if is_exact(cand.r) else float(cand.r)
    phi = _phi(-float(d[0]), -float(d[1]), table.sides[cand.side])
    return CollisionEvent(cand.side, cand.hit, r, phi, cand.tau, d, out, kind, parity_after)


def collision_step(table: PolygonTable, state: PhasePoint, exclude_side: int | None = None):
    """One application of the collision map.

    Returns ``(event, new_state)`` with the new state sitting on the hit side
    and pointing inward.
    """
    exclude = state.side if exclude_side is None else exclude_side
    cand, out, kind = _collide(table, state.position, state.direction, exclude)
    ev = _event(table, cand, state.direction, out, kind, 1)
    return ev, PhasePoint(cand.hit, out, cand.side)


def _advance(table, position, d, side, parity, s_total, retro_sides=frozenset(), log=None):
    """Transport along the trajectory by ray parameter ``s_total``.

    Works in units of the direction vector (time = s * |d|), which keeps
    exact-mode transport rational even when |d| is irrational.  Returns
    ``(position, d, side, parity)``; raises ``Singularity``.
    """
    remaining = s_total
    elapsed = 0
    while True:
        try:
            cand, out, kind = _collide(table, position, d, side, retro_sides, elapsed)
        except Singularity as exc:
            if exc.s > remaining:
                return _move(position, d, remaining), d, None, parity
            raise
        if cand.s > remaining:
            return _move(position, d, remaining), d, None, parity
        if kind == ANDREEV:
            parity = -parity
        if log is not None:
            log.append((cand.side, kind))
        elapsed += cand.tau
        remaining -= cand.s
        position, d, side = cand.hit, out, cand.side
        if remaining == 0:
            return position, d, side, parity


def _move(position, d, s):
    return Point(position[0] + s * d[0], position[1] + s * d[1])


def _param(t, d):
    dn = norm(d)
    return t / dn


def flow(table: PolygonTable, state: PhasePoint, t) -> Union[PhasePoint, SingularityReport]:
    """Billiard flow: move the ball a distance ``t >= 0`` along its trajectory."""
    if t < 0:
        raise ValueError("classical flow takes t >= 0; reverse the direction for the past")
    if t == 0:
        return state
    try:
        pos, d, side, _ = _advance(table, state.position, state.direction, state.side, 1,
                                   _param(t, state.direction))
    except Singularity as exc:
        return exc.report
    return PhasePoint(pos, d, side)


def _periodicity_mode(periodicity, exact: bool):
    if periodicity in (None, False, "off"):
        return None
    if periodicity == "exact":
        if not exact:
            raise ValueError("exact periodicity needs an exact table and rational direction")
        return "exact"
    if periodicity == "float":
        return DEFAULT_POSITION_TOL
    return float(periodicity)


def _recurrence(p0, d0, par0, pos, d, par, s_limit, mode):
    """Ray parameter at which the current segment passes through the initial
    phase point, or None."""
    if par != par0:
        return None
    wx, wy = p0[0] - pos[0], p0[1] - pos[1]
    if mode == "exact":
        if cross(d[0], d[1], d0[0], d0[1]) != 0 or d[0] * d0[0] + d[1] * d0[1] <= 0:
            return None
        if cross(wx, wy, d[0], d[1]) != 0:
            return None
        dd = d[0] * d[0] + d[1] * d[1]
        s = (wx * d[0] + wy * d[1]) / dd
        return s if 0 <= s < s_limit else None
    tol = mode
    if abs(angle_diff(angle_of(d), angle_of(d0))) > tol:
        return None
    dn = math.hypot(d[0], d[1])
    if abs(cross(wx, wy, d[0], d[1])) / dn > tol:
        return None
    s = (wx * d[0] + wy * d[1]) / (dn * dn)
    if s * dn < -tol or (s - s_limit) * dn > -tol:
        return None
    return max(s, 0.0)


@dataclass
class _Trace:
    events: list = field(default_factory=list)
    termination: Termination = field(default_factory=MaxEvents)


def _trace(table, position, d, side, parity, max_events, periodicity, retro_sides=frozenset()):
    if max_events < 1:
        raise ValueError("max_events must be >= 1")
    exact = table.exact and is_exact(position[0], position[1], d[0], d[1])
    mode = _periodicity_mode(periodicity, exact)
    p0, d0, par0 = position, d, parity
    dn = norm(d)
    out = _Trace()
    lengths = [0]  # cumulative path length after k events
    recurrences: dict[int, object] = {}
    while True:
        try:
            cand, new_d, kind = _collide(table, position, d, side, retro_sides, lengths[-1])
            s_limit = cand.s
        except Singularity as exc:
            cand = None
            s_limit = exc.s
            sing = exc
        k = len(out.events)
        if mode is not None and k >= 1 and s_limit is not None:
            s = _recurrence(p0, d0, par0, position, d, parity, s_limit, mode)
            if s is not None:
                length = lengths[k] + s * dn
                if mode == "exact":
                    out.termination = Periodic(k, length)
                    return out
                recurrences[k] = length
                half = k // 2
                if k % 2 == 0 and half in recurrences and \
                        abs(length - 2 * recurrences[half]) <= 1e-9 * max(1.0, float(length)):
                    del out.events[half:]
                    out.termination = Periodic(half, recurrences[half])
                    return out
        if cand is None:
            out.termination = sing.report
            return out
        if len(out.events) >= max_events:
            out.termination = MaxEvents()
            return out
        if kind == ANDREEV:
            parity = -parity
        out.events.append(_event(table, cand, d, new_d, kind, parity))
        lengths.append(lengths[-1] + cand.tau)
        position, d, side = cand.hit, new_d, cand.side


def orbit(table: PolygonTable, initial: PhasePoint, max_events: int, periodicity="off") -> Orbit:
    """Collision sequence from ``initial``.

    ``periodicity`` is ``"off"``, ``"exact"``, ``"float"`` (default
    tolerance) or a float tolerance.  A float-mode recurrence at ``k`` events
    is only accepted once it is confirmed by a second one at ``2k`` events;
    the returned events are truncated to one period.
    """
    tr = _trace(table, initial.position, initial.direction, initial.side, 1, max_events, periodicity)
    return Orbit(initial, tuple(tr.events), tr.termination)
