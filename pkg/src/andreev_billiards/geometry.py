"""Planar primitives for polygonal billiard tables.

Coordinates are either Python floats or ``fractions.Fraction``.  A table
built from rationals runs in exact mode: intersections, reflections and
corner tests are carried out without rounding, and directions are kept as
rational vectors rather than angles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import NamedTuple, Sequence

TAU = 2.0 * math.pi

EPS_CORNER = 1e-9
EPS_GRAZING = 1e-9
EPS_TIME = 1e-12
EPS_ON_SIDE = 1e-9


class GeometryError(ValueError):
    pass


class SelfIntersecting(GeometryError):
    pass


class DegenerateSide(GeometryError):
    pass


class NoHit(GeometryError):
    pass


class OffSide(GeometryError):
    pass


class GrazingImpact(GeometryError):
    pass


class CornerHit(GeometryError):
    """Ray reaches a vertex of the table (the flow is undefined there)."""

    def __init__(self, point, side, s, tau):
        super().__init__(f"ray hits corner at ({float(point[0])!r}, {float(point[1])!r})")
        self.point = point
        self.side = side
        self.s = s
        self.tau = tau


class Point(NamedTuple):
    x: object
    y: object


class Vec(NamedTuple):
    x: object
    y: object


def is_exact(*values) -> bool:
    for v in values:
        # floats are by far the common case; the ABC check is slow
        if type(v) is float or not isinstance(v, Rational):
            return False
    return True


def to_scalar(value, exact: bool):
    """Coerce a coordinate. Strings like ``"3/8"`` are parsed as rationals."""
    if exact:
        if isinstance(value, float):
            return Fraction(value)
        return Fraction(value)
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def exact_sqrt(q):
    """Square root that stays rational when ``q`` is a perfect rational square."""
    if isinstance(q, Rational):
        q = Fraction(q)
        if q < 0:
            raise ValueError("negative argument")
        n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
        if n * n == q.numerator and d * d == q.denominator:
            return Fraction(n, d)
    return math.sqrt(q)


def canonical_angle(theta: float) -> float:
    t = math.fmod(float(theta), TAU)
    if t < 0.0:
        t += TAU
    if t >= TAU:
        t -= TAU
    return t + 0.0


def angle_diff(a: float, b: float) -> float:
    """Signed difference ``a - b`` wrapped to (-pi, pi]."""
    d = math.remainder(float(a) - float(b), TAU)
    return math.pi if d == -math.pi else d


def angle_of(v) -> float:
    return canonical_angle(math.atan2(float(v[1]), float(v[0])))


def direction_vector(direction) -> Vec:
    """Turn an angle (radians) or a 2-sequence into a direction vector.

    Angles give unit float vectors.  Vectors are passed through unchanged,
    so rational slope pairs stay exact.
    """
    if isinstance(direction, (tuple, list)):
        return Vec(direction[0], direction[1])
    theta = float(direction)
    return Vec(math.cos(theta), math.sin(theta))


def cross(ax, ay, bx, by):
    return ax * by - ay * bx


def norm(v):
    return exact_sqrt(v[0] * v[0] + v[1] * v[1])


@dataclass(frozen=True)
class Side:
    a: Point
    b: Point

    @cached_property
    def vector(self) -> Vec:
        return Vec(self.b.x - self.a.x, self.b.y - self.a.y)

    @cached_property
    def length(self):
        return norm(self.vector)

    @cached_property
    def tangent_angle(self) -> float:
        return angle_of(self.vector)

    @property
    def inclination(self) -> float:
        """Angle of the side with the positive horizontal axis, mod pi."""
        return math.fmod(self.tangent_angle, math.pi)

    @property
    def inward_normal(self) -> float:
        # counterclockwise boundary: interior lies to the left of a -> b
        return canonical_angle(self.tangent_angle + math.pi / 2)

    @cached_property
    def unit_tangent(self) -> tuple[float, float]:
        ln = float(self.length)
        return float(self.vector.x) / ln, float(self.vector.y) / ln

    @cached_property
    def unit_normal(self) -> tuple[float, float]:
        tx, ty = self.unit_tangent
        return -ty, tx

    def point_at(self, r) -> Point:
        """Point at arclength ``r`` from ``a``."""
        t = r / self.length
        return Point(self.a.x + t * self.vector.x, self.a.y + t * self.vector.y)

    def is_vertical(self) -> bool:
        if is_exact(self.a.x, self.b.x):
            return self.a.x == self.b.x
        return abs(float(self.a.x) - float(self.b.x)) <= EPS_ON_SIDE * max(1.0, float(self.length))


@dataclass(frozen=True)
class PolygonTable:
    vertices: tuple[Point, ...]
    exact: bool = False
    sides: tuple[Side, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.vertices)
        sides = tuple(Side(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n))
        object.__setattr__(self, "sides", sides)

    @cached_property
    def float_sides(self) -> tuple:
        """``(ax, ay, ex, ey, length)`` per side as floats, for the float-mode ray cast."""
        return tuple((float(s.a.x), float(s.a.y), float(s.vector.x), float(s.vector.y),
                      float(s.length)) for s in self.sides)

    @property
    def side_count(self) -> int:
        return len(self.sides)

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        xs = [float(v.x) for v in self.vertices]
        ys = [float(v.y) for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    @cached_property
    def diameter(self) -> float:
        pts = [(float(v.x), float(v.y)) for v in self.vertices]
        return max(math.dist(p, q) for p in pts for q in pts)

    @cached_property
    def perimeter(self) -> float:
        return sum(float(s.length) for s in self.sides)

    @cached_property
    def area(self):
        return signed_area(self.vertices)

    def interior_angles(self) -> list[float]:
        n = len(self.vertices)
        out = []
        for i in range(n):
            e_in = self.sides[i - 1].vector
            e_out = self.sides[i].vector
            turn = math.atan2(float(cross(e_in.x, e_in.y, e_out.x, e_out.y)),
                              float(e_in.x * e_out.x + e_in.y * e_out.y))
            out.append(math.pi - turn)
        return out

    def contains(self, p, tol: float = EPS_ON_SIDE) -> bool:
        """Closed point-in-polygon test; boundary points within ``tol`` count as inside."""
        px, py = float(p[0]), float(p[1])
        for s in self.sides:
            if _segment_distance(px, py, s) <= tol:
                return True
        inside = False
        for s in self.sides:
            ax, ay, bx, by = float(s.a.x), float(s.a.y), float(s.b.x), float(s.b.y)
            if (ay > py) != (by > py):
                xc = ax + (py - ay) * (bx - ax) / (by - ay)
                if xc > px:
                    inside = not inside
        return inside


def _segment_distance(px, py, side: Side) -> float:
    ax, ay = float(side.a.x), float(side.a.y)
    ex, ey = float(side.vector.x), float(side.vector.y)
    L2 = ex * ex + ey * ey
    t = ((px - ax) * ex + (py - ay) * ey) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * ex), py - (ay + t * ey))


def signed_area(vertices: Sequence[Point]):
    n = len(vertices)
    acc = 0
    for i in range(n):
        p, q = vertices[i], vertices[(i + 1) % n]
        acc += p.x * q.y - q.x * p.y
    return acc / 2


def _orient(p, q, r, exact: bool, eps: float) -> int:
    v = cross(q.x - p.x, q.y - p.y, r.x - p.x, r.y - p.y)
    if exact:
        return (v > 0) - (v < 0)
    if abs(v) <= eps:
        return 0
    return 1 if v > 0 else -1


def _on_segment(p, q, r) -> bool:
    # r collinear with p-q; is it within the bounding box of p-q?
    return min(p.x, q.x) <= r.x <= max(p.x, q.x) and min(p.y, q.y) <= r.y <= max(p.y, q.y)


def segments_intersect(p1, p2, q1, q2, exact: bool = False, eps: float = 1e-12) -> bool:
    """Closed segment intersection test (touching counts)."""
    o1 = _orient(p1, p2, q1, exact, eps)
    o2 = _orient(p1, p2, q2, exact, eps)
    o3 = _orient(q1, q2, p1, exact, eps)
    o4 = _orient(q1, q2, p2, exact, eps)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    if o1 == 0 and _on_segment(p1, p2, q1):
        return True
    if o2 == 0 and _on_segment(p1, p2, q2):
        return True
    if o3 == 0 and _on_segment(q1, q2, p1):
        return True
    if o4 == 0 and _on_segment(q1, q2, p2):
        return True
    return False


def validate_polygon(vertices, exact: bool | None = None) -> PolygonTable:
    """Build a table from a vertex list.

    Orientation is normalized to counterclockwise and runs of collinear
    vertices are merged.  ``exact`` defaults to True when any coordinate is
    a ``Fraction`` or a rational string.
    """
    raw = [tuple(v) for v in vertices]
    if len(raw) < 3:
        raise DegenerateSide("a polygon needs at least 3 vertices")
    if exact is None:
        exact = any(isinstance(c, (Fraction, str)) for v in raw for c in v)
    pts = [Point(to_scalar(x, exact), to_scalar(y, exact)) for x, y in raw]

    n = len(pts)
    for i in range(n):
        p, q = pts[i], pts[(i + 1) % n]
        d = math.hypot(float(q.x - p.x), float(q.y - p.y))
        if (exact and p == q) or (not exact and d <= 1e-12):
            raise DegenerateSide(f"zero-length side between vertices {i} and {(i + 1) % n}")

    pts = _merge_collinear(pts, exact)
    if len(pts) < 3:
        raise DegenerateSide("polygon collapses to fewer than 3 vertices")
    area = signed_area(pts)
    if area == 0 or (not exact and abs(area) <= 1e-15):
        raise DegenerateSide("polygon has zero area")
    if area < 0:
        pts.reverse()

    _check_simple(pts, exact)
    return PolygonTable(tuple(pts), exact=exact)


def _merge_collinear(pts: list[Point], exact: bool) -> list[Point]:
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        n = len(pts)
        for i in range(n):
            p, q, r = pts[i - 1], pts[i], pts[(i + 1) % n]
            ux, uy = q.x - p.x, q.y - p.y
            vx, vy = r.x - q.x, r.y - q.y
            c = cross(ux, uy, vx, vy)
            if exact:
                collinear = c == 0
            else:
                collinear = abs(c) <= 1e-12 * math.hypot(ux, uy) * math.hypot(vx, vy)
            if collinear:
                if ux * vx + uy * vy < 0:
                    raise SelfIntersecting(f"boundary doubles back at vertex {i}")
                del pts[i]
                changed = True
                break
    return pts


def _check_simple(pts: list[Point], exact: bool) -> None:
    n = len(pts)
    segs = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    boxes = [(min(a.x, b.x), min(a.y, b.y), max(a.x, b.x), max(a.y, b.y)) for a, b in segs]
    for i in range(n):
        bi = boxes[i]
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            bj = boxes[j]
            if bi[2] < bj[0] or bj[2] < bi[0] or bi[3] < bj[1] or bj[3] < bi[1]:
                continue
            if segments_intersect(*segs[i], *segs[j], exact=exact):
                raise SelfIntersecting(f"sides {i} and {j} intersect")


class CollisionCandidate(NamedTuple):
    side: int
    tau: object
    hit: Point
    r: object
    s: object  # ray parameter: hit = origin + s * direction


def ray_cast(origin, direction, table: PolygonTable, exclude_side: int | None = None) -> CollisionCandidate:
    """First boundary point hit by the ray ``origin + s * direction``, ``s > 0``.

    ``tau`` is the Euclidean distance travelled (unit speed).  Raises
    ``CornerHit`` if that point is a vertex (within ``EPS_CORNER`` in float
    mode) and ``NoHit`` if nothing is found.
    """
    d = direction_vector(direction)
    ox, oy = origin[0], origin[1]
    exact = table.exact and is_exact(ox, oy, d.x, d.y)
    if not exact:
        return _ray_cast_float(float(ox), float(oy), float(d.x), float(d.y), table, exclude_side)
    dnorm = norm(d) if exact else math.hypot(d.x, d.y)
    best_s = None
    best = None
    for i, side in enumerate(table.sides):
        if i == exclude_side:
            continue
        ex, ey = side.vector
        denom = d.x * ey - d.y * ex
        if denom == 0:
            continue
        wx, wy = side.a.x - ox, side.a.y - oy
        s = (wx * ey - wy * ex) / denom
        u = (wx * d.y - wy * d.x) / denom
        if exact:
            if s <= 0 or u < 0 or u > 1:
                continue
        else:
            if s * dnorm <= EPS_TIME:
                continue
            slack = EPS_CORNER / side.length
            if u < -slack or u > 1 + slack:
                continue
        if best_s is None or s < best_s:
            best_s, best = s, (i, u)
    if best is None:
        raise NoHit(f"ray from ({float(ox)!r}, {float(oy)!r}) escapes the table")
    i, u = best
    side = table.sides[i]
    s = best_s
    tau = s * dnorm
    hit = Point(ox + s * d.x, oy + s * d.y)
    if exact:
        corner = u == 0 or u == 1
    else:
        L = float(side.length)
        corner = u * L < EPS_CORNER or (1 - u) * L < EPS_CORNER
    if corner:
        vertex = side.a if u < 0.5 else side.b
        raise CornerHit(vertex, i, s, tau)
    return CollisionCandidate(i, tau, hit, u * side.length, s)


def _ray_cast_float(ox, oy, dx, dy, table, exclude_side):
    dnorm = math.hypot(dx, dy)
    best_s = math.inf
    best = -1
    best_u = 0.0
    for i, (ax, ay, ex, ey, length) in enumerate(table.float_sides):
        if i == exclude_side:
            continue
        denom = dx * ey - dy * ex
        if denom == 0.0:
            continue
        wx, wy = ax - ox, ay - oy
        s = (wx * ey - wy * ex) / denom
        if s * dnorm <= EPS_TIME or s >= best_s:
            continue
        u = (wx * dy - wy * dx) / denom
        slack = EPS_CORNER / length
        if u < -slack or u > 1 + slack:
            continue
        best_s, best, best_u = s, i, u
    if best < 0:
        raise NoHit(f"ray from ({ox!r}, {oy!r}) escapes the table")
    s, u = best_s, best_u
    L = table.float_sides[best][4]
    tau = s * dnorm
    if u * L < EPS_CORNER or (1 - u) * L < EPS_CORNER:
        side = table.sides[best]
        raise CornerHit(side.a if u < 0.5 else side.b, best, s, tau)
    return CollisionCandidate(best, tau, Point(ox + s * dx, oy + s * dy), u * L, s)


def specular_reflect(incoming: float, side_inclination: float) -> float:
    """Law of reflection on angles: ``(2 * gamma - theta) mod 2 pi``."""
    delta = math.fmod(float(incoming) - float(side_inclination), math.pi)
    if delta < 0:
        delta += math.pi
    if min(delta, math.pi - delta) < EPS_GRAZING:
        raise GrazingImpact("direction is tangent to the side")
    return canonical_angle(2.0 * side_inclination - incoming)


def reflect_vector(d, side: Side) -> Vec:
    """Mirror direction vector ``d`` about the line of ``side``; exact for rationals."""
    ex, ey = side.vector
    c = cross(d[0], d[1], ex, ey)
    if is_exact(d[0], d[1], ex, ey):
        if c == 0:
            raise GrazingImpact("direction is tangent to the side")
    elif abs(c) < EPS_GRAZING * math.hypot(d[0], d[1]) * float(side.length):
        raise GrazingImpact("direction is tangent to the side")
    k = 2 * (d[0] * ex + d[1] * ey) / (ex * ex + ey * ey)
    return Vec(k * ex - d[0], k * ey - d[1])


def boundary_coords(hit, incoming, side: Side) -> tuple[float, float]:
    """Arclength ``r`` from ``side.a`` and impact angle ``phi``.

    ``phi`` is the angle between the inward normal and the reversed
    incoming direction, positive toward ``side.b``.
    """
    hx, hy = hit[0], hit[1]
    if is_exact(hx, hy, side.a.x, side.a.y, side.b.x, side.b.y):
        ex, ey = side.vector
        wx, wy = hx - side.a.x, hy - side.a.y
        u = (wx * ex + wy * ey) / (ex * ex + ey * ey)
        if cross(wx, wy, ex, ey) != 0 or u < 0 or u > 1:
            raise OffSide("point is not on the side")
        r = float(u * side.length)
    else:
        if _segment_distance(float(hx), float(hy), side) > EPS_ON_SIDE:
            raise OffSide("point is not on the side")
        r = math.hypot(float(hx) - float(side.a.x), float(hy) - float(side.a.y))
        r = min(r, float(side.length))
    w = direction_vector(incoming)
    return r, _phi(-float(w.x), -float(w.y), side)


def outgoing_phi(direction, side: Side) -> float:
    """Angle of an inward direction from the inward normal, positive toward ``side.b``."""
    v = direction_vector(direction)
    return _phi(float(v.x), float(v.y), side)


def _phi(vx: float, vy: float, side: Side) -> float:
    tx, ty = side.unit_tangent
    nx, ny = side.unit_normal
    return math.atan2(vx * tx + vy * ty, vx * nx + vy * ny)


def direction_from_phi(phi: float, side: Side) -> Vec:
    """Inverse of ``outgoing_phi``: unit vector ``cos(phi) n + sin(phi) t``."""
    tx, ty = side.unit_tangent
    nx, ny = side.unit_normal
    c, s = math.cos(phi), math.sin(phi)
    return Vec(c * nx + s * tx, c * ny + s * ty)
