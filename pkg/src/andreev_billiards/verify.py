"""Numerical and exact checks of the Andreev billiard's structural properties.

* the collision-map derivative in boundary coordinates ``(r, phi)`` and the
  invariance of ``cos(phi) dr dphi``;
* the sign flip of the flow's phase volume at every Andreev collision;
* the finite direction set of a rational table and closedness of the flow
  restricted to it.

Boundary charts: a departing point ``(side, r, phi)`` leaves ``side.a + r t``
in direction ``cos(phi) n + sin(phi) t`` (``t`` the unit tangent, ``n`` the
inward normal).  An arriving point is charted by the angle its specular
continuation makes with the normal, i.e. ``phi' = -phi_in`` where ``phi_in``
is the impact angle from ``geometry.boundary_coords``.  In these charts the
derivative of the map is ``(-1/cos phi') [[cos phi, tau], [0, cos phi']]``
for Andreev and specular arrivals alike.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .andreev import AndreevPhasePoint, AndreevTable, _flow_param, andreev_flow
from .billiard import ANDREEV, Singularity, SingularityReport, _collide
from .geometry import (
    EPS_CORNER,
    EPS_TIME,
    CornerHit,
    NoHit,
    Point,
    PolygonTable,
    Vec,
    angle_diff,
    angle_of,
    canonical_angle,
    direction_from_phi,
    direction_vector,
    is_exact,
    norm,
    ray_cast,
    reflect_vector,
)

EPS_TANGENCY = 1e-9
FD_STEP = 1e-6
MIN_SAMPLES = 1000
MAX_SINGULAR_FRACTION = 0.01
NO_A_HIT_FACTOR = 1000
ANGLE_EPS = 1e-9
Q_MAX = 10**6


class NearTangency(ValueError):
    pass


class ChartBreak(RuntimeError):
    pass


class TooManySingular(RuntimeError):
    pass


class InsufficientSamples(ValueError):
    pass


class ItineraryMismatch(RuntimeError):
    pass


class NotClosed(RuntimeError):
    pass


class NoAHit(RuntimeError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator: the stream depends only on ``seed``."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _base(table) -> PolygonTable:
    return table.base if isinstance(table, AndreevTable) else table


def _retro(table) -> frozenset:
    return table.andreev_sides if isinstance(table, AndreevTable) else frozenset()


# --------------------------------------------------------------------------
# collision-map derivative


@dataclass(frozen=True)
class JacobianResult:
    analytic: np.ndarray
    numeric: np.ndarray
    det_analytic: float
    det_expected: float
    max_abs_entry_error: float
    max_rel_entry_error: float
    det_rel_error: float
    phi: float
    phi_prime: float
    tau: float
    target_side: int


def analytic_jacobian(phi: float, phi_prime: float, tau: float) -> np.ndarray:
    c, cp = math.cos(phi), math.cos(phi_prime)
    if abs(phi) >= math.pi / 2 or cp < EPS_TANGENCY:
        raise NearTangency(f"cos(phi') = {cp!r} is too small")
    return (-1.0 / cp) * np.array([[c, tau], [0.0, cp]])


def collision_map(table, side: int, r: float, phi: float):
    """``(side, r, phi) -> (side', r', phi', tau)`` for one collision.

    Raises ``ChartBreak`` when the ray ends in a corner or misses.
    """
    poly = _base(table)
    s = poly.sides[side]
    pos = s.point_at(float(r))
    pos = Point(float(pos.x), float(pos.y))
    d = direction_from_phi(phi, s)
    try:
        cand = ray_cast(pos, d, poly, side)
    except (CornerHit, NoHit) as exc:
        raise ChartBreak(str(exc)) from exc
    tgt = poly.sides[cand.side]
    tx, ty = tgt.unit_tangent
    nx, ny = tgt.unit_normal
    phi_p = math.atan2(d.x * tx + d.y * ty, -(d.x * nx + d.y * ny))
    return cand.side, float(cand.r), phi_p, float(cand.tau)


def numeric_jacobian(table, at, h: float = FD_STEP) -> np.ndarray:
    """Central-difference derivative of the collision map at ``(side, r, phi)``."""
    side, r, phi = at
    base = collision_map(table, side, r, phi)
    cols = []
    for dr, dp in ((h, 0.0), (0.0, h)):
        plus = collision_map(table, side, r + dr, phi + dp)
        minus = collision_map(table, side, r - dr, phi - dp)
        if plus[0] != base[0] or minus[0] != base[0]:
            raise ChartBreak("perturbed trajectory lands on another side")
        cols.append([(plus[1] - minus[1]) / (2 * h), angle_diff(plus[2], minus[2]) / (2 * h)])
    return np.array(cols).T


def jacobian_check(table, at, h: float = FD_STEP) -> JacobianResult:
    side, r, phi = at
    tgt, _, phi_p, tau = collision_map(table, side, r, phi)
    ana = analytic_jacobian(phi, phi_p, tau)
    num = numeric_jacobian(table, at, h)
    err = np.abs(num - ana)
    nonzero = np.abs(ana) > 0
    rel = float(np.max(err[nonzero] / np.abs(ana[nonzero])))
    if np.any(err[~nonzero] > 1e-12):
        rel = max(rel, float(np.max(err[~nonzero])))
    det_expected = math.cos(phi) / math.cos(phi_p)
    det_rel = abs(float(np.linalg.det(num)) - det_expected) / det_expected
    return JacobianResult(ana, num, float(np.linalg.det(ana)), det_expected, float(err.max()),
                          rel, det_rel, phi, phi_p, tau, tgt)


# --------------------------------------------------------------------------
# measure invariance, vectorised over samples


class _SideArrays:
    def __init__(self, poly: PolygonTable, retro):
        sides = poly.sides
        self.ax = np.array([float(s.a.x) for s in sides])
        self.ay = np.array([float(s.a.y) for s in sides])
        self.ex = np.array([float(s.vector.x) for s in sides])
        self.ey = np.array([float(s.vector.y) for s in sides])
        self.length = np.array([float(s.length) for s in sides])
        self.tx = self.ex / self.length
        self.ty = self.ey / self.length
        self.nx, self.ny = -self.ty, self.tx
        self.retro = np.array([i in retro for i in range(len(sides))])


def _batch_cast(S: _SideArrays, px, py, dx, dy, exclude):
    """Vectorised ``ray_cast``: returns target side, hit point and a singular mask."""
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = dx[:, None] * S.ey[None, :] - dy[:, None] * S.ex[None, :]
        wx = S.ax[None, :] - px[:, None]
        wy = S.ay[None, :] - py[:, None]
        s = (wx * S.ey[None, :] - wy * S.ex[None, :]) / denom
        u = (wx * dy[:, None] - wy * dx[:, None]) / denom
    slack = EPS_CORNER / S.length[None, :]
    ok = (denom != 0) & (s > EPS_TIME) & (u >= -slack) & (u <= 1 + slack)
    ok &= np.arange(len(S.length))[None, :] != exclude[:, None]
    s = np.where(ok, s, np.inf)
    j = np.argmin(s, axis=1)
    rows = np.arange(len(px))
    s_j, u_j = s[rows, j], u[rows, j]
    miss = ~np.isfinite(s_j)
    s_j = np.where(miss, 0.0, s_j)
    u_j = np.where(miss, 0.5, u_j)
    L = S.length[j]
    corner = (u_j * L < EPS_CORNER) | ((1 - u_j) * L < EPS_CORNER)
    return j, px + s_j * dx, py + s_j * dy, np.clip(u_j, 0.0, 1.0) * L, miss | corner


def _batch_map(S: _SideArrays, side, r, phi, steps: int):
    """Apply the collision map ``steps`` times to arrays of boundary points.

    Returns ``(itinerary, r', phi', singular)`` with ``phi'`` in the arrival
    chart of the last collision.
    """
    px = S.ax[side] + r * S.tx[side]
    py = S.ay[side] + r * S.ty[side]
    c, sn = np.cos(phi), np.sin(phi)
    dx = c * S.nx[side] + sn * S.tx[side]
    dy = c * S.ny[side] + sn * S.ty[side]
    singular = np.zeros(len(r), dtype=bool)
    itinerary = []
    cur = side
    for step in range(steps):
        j, hx, hy, r_new, bad = _batch_cast(S, px, py, dx, dy, cur)
        singular |= bad
        itinerary.append(j)
        dn = dx * S.nx[j] + dy * S.ny[j]
        dt = dx * S.tx[j] + dy * S.ty[j]
        phi_new = np.arctan2(dt, -dn)
        singular |= np.cos(phi_new) < EPS_TANGENCY
        if step < steps - 1:
            spec_x, spec_y = dx - 2 * dn * S.nx[j], dy - 2 * dn * S.ny[j]
            retro = S.retro[j]
            dx = np.where(retro, -dx, spec_x)
            dy = np.where(retro, -dy, spec_y)
            px, py, cur = hx, hy, j
    return np.stack(itinerary, axis=1), r_new, phi_new, singular


@dataclass(frozen=True)
class MeasureReport:
    region: tuple
    n_samples: int
    measure_before: float
    measure_after: float
    relative_error: float
    steps: int
    n_singular: int
    seed: int


def _sample_region(poly: PolygonTable, region, n, rng):
    if region is None:
        lengths = np.array([float(s.length) for s in poly.sides])
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        arc = rng.uniform(0.0, cum[-1], n)
        side = np.clip(np.searchsorted(cum, arc, side="right") - 1, 0, len(lengths) - 1)
        r = arc - cum[side]
        phi = rng.uniform(-math.pi / 2, math.pi / 2, n)
        return side, r, phi, cum[-1] * math.pi
    side_idx, (r0, r1), (p0, p1) = region
    L = float(poly.sides[side_idx].length)
    if not (0 <= r0 < r1 <= L and -math.pi / 2 < p0 < p1 < math.pi / 2):
        raise ValueError("region must be a rectangle inside [0, L] x (-pi/2, pi/2)")
    side = np.full(n, int(side_idx))
    r = rng.uniform(r0, r1, n)
    phi = rng.uniform(p0, p1, n)
    return side, r, phi, (r1 - r0) * (p1 - p0)


def check_measure_preservation(table, region=None, n: int = 100_000, seed: int = 0,
                               steps: int = 1, h: float = FD_STEP) -> MeasureReport:
    """Monte Carlo comparison of ``cos(phi) dr dphi`` over ``D`` and over its image.

    ``region`` is ``(side, (r0, r1), (phi0, phi1))``; ``None`` means the whole
    boundary phase space.  The image integral is evaluated on the same
    samples through the change of variables ``cos(phi') |det DF|``, with the
    Jacobian taken by central differences.  Samples whose perturbations
    change itinerary, reach a corner or graze a side are counted singular.
    """
    if n < MIN_SAMPLES:
        raise InsufficientSamples(f"n = {n} is below the minimum of {MIN_SAMPLES}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    poly = _base(table)
    S = _SideArrays(poly, _retro(table))
    rng = make_rng(seed)
    side, r, phi, area = _sample_region(poly, region, n, rng)
    before = area * float(np.mean(np.cos(phi)))

    L = S.length[side]
    edge = (r - h <= 0) | (r + h >= L) | (np.abs(phi) + h >= math.pi / 2)
    it0, r0, p0, sing = _batch_map(S, side, r, phi, steps)
    sing |= edge
    shifted = []
    for dr, dp in ((h, 0), (-h, 0), (0, h), (0, -h)):
        it, rr, pp, bad = _batch_map(S, side, np.clip(r + dr, 0, L), phi + dp, steps)
        sing |= bad | np.any(it != it0, axis=1)
        shifted.append((rr, pp))
    (rp, pp), (rm, pm), (rq, pq), (rn, pn) = shifted
    j11, j21 = (rp - rm) / (2 * h), (pp - pm) / (2 * h)
    j12, j22 = (rq - rn) / (2 * h), (pq - pn) / (2 * h)
    det = np.abs(j11 * j22 - j12 * j21)
    weight = np.cos(p0) * det
    ok = ~sing
    n_sing = int(np.count_nonzero(sing))
    if n_sing > MAX_SINGULAR_FRACTION * n:
        raise TooManySingular(f"{n_sing} of {n} samples are singular")
    after = area * float(np.mean(weight[ok]))
    rel = abs(after - before) / max(abs(before), 1e-300)
    reg = None if region is None else (int(region[0]), tuple(map(float, region[1])),
                                       tuple(map(float, region[2])))
    return MeasureReport(reg, n, before, after, rel, steps, n_sing, seed)


# --------------------------------------------------------------------------
# flow volume sign


@dataclass(frozen=True)
class VolumeSignReport:
    segment: tuple
    andreev_hits: int
    det_numeric: float
    specular_hits: int = 0

    @property
    def expected_sign(self) -> int:
        return -1 if self.andreev_hits % 2 else 1


def _flow_xyt(table, x, y, theta, parity, t, log):
    out = andreev_flow(table, AndreevPhasePoint(Point(x, y), float(theta), parity), t, log)
    if isinstance(out, SingularityReport):
        raise Singularity(out)
    return np.array([float(out.position.x), float(out.position.y), out.theta])


def flow_jacobian_sign(table: AndreevTable, state: AndreevPhasePoint, t: float,
                       h: float = FD_STEP) -> VolumeSignReport:
    """Determinant of the finite-difference Jacobian of ``(x, y, theta) -> flow_t``."""
    x, y, th = float(state.position.x), float(state.position.y), state.theta
    log0: list = []
    centre = _flow_xyt(table, x, y, th, state.parity, t, log0)
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        vals = []
        for sign in (1, -1):
            log: list = []
            p = _flow_xyt(table, x + sign * e[0], y + sign * e[1], th + sign * e[2],
                          state.parity, t, log)
            if log != log0:
                raise ItineraryMismatch("a perturbed neighbour takes a different itinerary")
            vals.append(p)
        plus, minus = vals
        col = (plus - minus) / (2 * h)
        col[2] = angle_diff(plus[2], minus[2]) / (2 * h)
        cols.append(col)
    det = float(np.linalg.det(np.array(cols).T))
    a_hits = sum(1 for _, kind in log0 if kind == ANDREEV)
    return VolumeSignReport((0.0, float(t)), a_hits, det, len(log0) - a_hits)


# --------------------------------------------------------------------------
# rationality and direction sets


@dataclass(frozen=True)
class RationalityReport:
    rational: bool
    witnesses: tuple  # (p, q) per interior angle, None where no witness was found

    def __bool__(self) -> bool:
        return self.rational


def rational_witness(x: float, eps: float = ANGLE_EPS, q_max: int = Q_MAX):
    """``(p, q)`` with ``x == p/q`` up to ``eps``, found by continued fractions.

    The expansion must terminate, i.e. reach a remainder below ``eps``, before
    the denominator exceeds ``q_max``.  A convergent that is merely close to
    ``x`` is not enough: every real number has those.
    """
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    y = float(x)
    for _ in range(64):
        a = math.floor(y)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k > q_max:
            return None
        frac = y - a
        if frac < eps:
            if abs(x - h / k) <= eps:
                return h, k
            return None
        y = 1.0 / frac
    return None


def is_rational(table, eps: float = ANGLE_EPS, q_max: int = Q_MAX) -> RationalityReport:
    poly = _base(table)
    wits = []
    for ang in poly.interior_angles():
        w = rational_witness(ang / math.pi, eps / math.pi, q_max)
        wits.append(None if w is None else (w[0] // math.gcd(*w), w[1] // math.gcd(*w)))
    return RationalityReport(all(w is not None for w in wits), tuple(wits))


@dataclass(frozen=True)
class DirectionSet:
    base: float
    members: tuple  # sorted angles in [0, 2 pi)
    group_order: int | None
    vectors: tuple = ()  # exact direction vectors when computed in exact mode

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, theta) -> bool:
        return any(abs(angle_diff(theta, m)) <= 1e-9 for m in self.members)


def reflection_group_order(table) -> int | None:
    """Order ``2N`` of the group generated by reflections in the side lines."""
    poly = _base(table)
    g0 = poly.sides[0].inclination
    den = 1
    for s in poly.sides[1:]:
        w = rational_witness(canonical_angle(s.inclination - g0) % math.pi / math.pi,
                             ANGLE_EPS, Q_MAX)
        if w is None:
            return None
        den = math.lcm(den, w[1] // math.gcd(*w) if w[0] else 1)
    return 2 * den


def direction_orbit(theta, table, bound: int = 10_000) -> DirectionSet:
    """Closure of ``{theta}`` under ``theta -> 2 gamma_i - theta`` for all side inclinations."""
    poly = _base(table)
    if poly.exact and isinstance(theta, (tuple, list)) and is_exact(*theta):
        v0 = Vec(*theta)
        seen = {v0}
        todo = [v0]
        while todo:
            v = todo.pop()
            for s in poly.sides:
                w = reflect_vector(v, s)
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
                    if len(seen) > bound:
                        raise NotClosed(f"more than {bound} directions")
        vecs = tuple(sorted(seen, key=angle_of))
        return DirectionSet(angle_of(v0), tuple(angle_of(v) for v in vecs),
                            reflection_group_order(poly), vecs)
    th = canonical_angle(angle_of(theta) if isinstance(theta, (tuple, list)) else theta)
    incl = [s.inclination for s in poly.sides]
    members = [th]
    todo = [th]
    while todo:
        a = todo.pop()
        for g in incl:
            b = canonical_angle(2 * g - a)
            if all(abs(angle_diff(b, m)) > 1e-9 for m in members):
                members.append(b)
                todo.append(b)
                if len(members) > bound:
                    raise NotClosed(f"more than {bound} directions")
    return DirectionSet(th, tuple(sorted(members)), reflection_group_order(poly))


# --------------------------------------------------------------------------
# closed flow on rational tables


@dataclass(frozen=True)
class ClosedFlowReport:
    t0: object
    t1: object
    period: object
    closed: bool
    residual: float
    literal_period: object  # 2 t0 + t1, recorded for comparison only
    literal_residual: float
    exact: bool


def _time_to_a(table: AndreevTable, x, d, bound):
    """Ray parameter to the first Andreev side under plain specular dynamics."""
    pos, side, acc, t = x, None, 0, 0.0
    while True:
        cand, out, _ = _collide(table.base, pos, d, side, frozenset(), t)
        if cand.side in table.andreev_sides:
            return acc + cand.s
        acc += cand.s
        t += float(cand.tau)
        if t > bound:
            raise NoAHit(f"no Andreev hit within time {bound:g}")
        pos, d, side = cand.hit, out, cand.side


def _residual(table, start: AndreevPhasePoint, s, exact: bool):
    out = _flow_param(table, start, s)
    if isinstance(out, SingularityReport):
        return math.inf
    if exact and out.position == start.position and out.parity == start.parity:
        d, d0 = out.direction, start.direction
        if d[0] * d0[1] == d[1] * d0[0] and d[0] * d0[0] + d[1] * d0[1] > 0:
            return 0.0
    pos = math.hypot(float(out.position.x - start.position.x),
                     float(out.position.y - start.position.y))
    ang = abs(angle_diff(out.theta, start.theta))
    return pos + ang + (0.0 if out.parity == start.parity else 1.0)


def closed_flow_check(table: AndreevTable, x, theta, tol: float = 1e-9,
                      time_bound: float | None = None) -> ClosedFlowReport:
    """Compare the Andreev flow at the candidate period ``2 (t0 + t1)`` with the start.

    ``t0`` and ``t1`` are the forward and backward times from ``(x, theta)``
    to the Andreev sides under ordinary specular dynamics.  Exact when the
    table, ``x`` and a slope-vector ``theta`` are all rational.
    """
    x = Point(*x)
    d = direction_vector(theta)
    exact = table.exact and is_exact(x.x, x.y, d.x, d.y)
    bound = NO_A_HIT_FACTOR * table.base.diameter if time_bound is None else time_bound
    s0 = _time_to_a(table, x, d, bound)
    s1 = _time_to_a(table, x, Vec(-d.x, -d.y), bound)
    dn = norm(d)
    start = AndreevPhasePoint(x, d, 1)
    res = _residual(table, start, 2 * (s0 + s1), exact)
    lit = _residual(table, start, 2 * s0 + s1, exact)
    scale = dn if exact else float(dn)
    return ClosedFlowReport(s0 * scale, s1 * scale, 2 * (s0 + s1) * scale, res < tol, res,
                            (2 * s0 + s1) * scale, lit, exact)


__all__ = [
    "JacobianResult", "MeasureReport", "VolumeSignReport", "ClosedFlowReport", "DirectionSet",
    "RationalityReport", "analytic_jacobian", "numeric_jacobian", "jacobian_check",
    "collision_map", "check_measure_preservation", "flow_jacobian_sign", "direction_orbit",
    "is_rational", "rational_witness", "reflection_group_order", "closed_flow_check",
    "make_rng", "NearTangency", "ChartBreak", "TooManySingular", "InsufficientSamples",
    "ItineraryMismatch", "NotClosed", "NoAHit",
]
