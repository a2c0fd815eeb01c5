"""Verification suites shared by the command line and the acceptance tests.

Every suite returns ``(records, passed)``.  Records are plain dicts, one per
check, built only from ints, strings, bools and floats so that dumping them
with ``json.dumps(..., sort_keys=True)`` is byte-for-byte reproducible for a
fixed seed.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .andreev import (
    AndreevPhasePoint,
    AndreevTable,
    andreev_orbit,
    andreev_step,
    glued_step,
    make_andreev_table,
    to_two_copy,
)
from .billiard import ANDREEV, SPECULAR, Singularity
from .fractal import (
    ANTI_PARALLEL,
    PASS_THROUGH,
    DyadicBasepoint,
    NotchSpec,
    SingularHit,
    notch_scan,
    tfractal_theorem_check,
)
from .geometry import CornerHit, GeometryError, Point, ray_cast, reflect_vector
from .verify import (
    ChartBreak,
    InsufficientSamples,
    ItineraryMismatch,
    NearTangency,
    NoAHit,
    TooManySingular,
    check_measure_preservation,
    closed_flow_check,
    flow_jacobian_sign,
    jacobian_check,
    make_rng,
)


def num(x):
    """JSON-safe number: rationals as ``"p/q"`` strings, non-finite floats as None."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return x
    x = float(x)
    return x if math.isfinite(x) else None


def unit_square_table(exact: bool = False) -> AndreevTable:
    """Unit square with its right side (index 1) Andreev."""
    one = Fraction(1) if exact else 1.0
    return make_andreev_table([(0 * one, 0 * one), (one, 0 * one), (one, one), (0 * one, one)],
                              [1], exact=exact)


def right_triangle_table(exact: bool = False) -> AndreevTable:
    """Right isosceles triangle (angles pi/2, pi/4, pi/4) with its leg on x = 0 Andreev."""
    one = Fraction(1) if exact else 1.0
    return make_andreev_table([(0 * one, 0 * one), (one, 0 * one), (0 * one, one)], [2], exact=exact)


def random_interior_point(table, rng, margin: float = 1e-3) -> Point:
    poly = table.base if isinstance(table, AndreevTable) else table
    x0, y0, x1, y1 = poly.bbox
    while True:
        p = Point(float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
        if poly.contains(p, tol=0.0) and all(_dist_to_side(p, s) > margin for s in poly.sides):
            return p


def _dist_to_side(p, side) -> float:
    ax, ay = float(side.a.x), float(side.a.y)
    ex, ey = float(side.vector.x), float(side.vector.y)
    u = ((p.x - ax) * ex + (p.y - ay) * ey) / (ex * ex + ey * ey)
    u = min(1.0, max(0.0, u))
    return math.hypot(p.x - ax - u * ex, p.y - ay - u * ey)


# --------------------------------------------------------------------------


def jacobian_suite(table: AndreevTable, n: int = 100, seed: int = 0, tol: float = 1e-5):
    """Finite-difference vs analytic collision-map derivative at random boundary points."""
    rng = make_rng(seed)
    records = []
    while len(records) < n:
        side = int(rng.integers(table.base.side_count))
        L = float(table.base.sides[side].length)
        r = float(rng.uniform(0.02, 0.98)) * L
        phi = float(rng.uniform(-1.4, 1.4))
        try:
            res = jacobian_check(table, (side, r, phi))
        except (ChartBreak, NearTangency):
            continue
        ok = res.max_rel_entry_error < tol and res.det_rel_error < tol
        records.append({
            "suite": "jacobian", "index": len(records), "seed": seed, "side": side, "r": r,
            "phi": phi, "phi_prime": res.phi_prime, "tau": res.tau, "target_side": res.target_side,
            "max_rel_entry_error": res.max_rel_entry_error, "det_rel_error": res.det_rel_error,
            "pass": bool(ok),
        })
    return records, all(r["pass"] for r in records)


def random_regions(table: AndreevTable, count: int, rng):
    out = []
    for _ in range(count):
        side = int(rng.integers(table.base.side_count))
        L = float(table.base.sides[side].length)
        r0 = float(rng.uniform(0.02, 0.6)) * L
        r1 = r0 + float(rng.uniform(0.1, 0.38)) * L
        p0 = float(rng.uniform(-1.4, 0.6))
        p1 = min(1.4, p0 + float(rng.uniform(0.2, 1.2)))
        out.append((side, (r0, r1), (p0, p1)))
    return out


def _measure_record(rep, label, tol, seed):
    return {
        "suite": "measure", "check": label, "seed": seed, "n": rep.n_samples,
        "region": None if rep.region is None else [rep.region[0], list(rep.region[1]),
                                                   list(rep.region[2])],
        "steps": rep.steps, "measure_before": num(rep.measure_before),
        "measure_after": num(rep.measure_after), "relative_error": num(rep.relative_error),
        "n_singular": rep.n_singular, "pass": bool(rep.relative_error < tol),
    }


def measure_suite(table: AndreevTable, regions: int = 10, n: int = 100_000, seed: int = 0,
                  tol: float = 1e-2, total: float | None = None):
    """Pushforward of ``cos(phi) dr dphi`` over random rectangles, plus the total measure.

    ``total`` is the expected measure of the whole phase space (``2 * perimeter``).
    Raises ``InsufficientSamples`` for ``n < 1000``.
    """
    if n < 1000:
        raise InsufficientSamples(f"n = {n} is below the minimum of 1000")
    rng = make_rng(seed)
    records = []
    for i, region in enumerate(random_regions(table, regions, rng)):
        try:
            rep = check_measure_preservation(table, region, n, seed + 1 + i)
        except TooManySingular as exc:
            records.append({"suite": "measure", "check": f"region-{i}", "seed": seed + 1 + i,
                            "error": str(exc), "pass": False})
            continue
        records.append(_measure_record(rep, f"region-{i}", tol, seed + 1 + i))
    rep = check_measure_preservation(table, None, n, seed + regions + 1)
    expected = 2.0 * table.base.perimeter if total is None else total
    rel = abs(rep.measure_before - expected) / expected
    rec = _measure_record(rep, "total", tol, seed + regions + 1)
    rec.update(expected_total=num(expected), total_relative_error=num(rel),
               **{"pass": bool(rel < tol and rep.relative_error < tol)})
    records.append(rec)
    return records, all(r["pass"] for r in records)


def _sample_segment(table: AndreevTable, rng, kind: str):
    """Random state and time whose flow has no collision (``kind == "free"``)
    or exactly one collision of the given kind."""
    poly = table.base
    while True:
        p = random_interior_point(table, rng, margin=1e-2)
        th = float(rng.uniform(0.0, 2.0 * math.pi))
        d = (math.cos(th), math.sin(th))
        try:
            first = ray_cast(p, d, poly)
        except CornerHit:
            continue
        if kind == "free":
            t = float(rng.uniform(0.05, 0.95)) * float(first.tau)
        else:
            hit_kind = ANDREEV if first.side in table.andreev_sides else SPECULAR
            if hit_kind != kind:
                continue
            try:
                out = (-d[0], -d[1]) if hit_kind == ANDREEV else \
                    reflect_vector(d, poly.sides[first.side])
                second = ray_cast(first.hit, out, poly, first.side)
            except GeometryError:
                continue
            t = float(first.tau) + float(rng.uniform(0.05, 0.95)) * float(second.tau)
        try:
            return p, th, t, flow_jacobian_sign(table, AndreevPhasePoint(p, th, 1), t)
        except (ItineraryMismatch, Singularity):
            continue


def volume_sign_suite(table: AndreevTable, n_each: int = 50, seed: int = 0, tol: float = 1e-5):
    """3x3 flow-Jacobian determinants across free flight, one specular and one Andreev hit."""
    rng = make_rng(seed)
    records = []
    for kind, want_a, want_s in (("free", 0, 0), (SPECULAR, 0, 1), (ANDREEV, 1, 0)):
        for i in range(n_each):
            p, th, t, rep = _sample_segment(table, rng, kind)
            expected = -1.0 if want_a else 1.0
            ok = (rep.andreev_hits, rep.specular_hits) == (want_a, want_s) and \
                abs(rep.det_numeric - expected) < tol
            records.append({
                "suite": "volume-sign", "segment_kind": kind, "index": i, "seed": seed,
                "x": p.x, "y": p.y, "theta": th, "t": t, "andreev_hits": rep.andreev_hits,
                "specular_hits": rep.specular_hits, "det_numeric": rep.det_numeric,
                "expected": expected, "pass": bool(ok),
            })
    return records, all(r["pass"] for r in records)


def closed_flow_suite(table: AndreevTable, n: int = 100, seed: int = 0, tol: float = 1e-9,
                      min_closed: int | None = None):
    """Closedness at period ``2 (t0 + t1)`` for ``n`` random basepoints and directions.

    The suite passes when at least ``min_closed`` (default 99% of ``n``) close.
    """
    min_closed = math.ceil(0.99 * n) if min_closed is None else min_closed
    rng = make_rng(seed)
    records = []
    for i in range(n):
        p = random_interior_point(table, rng)
        th = float(rng.uniform(0.0, 2.0 * math.pi))
        rec = {"suite": "closed-flow", "index": i, "seed": seed, "x": p.x, "y": p.y, "theta": th}
        try:
            rep = closed_flow_check(table, p, th, tol)
        except (NoAHit, Singularity) as exc:
            rec.update(error=type(exc).__name__, closed=False)
        else:
            rec.update(t0=num(rep.t0), t1=num(rep.t1), period=num(rep.period),
                       residual=num(rep.residual), literal_period=num(rep.literal_period),
                       literal_residual=num(rep.literal_residual), closed=bool(rep.closed))
        rec["pass"] = rec["closed"]
        records.append(rec)
    n_closed = sum(r["closed"] for r in records)
    records.append({"suite": "closed-flow", "check": "summary", "seed": seed, "n": n,
                    "closed": n_closed, "required": min_closed, "pass": n_closed >= min_closed})
    return records, n_closed >= min_closed


def exact_square_closed_flow(a=Fraction(1, 4), b=Fraction(1, 2)):
    """Horizontal orbit on the exact unit square: period must be exactly 4."""
    table = unit_square_table(exact=True)
    rep = closed_flow_check(table, (a, b), (1, 0))
    ok = rep.exact and rep.period == 4 and rep.residual == 0 and \
        rep.t0 == 1 - a and rep.t1 == 1 + a
    rec = {"suite": "closed-flow", "check": "exact-square", "x": [num(a), num(b)],
           "direction": [1, 0], "t0": num(rep.t0), "t1": num(rep.t1), "period": num(rep.period),
           "residual": num(rep.residual), "exact": rep.exact, "pass": bool(ok)}
    return [rec], bool(ok)


def parity_suite(table: AndreevTable, n_orbits: int = 1000, max_events: int = 1000, seed: int = 0):
    """Parity after each event equals ``(-1) ** (Andreev hits so far)``."""
    rng = make_rng(seed)
    bad = 0
    total_events = 0
    for _ in range(n_orbits):
        p = random_interior_point(table, rng)
        th = float(rng.uniform(0.0, 2.0 * math.pi))
        length = int(rng.integers(1, max_events + 1))
        orb = andreev_orbit(table, AndreevPhasePoint(p, th, 1), length)
        hits = 0
        for ev in orb.events:
            hits += ev.kind == ANDREEV
            if ev.parity_after != (-1) ** hits:
                bad += 1
        total_events += len(orb.events)
    rec = {"suite": "parity", "seed": seed, "orbits": n_orbits, "events": total_events,
           "mismatches": bad, "pass": bad == 0}
    return [rec], bad == 0


def two_copy_suite(table: AndreevTable, n: int = 1000, steps: int = 5, seed: int = 0,
                   tol: float = 1e-10):
    """Parity stepping, viewed in the two copies, agrees with the glued stepping."""
    rng = make_rng(seed)
    mirrored = table.mirrored_base()
    worst = 0.0
    mismatched = 0
    done = 0
    while done < n:
        p = random_interior_point(table, rng)
        th = float(rng.uniform(0.0, 2.0 * math.pi))
        parity = 1 if rng.integers(2) else -1
        state = AndreevPhasePoint(p, th, parity)
        glued = to_two_copy(state, table)
        try:
            for _ in range(steps):
                _, state = andreev_step(table, state)
                glued, _ = glued_step(table, glued, mirrored)
                view = to_two_copy(state, table)
                err = max(abs(view.position.x - glued.position.x),
                          abs(view.position.y - glued.position.y),
                          abs(view.direction.x - glued.direction.x),
                          abs(view.direction.y - glued.direction.y))
                if view.copy != glued.copy or view.side != glued.side:
                    err = math.inf
                worst = max(worst, err)
                if err > tol:
                    mismatched += 1
                    break
        except (Singularity, GeometryError):
            continue
        done += 1
    rec = {"suite": "two-copy", "seed": seed, "initial_conditions": n, "steps": steps,
           "max_error": num(worst), "mismatched": mismatched, "pass": mismatched == 0}
    return [rec], mismatched == 0


def notch_suite(n: int = 1000, direction=(1, 2)):
    """Scan basepoints on the bottom of the notched 10 x 1 rectangle at one exact direction."""
    spec = NotchSpec(Fraction(10), Fraction(1), 2, Fraction(4), Fraction(1), Fraction(1, 2))
    basepoints = [(Fraction(10 * (2 * k + 1), 2 * n), Fraction(0)) for k in range(n)]
    verdicts = notch_scan(spec, tuple(Fraction(c) for c in direction), basepoints)
    counts: dict[str, int] = {}
    for v in verdicts:
        key = getattr(v, "kind", type(v).__name__)
        counts[key] = counts.get(key, 0) + 1
    ok = counts.get(ANTI_PARALLEL, 0) >= 1 and counts.get(PASS_THROUGH, 0) >= 1
    rec = {"suite": "notch", "basepoints": n, "direction": [num(Fraction(c)) for c in direction],
           "counts": dict(sorted(counts.items())), "pass": ok}
    return [rec], ok


def tfractal_suite(levels=(1, 2), ps=(3, 5), x0s=("1/3", "1/5", "2/3"), dyadic="1/4"):
    records = []
    for level in levels:
        for p in ps:
            for x0 in x0s:
                rec = {"suite": "tfractal", "level": level, "p": p, "x0": x0}
                try:
                    rep = tfractal_theorem_check(level, p, x0)
                except SingularHit as exc:
                    rec.update(error=str(exc), **{"pass": False})
                else:
                    rec.update(periodic=rep.periodic, anti_parallel_exit=rep.anti_parallel_exit,
                               period_events=rep.period_events, excursions=rep.excursions,
                               **{"pass": rep.periodic and rep.anti_parallel_exit})
                records.append(rec)
    if dyadic is not None:
        try:
            tfractal_theorem_check(levels[0], ps[0], dyadic)
            rejected = False
        except DyadicBasepoint:
            rejected = True
        records.append({"suite": "tfractal", "check": "dyadic-rejected", "x0": dyadic,
                        "pass": rejected})
    return records, all(r["pass"] for r in records)
