import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from andreev_billiards.andreev import (
    MINUS,
    PLUS,
    AndreevPhasePoint,
    InvalidAndreevTable,
    TwoCopyPoint,
    andreev_flow,
    andreev_orbit,
    andreev_step,
    from_two_copy,
    glued_step,
    make_andreev_table,
    to_two_copy,
)
from andreev_billiards.billiard import ANDREEV, MaxEvents, Periodic, PhasePoint, SingularityReport, orbit
from andreev_billiards.geometry import angle_diff

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


@pytest.fixture
def table():
    return make_andreev_table(SQUARE, [1])


def test_default_mirror_axis(table):
    assert table.mirror_axis == 1


def test_validation():
    with pytest.raises(InvalidAndreevTable):
        make_andreev_table(SQUARE, [])
    with pytest.raises(InvalidAndreevTable):
        make_andreev_table(SQUARE, [0])  # horizontal
    with pytest.raises(InvalidAndreevTable):
        make_andreev_table(SQUARE, [1], mirror_axis=0.5)
    with pytest.raises(InvalidAndreevTable):
        make_andreev_table(SQUARE, [7])


def test_step_normal_incidence(table):
    ev, new = andreev_step(table, AndreevPhasePoint((0.5, 0.5), 0.0))
    assert ev.kind == ANDREEV
    assert ev.hit == pytest.approx((1, 0.5))
    assert new.theta == pytest.approx(math.pi)
    assert new.parity == -1


def test_double_andreev_restores_parity():
    t = make_andreev_table([(0, 0), (2, 0), (2, 1), (0, 1)], [1, 3])
    s = AndreevPhasePoint((0.5, 0.5), 0.3)
    _, s1 = andreev_step(t, s)
    _, s2 = andreev_step(t, AndreevPhasePoint(s1.position, s1.direction, s1.parity, s1.side))
    assert s1.parity == -1
    assert s2.parity == 1
    assert abs(angle_diff(s2.theta, 0.3)) < 1e-12


def test_square_orbit_hand_trace(table):
    o = andreev_orbit(table, AndreevPhasePoint((0.5, 0.5), 0.0), 100, periodicity="float")
    assert isinstance(o.termination, Periodic)
    assert o.termination.period_events == 4
    assert o.termination.period_length == pytest.approx(4.0)
    assert [e.kind for e in o.events] == ["andreev", "specular", "andreev", "specular"]
    assert [e.parity_after for e in o.events] == [-1, -1, 1, 1]


def test_exact_square_orbit():
    t = make_andreev_table([(F(x), F(y)) for x, y in SQUARE], [1])
    o = andreev_orbit(t, AndreevPhasePoint((F(1, 2), F(1, 2)), (1, 0)), 100, periodicity="exact")
    assert o.termination == Periodic(4, 4)
    assert [e.parity_after for e in o.events] == [-1, -1, 1, 1]


def test_orbit_max_events(table):
    o = andreev_orbit(table, AndreevPhasePoint((0.3, 0.2), 0.7), 5)
    assert len(o.events) == 5
    assert isinstance(o.termination, MaxEvents)


def test_vertical_orbit_matches_classical(table):
    a = andreev_orbit(table, AndreevPhasePoint((0.5, 0.0), math.pi / 2, side=0), 10)
    c = orbit(table.base, PhasePoint((0.5, 0.0), math.pi / 2, side=0), 10)
    assert [e.hit for e in a.events] == [e.hit for e in c.events]
    assert {e.parity_after for e in a.events} == {1}


def test_retro_reflection_is_exact():
    t = make_andreev_table([(F(x), F(y)) for x, y in SQUARE], [1])
    o = andreev_orbit(t, AndreevPhasePoint((F(1, 3), F(1, 5)), (3, 2)), 200)
    hits = [e for e in o.events if e.kind == ANDREEV]
    assert hits
    for e in hits:
        assert e.outgoing == (-e.incoming.x, -e.incoming.y)


def test_flow_zero_and_period(table):
    s = AndreevPhasePoint((0.25, 0.5), 0.0)
    assert andreev_flow(table, s, 0) == s
    back = andreev_flow(table, s, 4.0)
    assert back.position == pytest.approx((0.25, 0.5))
    assert back.parity == 1
    assert abs(angle_diff(back.theta, 0.0)) < 1e-12


@settings(max_examples=100)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0, 2 * math.pi),
       st.floats(0.01, 6.0), st.sampled_from([1, -1]))
def test_flow_reversible(x, y, theta, t, parity):
    table = make_andreev_table(SQUARE, [1])
    s = AndreevPhasePoint((x, y), theta, parity)
    fwd = andreev_flow(table, s, t)
    if isinstance(fwd, SingularityReport):
        return
    back = andreev_flow(table, fwd, -t)
    if isinstance(back, SingularityReport):
        return
    assert back.position == pytest.approx(s.position, abs=1e-9)
    assert abs(angle_diff(back.theta, theta)) < 1e-9
    assert back.parity == parity


def test_two_copy_examples(table):
    p = to_two_copy(AndreevPhasePoint((0.5, 0.5), math.pi, -1), table)
    assert p.copy == MINUS
    assert p.position == pytest.approx((1.5, 0.5))
    assert abs(angle_diff(math.atan2(p.direction.y, p.direction.x), 0.0)) < 1e-12
    q = from_two_copy(TwoCopyPoint(MINUS, (1.5, 0.5), 0.0), table)
    assert q.parity == -1
    assert q.position == pytest.approx((0.5, 0.5))
    assert q.theta == pytest.approx(math.pi)
    plus = to_two_copy(AndreevPhasePoint((0.2, 0.3), 1.0), table)
    assert plus.copy == PLUS and plus.position == (0.2, 0.3)


@settings(max_examples=200)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0, 2 * math.pi), st.sampled_from([1, -1]))
def test_two_copy_round_trip(x, y, theta, parity):
    table = make_andreev_table(SQUARE, [1])
    s = AndreevPhasePoint((x, y), theta, parity)
    back = from_two_copy(to_two_copy(s, table), table)
    assert back.parity == parity
    assert back.position == pytest.approx(s.position, abs=1e-15)
    assert back.direction == s.direction


@given(st.fractions(0, 1), st.fractions(0, 1), st.integers(-5, 5), st.integers(-5, 5),
       st.sampled_from([1, -1]))
def test_two_copy_round_trip_exact(x, y, dx, dy, parity):
    if dx == dy == 0:
        return
    table = make_andreev_table([(F(a), F(b)) for a, b in SQUARE], [1])
    s = AndreevPhasePoint((x, y), (F(dx), F(dy)), parity)
    assert from_two_copy(to_two_copy(s, table), table) == s


@settings(max_examples=200)
@given(st.floats(0.02, 0.98), st.floats(0.02, 0.98), st.floats(0, 2 * math.pi), st.sampled_from([1, -1]))
def test_glued_stepping_commutes(x, y, theta, parity):
    table = make_andreev_table([(0, 0), (2, 0), (2, 1), (0.5, 1.5), (0, 1)], [1])
    s = AndreevPhasePoint((x, y), theta, parity)
    g = to_two_copy(s, table)
    mirrored = table.mirrored_base()
    for _ in range(4):
        try:
            _, s = andreev_step(table, s)
            g, _ = glued_step(table, g, mirrored)
        except Exception:
            return
        view = to_two_copy(s, table)
        assert view.copy == g.copy
        assert view.position == pytest.approx(g.position, abs=1e-10)
        assert view.direction == pytest.approx(g.direction, abs=1e-10)


def test_parity_counts(table):
    o = andreev_orbit(table, AndreevPhasePoint((0.31, 0.17), 0.77, -1), 500)
    hits = 0
    for e in o.events:
        hits += e.kind == ANDREEV
        assert e.parity_after == -1 * (-1) ** hits
