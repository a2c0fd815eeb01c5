import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from andreev_billiards.andreev import AndreevPhasePoint, make_andreev_table
from andreev_billiards.billiard import Singularity
from andreev_billiards.geometry import validate_polygon
from andreev_billiards.verify import (
    ChartBreak,
    InsufficientSamples,
    ItineraryMismatch,
    NearTangency,
    NoAHit,
    TooManySingular,
    analytic_jacobian,
    check_measure_preservation,
    closed_flow_check,
    direction_orbit,
    flow_jacobian_sign,
    is_rational,
    jacobian_check,
    make_rng,
    numeric_jacobian,
    rational_witness,
)

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


@pytest.fixture
def table():
    return make_andreev_table(SQUARE, [1])


def test_analytic_jacobian_examples():
    np.testing.assert_allclose(analytic_jacobian(0, 0, 1), -np.array([[1, 1], [0, 1]]))
    m = analytic_jacobian(math.pi / 3, 0, 2)
    np.testing.assert_allclose(m, -np.array([[0.5, 2], [0, 1]]), atol=1e-15)
    assert np.linalg.det(m) == pytest.approx(0.5)
    with pytest.raises(NearTangency):
        analytic_jacobian(0.0, math.pi / 2 - 1e-12, 1.0)


@settings(max_examples=50)
@given(st.floats(-1.4, 1.4), st.floats(-1.4, 1.4), st.floats(0.01, 10))
def test_analytic_determinant(phi, phi_p, tau):
    m = analytic_jacobian(phi, phi_p, tau)
    assert np.linalg.det(m) == pytest.approx(math.cos(phi) / math.cos(phi_p), rel=1e-10)


@pytest.mark.parametrize("at", [(2, 0.4, 0.3), (0, 0.7, -0.5), (3, 0.5, 0.1), (0, 0.2, 0.9)])
def test_numeric_matches_analytic(table, at):
    res = jacobian_check(table, at)
    assert res.max_rel_entry_error < 1e-5
    assert res.det_rel_error < 1e-5


def test_chart_break_near_corner(table):
    # from (0.5, 0) aimed at the corner (1, 1)
    phi = -math.atan(0.5)
    with pytest.raises(ChartBreak):
        numeric_jacobian(table, (0, 0.5, phi + 1e-7))


def test_measure_full_phase_space(table):
    rep = check_measure_preservation(table, None, 20_000, seed=4)
    assert rep.measure_before == pytest.approx(8.0, rel=2e-2)
    assert rep.relative_error < 1e-2


@pytest.mark.parametrize("steps", [1, 2])
def test_measure_one_side(table, steps):
    region = (2, (0.0, 1.0), (-math.pi / 4, math.pi / 4))
    rep = check_measure_preservation(table, region, 20_000, seed=1, steps=steps)
    assert rep.relative_error < 1e-2
    assert rep.measure_before == pytest.approx(math.sqrt(2), rel=2e-2)


def test_measure_guards(table):
    with pytest.raises(InsufficientSamples):
        check_measure_preservation(table, None, 999)
    # a thin strip of directions aimed at the far corner is mostly singular
    phi = -math.atan(0.5)
    with pytest.raises(TooManySingular):
        check_measure_preservation(table, (0, (0.5 - 1e-7, 0.5 + 1e-7), (phi - 1e-7, phi + 1e-7)), 2000)


def test_sampler_is_reproducible():
    a = make_rng(7).uniform(size=5)
    b = make_rng(7).uniform(size=5)
    assert np.array_equal(a, b)


def test_volume_sign_examples(table):
    free = flow_jacobian_sign(table, AndreevPhasePoint((0.5, 0.5), 0.3), 0.2)
    assert free.det_numeric == pytest.approx(1.0, abs=1e-6)
    bounce = flow_jacobian_sign(table, AndreevPhasePoint((0.5, 0.4), 1.9), 0.9)
    assert (bounce.andreev_hits, bounce.specular_hits) == (0, 1)
    assert bounce.det_numeric == pytest.approx(1.0, abs=1e-5)
    andr = flow_jacobian_sign(table, AndreevPhasePoint((0.5, 0.4), 0.3), 0.9)
    assert andr.andreev_hits == 1
    assert andr.det_numeric == pytest.approx(-1.0, abs=1e-5)
    assert andr.expected_sign == -1


def test_volume_sign_several_hits(table):
    rep = flow_jacobian_sign(table, AndreevPhasePoint((0.3, 0.4), 0.5), 4.0)
    assert abs(abs(rep.det_numeric) - 1) < 1e-5
    assert math.copysign(1, rep.det_numeric) == rep.expected_sign


def test_itinerary_mismatch(table):
    # flow through the corner neighbourhood: neighbours split between sides
    with pytest.raises(ItineraryMismatch):
        flow_jacobian_sign(table, AndreevPhasePoint((0.5, 0.5), math.pi / 4 + 1e-7), 1.0, h=1e-6)


def test_direction_orbit_square():
    sq = validate_polygon(SQUARE)
    d = direction_orbit(0.3, sq)
    expected = sorted(x % (2 * math.pi) for x in (0.3, -0.3, math.pi - 0.3, math.pi + 0.3))
    assert d.members == pytest.approx(expected)
    assert d.group_order == 4
    assert len(direction_orbit(0.0, sq)) == 2


def test_direction_orbit_equilateral():
    eq = validate_polygon([(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)])
    d = direction_orbit(0.3, eq)
    assert len(d) == 6
    assert d.group_order == 6


def test_direction_orbit_exact():
    tri = validate_polygon([(F(0), F(0)), (F(1), F(0)), (F(0), F(1))])
    d = direction_orbit((F(2), F(1)), tri)
    assert len(d) == 8
    assert (F(-1), F(-2)) in d.vectors


@given(st.floats(0, 2 * math.pi))
def test_direction_orbit_group_property(theta):
    tri = validate_polygon([(0, 0), (1, 0), (0, 1)])
    d = direction_orbit(theta, tri)
    for m in d.members:
        other = direction_orbit(m, tri)
        assert other.members == pytest.approx(d.members, abs=1e-9)


def test_is_rational():
    rep = is_rational(validate_polygon(SQUARE))
    assert rep and rep.witnesses == ((1, 2),) * 4
    rep = is_rational(validate_polygon([(0, 0), (1, 0), (0, 1)]))
    assert rep and sorted(rep.witnesses) == [(1, 2), (1, 4), (1, 4)]
    one_radian = validate_polygon([(0, 0), (1, 0), (math.cos(1), math.sin(1))])
    assert not is_rational(one_radian)


def test_rational_witness_is_not_fooled_by_convergents():
    # 1/pi has the convergent 33102/103993 within 2e-10
    assert rational_witness(1 / math.pi) is None
    assert rational_witness(0.25) == (1, 4)
    assert rational_witness(2 / 7) == (2, 7)


def test_closed_flow_square_horizontal(table):
    rep = closed_flow_check(table, (0.25, 0.6), 0.0)
    assert rep.t0 == pytest.approx(0.75) and rep.t1 == pytest.approx(1.25)
    assert rep.period == pytest.approx(4.0)
    assert rep.closed
    assert rep.literal_period == pytest.approx(2.75)


def test_closed_flow_exact():
    t = make_andreev_table([(F(x), F(y)) for x, y in SQUARE], [1])
    rep = closed_flow_check(t, (F(1, 3), F(1, 2)), (1, 0))
    assert rep.exact
    assert rep.period == 4 and isinstance(rep.period, F)
    assert rep.residual == 0
    assert rep.t0 == F(2, 3) and rep.t1 == F(4, 3)


def test_closed_flow_slope_half(table):
    rep = closed_flow_check(table, (0.5, 0.5), math.atan(0.5))
    assert rep.closed and rep.residual < 1e-9


def test_closed_flow_vertical(table):
    with pytest.raises(NoAHit):
        closed_flow_check(table, (0.5, 0.5), math.pi / 2)


@settings(max_examples=30)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0, 2 * math.pi))
def test_closed_flow_random(x, y, theta):
    table = make_andreev_table(SQUARE, [1])
    try:
        rep = closed_flow_check(table, (x, y), theta)
    except (NoAHit, Singularity):
        return
    assert rep.closed, rep.residual
