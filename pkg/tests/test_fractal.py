from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from andreev_billiards.fractal import (
    ANTI_PARALLEL,
    PASS_THROUGH,
    DyadicBasepoint,
    InvalidSpec,
    LevelTooHigh,
    NeverEnters,
    NoExit,
    NotchSpec,
    TFractalSpec,
    build_notched_rect,
    build_tfractal,
    classify_perturbation_orbit,
    notch_mouth,
    tfractal_theorem_check,
)
from andreev_billiards.geometry import Point, validate_polygon

NOTCH = NotchSpec(F(10), F(1), 2, F(4), F(1), F(1, 2))


def test_notch_vertices():
    t = build_notched_rect(NOTCH)
    assert t.vertices == (
        (0, 0), (10, 0), (10, 1), (5, 1), (5, F(3, 2)), (4, F(3, 2)), (4, 1), (0, 1))
    assert t.exact


@pytest.mark.parametrize("side", [0, 1, 2, 3])
def test_notch_on_every_side(side):
    spec = NotchSpec(F(4), F(3), side, F(1), F(1, 2), F(1, 2))
    t = build_notched_rect(spec)
    assert t.side_count == 8
    assert t.area == 12 + F(1, 4)
    a, b = notch_mouth(spec)
    assert a != b


@pytest.mark.parametrize("kwargs", [
    dict(offset=F(0)),
    dict(offset=F(9), notch_width=F(1)),
    dict(depth=F(1)),
    dict(notch_width=F(0)),
])
def test_notch_invalid(kwargs):
    base = dict(width=F(10), height=F(1), side=2, offset=F(4), notch_width=F(1), depth=F(1, 2))
    base.update(kwargs)
    with pytest.raises(InvalidSpec):
        build_notched_rect(NotchSpec(**base))


def test_notch_dichotomy_examples():
    t = build_notched_rect(NOTCH)
    mouth = notch_mouth(NOTCH)
    # enters at x = 4.25: climbs 1/4 across the pocket, falls back out at 4.75
    v = classify_perturbation_orbit(t, mouth, (F(15, 4), F(0)), (1, 2))
    assert v.kind == PASS_THROUGH
    assert v.entry_event.point == (F(17, 4), 1)
    assert v.exit_event.point == (F(19, 4), 1)
    # enters at 4.625: the pocket wall at x = 5 sends it straight back
    v = classify_perturbation_orbit(t, mouth, (F(33, 8), F(0)), (1, 2))
    assert v.kind == ANTI_PARALLEL
    assert v.exit_event.direction == (-1, -2)


def test_notch_never_enters():
    t = build_notched_rect(NOTCH)
    with pytest.raises(NeverEnters):
        classify_perturbation_orbit(t, notch_mouth(NOTCH), (F(1), F(1, 2)), (1, 0), max_events=50)


def test_notch_no_exit():
    t = build_notched_rect(NOTCH)
    with pytest.raises(NoExit):
        # shallow direction: rattles between the pocket walls for about ten bounces
        classify_perturbation_orbit(t, notch_mouth(NOTCH), (F(41, 10), F(19, 20)), (10, 1),
                                    max_events=4)


def test_notch_classification_stable_under_tolerance():
    t = build_notched_rect(NotchSpec(10.0, 1.0, 2, 4.0, 1.0, 0.5))
    mouth = notch_mouth(NotchSpec(10.0, 1.0, 2, 4.0, 1.0, 0.5))
    for x0 in (3.6, 3.8, 4.1, 4.3):
        a = classify_perturbation_orbit(t, mouth, (x0, 0.0), (1.0, 2.0), tol=1e-9)
        b = classify_perturbation_orbit(t, mouth, (x0, 0.0), (1.0, 2.0), tol=5e-10)
        assert a.kind == b.kind


def test_tfractal_levels():
    assert build_tfractal(TFractalSpec(0)).side_count == 4
    one = build_tfractal(TFractalSpec(1))
    assert one.side_count == 12
    assert set(one.vertices) >= {(F(1, 4), 1), (F(3, 4), 1), (0, F(7, 4)), (1, F(7, 4))}
    for n in range(2, 5):
        t = build_tfractal(TFractalSpec(n))
        assert t.side_count == 4 + 8 * (2 ** n - 1)
        grid = 2 ** (n + 2)
        assert all((v.x * grid).denominator == 1 and (v.y * grid).denominator == 1
                   for v in t.vertices)
    with pytest.raises(LevelTooHigh):
        build_tfractal(TFractalSpec(7))


def test_tfractal_level_six_is_simple():
    t = build_tfractal(TFractalSpec(6))
    # revalidating runs the full self-intersection check again
    assert validate_polygon(t.vertices).side_count == t.side_count


@pytest.mark.parametrize("level", [1, 2, 3])
@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("x0", ["1/3", "1/5", "2/3", "3/7"])
def test_tfractal_theorem(level, p, x0):
    rep = tfractal_theorem_check(level, p, x0)
    assert rep.periodic
    assert rep.anti_parallel_exit


def test_tfractal_dyadic_rejected():
    with pytest.raises(DyadicBasepoint):
        tfractal_theorem_check(1, 3, F(1, 4))
    with pytest.raises(ValueError):
        tfractal_theorem_check(1, 4, F(1, 3))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.sampled_from([3, 5, 7]), st.integers(1, 40), st.integers(1, 40))
def test_tfractal_theorem_property(level, p, a, b):
    x0 = F(min(a, b), max(a, b) + 1)
    if x0.denominator & (x0.denominator - 1) == 0:
        return
    rep = tfractal_theorem_check(level, p, x0)
    assert rep.periodic and rep.anti_parallel_exit


def test_mouth_point_type():
    a, b = notch_mouth(NOTCH)
    assert isinstance(a, Point) and a == (5, 1) and b == (4, 1)
