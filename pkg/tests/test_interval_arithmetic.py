from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import iv

from hankel_data_model import InvalidInputError
from interval_arithmetic import Box2, Interval, poly_eval_interval
from series_algebra import MultiPoly, PLANE_VARS, poly_eval_complex


unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


def interval_from(a, b):
    return Interval(min(a, b), max(a, b))


def test_exact_operations_stay_exact():
    assert Interval.point(0.5) + Interval.point(0.25) == Interval.point(0.75)
    assert Interval.point(3.0) * Interval.point(7.0) == Interval.point(21.0)
    assert (Interval(0.0, 2.0) * 0).is_point


def test_inexact_operations_are_widened_outward():
    third = Interval.from_rational(Fraction(1, 3))
    assert third.lo < third.hi
    assert third.contains(Fraction(1, 3))
    s = Interval.point(0.1) + Interval.point(0.2)
    assert s.contains(Fraction(0.1) + Fraction(0.2))
    assert s.lo < s.hi


@given(finite, finite, finite, finite)
@settings(max_examples=200)
def test_arithmetic_encloses_exact_endpoint_results(a, b, c, d):
    x, y = interval_from(a, b), interval_from(c, d)
    exact = [Fraction(p) * Fraction(q) for p in (x.lo, x.hi) for q in (y.lo, y.hi)]
    product = x * y
    assert all(product.contains(v) for v in exact)
    total = x + y
    assert total.contains(Fraction(x.lo) + Fraction(y.lo))
    assert total.contains(Fraction(x.hi) + Fraction(y.hi))


def test_even_powers_straddling_zero():
    assert Interval(-2.0, 1.0) ** 2 == Interval(0.0, 4.0)
    assert Interval(-2.0, -1.0) ** 3 == Interval(-8.0, -1.0)


def test_invalid_interval():
    with pytest.raises(InvalidInputError):
        Interval(1.0, 0.0)
    with pytest.raises(InvalidInputError):
        Interval(0.0, 1.0).intersect(Interval(2.0, 3.0))


def test_box_bisect_splits_wider_side():
    left, right = Box2.from_bounds(0.0, 1.0, 0.0, 0.5).bisect()
    assert left.x == Interval(0.0, 0.5) and right.x == Interval(0.5, 1.0)
    low, high = Box2.from_bounds(0.0, 0.0, 0.0, 1.0).bisect()
    assert low.y == Interval(0.0, 0.5) and high.y == Interval(0.5, 1.0)
    with pytest.raises(InvalidInputError):
        Box2.from_bounds(0.5, 0.5, 0.25, 0.25).bisect()


def test_corners_are_deduplicated():
    assert len(Box2.from_bounds(0.0, 1.0, 0.0, 1.0).corners) == 4
    assert len(Box2.from_bounds(0.0, 1.0, 0.5, 0.5).corners) == 2


G1 = MultiPoly.from_expr("-128*y**3 + (144 - 144*x + 12*x**2)*y - 72*x**2 + 72*x + 7", PLANE_VARS)


@given(unit, unit, unit, unit, unit, unit)
@settings(max_examples=100, deadline=None)
def test_enclosure_contains_exact_values(a, b, c, d, s, t):
    box = Box2(interval_from(a, b), interval_from(c, d))
    px = box.x.lo + s * (box.x.hi - box.x.lo)
    py = box.y.lo + t * (box.y.hi - box.y.lo)
    px = min(max(px, box.x.lo), box.x.hi)
    py = min(max(py, box.y.lo), box.y.hi)
    value = G1.evaluate_exact((px, py))
    assert poly_eval_interval(G1, box).contains(value)
    assert poly_eval_interval(G1, box, centered=True).contains(value)


def test_centered_form_is_opt_in_and_tighter_on_small_boxes():
    box = Box2.from_bounds(0.4, 0.41, 0.6, 0.61)
    plain = poly_eval_interval(G1, box)
    assert plain == poly_eval_interval(G1, box, centered=False)
    centered = poly_eval_interval(G1, box, centered=True)
    assert centered.width < plain.width
    assert plain.lo <= centered.lo and centered.hi <= plain.hi


def test_plain_enclosure_is_the_monomial_sum():
    # the two terms are enclosed independently; the true range is [-1, 0]
    p = MultiPoly.from_expr("x*y - x", PLANE_VARS)
    assert poly_eval_interval(p, Box2.from_bounds(0.0, 1.0, 0.0, 1.0)) == Interval(-1.0, 1.0)


monomials = st.tuples(st.integers(0, 4), st.integers(0, 4)).filter(lambda m: sum(m) <= 4)
coefficients = st.builds(Fraction, st.integers(-500, 500), st.integers(1, 64))
polynomials = st.dictionaries(monomials, coefficients, min_size=1, max_size=8).map(
    lambda terms: MultiPoly.from_terms(terms, PLANE_VARS))
coordinates = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


@given(polynomials, coordinates, coordinates, coordinates, coordinates, unit, unit, st.booleans())
@settings(max_examples=1000, deadline=None)
def test_random_polynomial_enclosures_contain_every_point(p, a, b, c, d, s, t, centered):
    box = Box2(interval_from(a, b), interval_from(c, d))
    px = min(max(box.x.lo + s * box.x.width, box.x.lo), box.x.hi)
    py = min(max(box.y.lo + t * box.y.width, box.y.lo), box.y.hi)
    enclosure = poly_eval_interval(p, box, centered=centered)
    assert enclosure.contains(p.evaluate_exact((px, py)))
    assert enclosure.lo <= poly_eval_complex(p, (px, py)).real + 1e-9 * (1 + abs(enclosure.lo))
    assert poly_eval_complex(p, (px, py)).real - 1e-9 * (1 + abs(enclosure.hi)) <= enclosure.hi


def test_mpmath_endpoints_round_outward():
    third = Interval.from_iv(iv.mpf(1) / 3)
    assert third.contains(Fraction(1, 3)) and third.lo < third.hi
    assert Interval.from_iv(iv.mpf([0.25, 0.5])) == Interval(0.25, 0.5)


def test_exact_zero_at_a_point():
    p = MultiPoly.from_expr("6*x - 3", PLANE_VARS)
    assert poly_eval_interval(p, Box2.from_bounds(0.5, 0.5, 0.0, 0.0)) == Interval(0.0, 0.0)


def test_poly_eval_interval_requires_plane_variables():
    p = MultiPoly.from_expr("c1", ('c1',))
    with pytest.raises(InvalidInputError):
        poly_eval_interval(p, Box2.from_bounds(0.0, 1.0, 0.0, 1.0))
