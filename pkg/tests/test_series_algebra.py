from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hankel_data_model import InvalidInputError
from series_algebra import (
    MultiPoly, PLANE_VARS, SCHWARZ_VARS, TruncSeries, herglotz_expand, poly_eval_complex,
    schwarz_variables, series_mul,
)


coefficients = st.fractions(min_value=-20, max_value=20, max_denominator=12)
plane_terms = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)), coefficients, max_size=5,
)


def plane_poly(terms):
    return MultiPoly.from_terms(terms, PLANE_VARS)


def test_from_expr_reads_transcribed_text():
    p = MultiPoly.from_expr("7*x**3 - 72*x**2 + 72*x", PLANE_VARS)
    assert p.coefficient((3, 0)) == 7
    assert p.coefficient({'x': 2}) == -72
    assert p.coefficient((0, 1)) == 0
    assert p.total_degree == 3
    assert p.degree('y') == 0


def test_from_expr_rejects_unknown_symbols():
    with pytest.raises(InvalidInputError):
        MultiPoly.from_expr("x + z", PLANE_VARS)


def test_mixing_variable_sets_is_an_error():
    x = MultiPoly.variable('x', PLANE_VARS)
    c1 = MultiPoly.variable('c1', SCHWARZ_VARS)
    with pytest.raises(InvalidInputError):
        x + c1


@given(plane_terms, plane_terms, plane_terms)
@settings(max_examples=40, deadline=None)
def test_ring_distributivity(a, b, c):
    p, q, r = plane_poly(a), plane_poly(b), plane_poly(c)
    assert p * (q + r) == p * q + p * r
    assert (p + q) - q == p


def test_cleared_gives_primitive_integer_polynomial():
    p = MultiPoly.from_expr("2/3*x + 4/9*y", PLANE_VARS)
    integer, scale = p.cleared()
    assert scale == Fraction(2, 9)
    assert integer == MultiPoly.from_expr("3*x + 2*y", PLANE_VARS)
    assert integer * scale == p


def test_substitute_and_diff():
    x, y = MultiPoly.generators(PLANE_VARS)
    p = x ** 2 * y + 3 * y
    assert p.substitute({'y': 1 - x}) == MultiPoly.from_expr("x**2 - x**3 + 3 - 3*x", PLANE_VARS)
    assert p.substitute({'x': Fraction(1, 2)}) == Fraction(13, 4) * y
    assert p.diff('x') == 2 * x * y
    assert p.diff('y') == x ** 2 + 3


def test_embed_and_exact_evaluation():
    p = MultiPoly.from_expr("x*y - 1/3", PLANE_VARS)
    q = p.embed(('x', 'y', 't'))
    assert q.variables == ('x', 'y', 't')
    assert q.coefficient((1, 1, 0)) == 1
    assert p.evaluate_exact((Fraction(1, 2), 0.5)) == Fraction(-1, 12)
    with pytest.raises(InvalidInputError):
        q.embed(PLANE_VARS)


def test_poly_eval_complex_broadcasts_over_arrays():
    p = MultiPoly.from_expr("c1**2 - c2 + 2*c3*c4", SCHWARZ_VARS)
    c = np.array([[1, 0, 0, 0], [0, 1, 1, 1j]], dtype=complex)
    values = poly_eval_complex(p, [c[:, k] for k in range(4)])
    assert values == pytest.approx([1.0, -1.0 + 2j])
    with pytest.raises(InvalidInputError):
        poly_eval_complex(p, [1.0, 2.0])


def test_schwarz_variables():
    assert schwarz_variables(4) == SCHWARZ_VARS
    assert schwarz_variables(6)[-1] == 'c6'
    with pytest.raises(InvalidInputError):
        schwarz_variables(0)


def random_series(draw_terms):
    return TruncSeries.from_coefficients(
        [MultiPoly.from_terms(t, PLANE_VARS) for t in draw_terms], 3, PLANE_VARS,
    )


series_terms = st.lists(plane_terms, min_size=4, max_size=4)


@given(series_terms, series_terms, series_terms)
@settings(max_examples=25, deadline=None)
def test_series_product_is_commutative_and_associative(a, b, c):
    s, t, u = random_series(a), random_series(b), random_series(c)
    assert series_mul(s, t) == series_mul(t, s)
    assert series_mul(series_mul(s, t), u) == series_mul(s, series_mul(t, u))


def test_series_mul_requires_matching_orders():
    a = TruncSeries.constant(1, 2, PLANE_VARS)
    b = TruncSeries.constant(1, 3, PLANE_VARS)
    with pytest.raises(InvalidInputError):
        series_mul(a, b)


def test_herglotz_identity_holds_to_the_truncation_order():
    omega = TruncSeries.schwarz(4)
    herglotz = herglotz_expand(omega)
    one = TruncSeries.constant(1, 4, SCHWARZ_VARS)
    assert series_mul(one - omega, herglotz) == one + omega


def test_herglotz_coefficients():
    herglotz = herglotz_expand(TruncSeries.schwarz(4))
    assert herglotz.coefficient(0) == 1
    assert herglotz.coefficient(1) == MultiPoly.from_expr("2*c1", SCHWARZ_VARS)
    assert herglotz.coefficient(2) == MultiPoly.from_expr("2*c2 + 2*c1**2", SCHWARZ_VARS)
    assert herglotz.coefficient(3) == MultiPoly.from_expr(
        "2*c3 + 4*c1*c2 + 2*c1**3", SCHWARZ_VARS)


def test_herglotz_coefficients_are_weighted_homogeneous():
    herglotz = herglotz_expand(TruncSeries.schwarz(4))
    for k in range(1, 5):
        assert herglotz.coefficient(k).weighted_degrees((1, 2, 3, 4)) == {k}


def test_herglotz_rejects_nonzero_constant_term():
    with pytest.raises(InvalidInputError):
        herglotz_expand(TruncSeries.constant(1, 3, SCHWARZ_VARS))
