"""
Interval arithmetic on mpmath.iv and interval evaluation of real polynomials in (x, y).

Rounding: mpmath.iv rounds every lower endpoint down and every upper endpoint
up at its default working precision of 53 bits. Endpoints are therefore
doubles, and results that are exact (zeros, integers, dyadic products) stay
exact, so sign tests at boundary points remain meaningful.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import List, Tuple

import numpy as np
from mpmath import iv

from hankel_data_model import InvalidInputError, to_fraction
from series_algebra import MultiPoly, PLANE_VARS


# mpmath.iv rounds outward itself; no extra ulps are added on top
INFLATION_ULPS = 0

MONOMIAL_SCHEME = "monomial sum in mpmath.iv (directed rounding, 53-bit endpoints)"
CENTERED_SCHEME = MONOMIAL_SCHEME + ", intersected with the same sum re-centred at the box midpoint"

# below this the float conversion of an mpf endpoint may underflow
_TINY = 1e-300


def _lower_endpoint(value) -> float:
    lo = float(value.a)
    if abs(lo) < _TINY:
        return 0.0 if value.a >= 0 else -_TINY
    return lo


def _upper_endpoint(value) -> float:
    hi = float(value.b)
    if abs(hi) < _TINY:
        return 0.0 if value.b <= 0 else _TINY
    return hi


def _rational_iv(value: Fraction):
    return iv.mpf(value.numerator) / value.denominator


@dataclass(frozen=True)
class Interval:
    """Closed real interval [lo, hi] whose operations enclose the exact result."""
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise InvalidInputError(f"Invalid interval [{self.lo}, {self.hi}]")
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @classmethod
    def point(cls, value: float) -> 'Interval':
        return cls(value, value)

    @classmethod
    def from_iv(cls, value) -> 'Interval':
        """Interval with the endpoints of an mpmath.iv value."""
        return cls(_lower_endpoint(value), _upper_endpoint(value))

    @classmethod
    def from_rational(cls, value) -> 'Interval':
        """Tightest double enclosure of an exact rational."""
        value = to_fraction(value)
        nearest = float(value)
        if Fraction(nearest) == value:
            return cls(nearest, nearest)
        return cls.from_iv(_rational_iv(value))

    def to_iv(self):
        return iv.mpf([self.lo, self.hi])

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        mid = self.lo + (self.hi - self.lo) / 2.0
        return min(max(mid, self.lo), self.hi)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, value) -> bool:
        if isinstance(value, Fraction):
            return Fraction(self.lo) <= value <= Fraction(self.hi)
        return self.lo <= value <= self.hi

    def intersect(self, other: 'Interval') -> 'Interval':
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise InvalidInputError(f"Disjoint intervals {self} and {other}")
        return Interval(lo, hi)

    def hull(self, other: 'Interval') -> 'Interval':
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __neg__(self) -> 'Interval':
        return Interval(-self.hi, -self.lo)

    def __add__(self, other: 'Interval') -> 'Interval':
        return Interval.from_iv(self.to_iv() + _as_interval(other).to_iv())

    __radd__ = __add__

    def __sub__(self, other: 'Interval') -> 'Interval':
        return Interval.from_iv(self.to_iv() - _as_interval(other).to_iv())

    def __rsub__(self, other: 'Interval') -> 'Interval':
        return Interval.from_iv(_as_interval(other).to_iv() - self.to_iv())

    def __mul__(self, other: 'Interval') -> 'Interval':
        return Interval.from_iv(self.to_iv() * _as_interval(other).to_iv())

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> 'Interval':
        if not isinstance(exponent, int) or exponent < 0:
            raise InvalidInputError(f"Exponent must be a nonnegative integer, got {exponent!r}")
        if exponent == 0:
            return Interval(1.0, 1.0)
        return Interval.from_iv(self.to_iv() ** exponent)

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


def _as_interval(value) -> Interval:
    if isinstance(value, Interval):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if isinstance(value, int) and Fraction(float(value)) != value:
            return Interval.from_rational(value)
        return Interval.point(float(value))
    if isinstance(value, Fraction):
        return Interval.from_rational(value)
    raise InvalidInputError(f"Cannot use {type(value).__name__} as an interval")


@dataclass(frozen=True)
class Box2:
    """Axis-aligned box x-range by y-range."""
    x: Interval
    y: Interval

    @classmethod
    def from_bounds(cls, x_lo: float, x_hi: float, y_lo: float, y_hi: float) -> 'Box2':
        return cls(Interval(x_lo, x_hi), Interval(y_lo, y_hi))

    @property
    def width(self) -> float:
        return max(self.x.width, self.y.width)

    @property
    def center(self) -> Tuple[float, float]:
        return self.x.midpoint, self.y.midpoint

    @property
    def is_point(self) -> bool:
        return self.x.is_point and self.y.is_point

    @property
    def corners(self) -> List[Tuple[float, float]]:
        points = []
        for px in (self.x.lo, self.x.hi):
            for py in (self.y.lo, self.y.hi):
                if (px, py) not in points:
                    points.append((px, py))
        return points

    def contains_point(self, point: Tuple[float, float]) -> bool:
        return self.x.contains(point[0]) and self.y.contains(point[1])

    def bisect(self) -> Tuple['Box2', 'Box2']:
        """Split the wider side (x on ties) at its midpoint.

        Raises InvalidInputError when the box is too thin to split in doubles.
        """
        if self.x.width >= self.y.width:
            mid = self.x.midpoint
            if not self.x.lo < mid < self.x.hi:
                raise InvalidInputError(f"Box {self} cannot be split further")
            return (Box2(Interval(self.x.lo, mid), self.y),
                    Box2(Interval(mid, self.x.hi), self.y))
        mid = self.y.midpoint
        if not self.y.lo < mid < self.y.hi:
            raise InvalidInputError(f"Box {self} cannot be split further")
        return (Box2(self.x, Interval(self.y.lo, mid)),
                Box2(self.x, Interval(mid, self.y.hi)))


# ============================================================================
# Polynomial enclosures
# ============================================================================

def _check_plane(p: MultiPoly):
    if not isinstance(p, MultiPoly) or p.variables != PLANE_VARS:
        variables = getattr(p, 'variables', None)
        raise InvalidInputError(
            f"Interval evaluation needs variables {PLANE_VARS}, got {variables}"
        )


@lru_cache(maxsize=256)
def _iv_terms(p: MultiPoly) -> tuple:
    """(i, j, coefficient as an mpmath.iv enclosure) for every monomial x^i y^j."""
    return tuple(
        (i, j, _rational_iv(coeff))
        for (i, j), coeff in sorted(p.terms.items())
    )


@lru_cache(maxsize=256)
def _shift_plan(p: MultiPoly) -> tuple:
    """For each shifted monomial (k, l): the sources a_ij * C(i,k) * C(j,l) and leftover powers."""
    plan = {}
    for i, j, coeff in _iv_terms(p):
        for k in range(i + 1):
            for l in range(j + 1):
                plan.setdefault((k, l), []).append((coeff * (comb(i, k) * comb(j, l)), i - k, j - l))
    return tuple((k, l, tuple(sources)) for (k, l), sources in sorted(plan.items()))


def _degrees(p: MultiPoly) -> Tuple[int, int]:
    terms = _iv_terms(p)
    return (max((i for i, _, _ in terms), default=0),
            max((j for _, j, _ in terms), default=0))


def _powers(base, top: int) -> list:
    return [base ** k for k in range(top + 1)]


def _monomial_sum(p: MultiPoly, x, y):
    top_x, top_y = _degrees(p)
    xs, ys = _powers(x, top_x), _powers(y, top_y)
    total = iv.mpf(0)
    for i, j, coeff in _iv_terms(p):
        total += coeff * xs[i] * ys[j]
    return total


def _centered_sum(p: MultiPoly, box: Box2):
    xc, yc = box.center
    top_x, top_y = _degrees(p)
    xcs, ycs = _powers(iv.mpf(xc), top_x), _powers(iv.mpf(yc), top_y)
    dxs = _powers(box.x.to_iv() - xc, top_x)
    dys = _powers(box.y.to_iv() - yc, top_y)
    total = iv.mpf(0)
    for k, l, sources in _shift_plan(p):
        shifted = iv.mpf(0)
        for factor, rx, ry in sources:
            shifted += factor * xcs[rx] * ycs[ry]
        total += shifted * dxs[k] * dys[l]
    return total


def poly_eval_interval(p: MultiPoly, box: Box2, centered: bool = False) -> Interval:
    """Enclose {p(x, y) : (x, y) in box} for p over the variables (x, y).

    By default this is the plain monomial sum evaluated in mpmath.iv. With
    centered=True it is intersected with the monomial sum of p re-centred at
    the box midpoint. A point box is evaluated exactly and rounded outward once.
    """
    _check_plane(p)
    if box.is_point:
        return Interval.from_rational(p.evaluate_exact((box.x.lo, box.y.lo)))
    plain = Interval.from_iv(_monomial_sum(p, box.x.to_iv(), box.y.to_iv()))
    if not centered:
        return plain
    return plain.intersect(Interval.from_iv(_centered_sum(p, box)))
