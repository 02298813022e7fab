"""
Exact multivariate polynomials over QQ and truncated power series in z.

MultiPoly wraps a sympy Poly over QQ on a named variable set. TruncSeries
keeps the coefficients of z^0..z^order as MultiPoly values, which is how the
Schwarz function omega(z) = c1 z + c2 z^2 + ... and f'(z) are expanded.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Any, Dict, Iterable, Mapping, Sequence, Tuple, Union

import sympy
from sympy import Poly, QQ

from hankel_data_model import InvalidInputError, to_fraction


SCHWARZ_VARS = ('c1', 'c2', 'c3', 'c4')
PLANE_VARS = ('x', 'y')
CASE_VARS = ('x', 'y', 't')

# Highest power of z kept for f; a5 needs z^4 of f'.
SERIES_ORDER = 5


def schwarz_variables(count: int) -> Tuple[str, ...]:
    """Variable names c1..c<count>."""
    if count < 1:
        raise InvalidInputError(f"Need at least one Schwarz coefficient, got {count}")
    return tuple(f"c{k}" for k in range(1, count + 1))


@lru_cache(maxsize=None)
def _symbols(variables: Tuple[str, ...]) -> Tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(name) for name in variables)


def _rational(value: Fraction) -> sympy.Rational:
    return sympy.Rational(value.numerator, value.denominator)


Scalar = Union[int, Fraction]


class MultiPoly:
    """Polynomial with exact rational coefficients over a named variable set.

    Values are immutable; equality is coefficient-wise and requires the same
    variable set.
    """

    __slots__ = ('variables', '_poly', '_terms', '_hash')

    def __init__(self, poly: Poly, variables: Sequence[str]):
        self.variables = tuple(variables)
        self._poly = poly
        self._terms = None
        self._hash = None

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_terms(cls, terms: Mapping[Tuple[int, ...], Any], variables: Sequence[str]) -> 'MultiPoly':
        """Build from {exponent tuple: coefficient}; zero coefficients are dropped."""
        variables = tuple(variables)
        rep = {}
        for monomial, coeff in terms.items():
            monomial = tuple(int(e) for e in monomial)
            if len(monomial) != len(variables) or any(e < 0 for e in monomial):
                raise InvalidInputError(
                    f"Exponent vector {monomial} does not fit variables {variables}"
                )
            value = to_fraction(coeff)
            if value:
                rep[monomial] = rep.get(monomial, 0) + _rational(value)
        gens = _symbols(variables)
        rep = {m: c for m, c in rep.items() if c != 0}
        if not rep:
            return cls(Poly(0, *gens, domain=QQ), variables)
        return cls(Poly.from_dict(rep, *gens, domain=QQ), variables)

    @classmethod
    def from_expr(cls, expr: Union[str, sympy.Expr], variables: Sequence[str]) -> 'MultiPoly':
        """Parse a transcribed expression such as "7*x**3 - 72*x**2 + 72*x"."""
        variables = tuple(variables)
        gens = _symbols(variables)
        if isinstance(expr, str):
            try:
                expr = sympy.sympify(expr, locals={str(g): g for g in gens})
            except (sympy.SympifyError, SyntaxError, TypeError) as e:
                raise InvalidInputError(f"Cannot parse polynomial '{expr}': {e}")
        unknown = set(sympy.sympify(expr).free_symbols) - set(gens)
        if unknown:
            names = sorted(str(s) for s in unknown)
            raise InvalidInputError(f"Symbols {names} are not in variable set {variables}")
        return cls(Poly(sympy.expand(expr), *gens, domain=QQ), variables)

    @classmethod
    def zero(cls, variables: Sequence[str]) -> 'MultiPoly':
        return cls.from_terms({}, variables)

    @classmethod
    def constant(cls, value: Scalar, variables: Sequence[str]) -> 'MultiPoly':
        variables = tuple(variables)
        return cls.from_terms({(0,) * len(variables): value}, variables)

    @classmethod
    def variable(cls, name: str, variables: Sequence[str]) -> 'MultiPoly':
        variables = tuple(variables)
        if name not in variables:
            raise InvalidInputError(f"Variable '{name}' is not in {variables}")
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls.from_terms({exps: 1}, variables)

    @classmethod
    def generators(cls, variables: Sequence[str]) -> Tuple['MultiPoly', ...]:
        """One MultiPoly per variable, in order: x, y = MultiPoly.generators(PLANE_VARS)."""
        return tuple(cls.variable(name, variables) for name in variables)

    # ------------------------------------------------------------------
    # Inspection
    # ------------------------------------------------------------------

    @property
    def terms(self) -> Dict[Tuple[int, ...], Fraction]:
        """Nonzero coefficients keyed by exponent vector."""
        if self._terms is None:
            self._terms = {
                tuple(int(e) for e in monomial): to_fraction(coeff)
                for monomial, coeff in self._poly.terms()
                if coeff != 0
            }
        return self._terms

    def coefficient(self, monomial: Union[Tuple[int, ...], Mapping[str, int]]) -> Fraction:
        """Coefficient of a monomial given as an exponent tuple or {name: power}."""
        if isinstance(monomial, Mapping):
            unknown = set(monomial) - set(self.variables)
            if unknown:
                raise InvalidInputError(f"Variables {sorted(unknown)} are not in {self.variables}")
            monomial = tuple(monomial.get(v, 0) for v in self.variables)
        return self.terms.get(tuple(monomial), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def degree(self, name: str) -> int:
        index = self._index(name)
        return max((m[index] for m in self.terms), default=0)

    def weighted_degrees(self, weights: Sequence[int]) -> set:
        """Set of weighted degrees sum(w_i * e_i) over the nonzero terms."""
        if len(weights) != len(self.variables):
            raise InvalidInputError("One weight per variable is required")
        return {sum(w * e for w, e in zip(weights, m)) for m in self.terms}

    def to_expr(self) -> sympy.Expr:
        return self._poly.as_expr()

    def _index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise InvalidInputError(f"Variable '{name}' is not in {self.variables}")

    # ------------------------------------------------------------------
    # Ring operations
    # ------------------------------------------------------------------

    def _coerce(self, other: Any) -> 'MultiPoly':
        if isinstance(other, MultiPoly):
            if other.variables != self.variables:
                raise InvalidInputError(
                    f"Variable sets differ: {self.variables} vs {other.variables}"
                )
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return MultiPoly.constant(other, self.variables)
        raise InvalidInputError(f"Cannot combine MultiPoly with {type(other).__name__}")

    def __add__(self, other: Any) -> 'MultiPoly':
        other = self._coerce(other)
        return MultiPoly(self._poly + other._poly, self.variables)

    __radd__ = __add__

    def __sub__(self, other: Any) -> 'MultiPoly':
        other = self._coerce(other)
        return MultiPoly(self._poly - other._poly, self.variables)

    def __rsub__(self, other: Any) -> 'MultiPoly':
        return self._coerce(other) - self

    def __neg__(self) -> 'MultiPoly':
        return MultiPoly(-self._poly, self.variables)

    def __mul__(self, other: Any) -> 'MultiPoly':
        other = self._coerce(other)
        return MultiPoly(self._poly * other._poly, self.variables)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> 'MultiPoly':
        if not isinstance(exponent, int) or exponent < 0:
            raise InvalidInputError(f"Exponent must be a nonnegative integer, got {exponent!r}")
        return MultiPoly(self._poly ** exponent, self.variables)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            other = MultiPoly.constant(other, self.variables)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.variables, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"MultiPoly({self.to_expr()}, {self.variables})"

    def __str__(self) -> str:
        return str(self.to_expr())

    # ------------------------------------------------------------------
    # Calculus and substitution
    # ------------------------------------------------------------------

    def diff(self, name: str) -> 'MultiPoly':
        gen = _symbols(self.variables)[self._index(name)]
        return MultiPoly(self._poly.diff(gen), self.variables)

    def substitute(self, mapping: Mapping[str, Any]) -> 'MultiPoly':
        """Replace variables by polynomials (same variable set) or rational constants."""
        values = {}
        for name, value in mapping.items():
            values[self._index(name)] = self._coerce(value)
        result = MultiPoly.zero(self.variables)
        power_cache: Dict[Tuple[int, int], MultiPoly] = {}
        for monomial, coeff in self.terms.items():
            term = MultiPoly.constant(coeff, self.variables)
            kept = tuple(0 if i in values else e for i, e in enumerate(monomial))
            if any(kept):
                term = term * MultiPoly.from_terms({kept: 1}, self.variables)
            for index, value in values.items():
                e = monomial[index]
                if e == 0:
                    continue
                key = (index, e)
                if key not in power_cache:
                    power_cache[key] = value ** e
                term = term * power_cache[key]
            result = result + term
        return result

    def embed(self, variables: Sequence[str]) -> 'MultiPoly':
        """Re-express over a larger variable set containing the current one."""
        variables = tuple(variables)
        missing = [v for v in self.variables if v not in variables]
        if missing:
            raise InvalidInputError(f"Cannot embed {self.variables} into {variables}")
        positions = [variables.index(v) for v in self.variables]
        terms = {}
        for monomial, coeff in self.terms.items():
            exps = [0] * len(variables)
            for pos, e in zip(positions, monomial):
                exps[pos] = e
            terms[tuple(exps)] = coeff
        return MultiPoly.from_terms(terms, variables)

    def cleared(self) -> Tuple['MultiPoly', Fraction]:
        """Return (integer polynomial q, scale s) with self == s * q and q primitive."""
        if self.is_zero:
            return self, Fraction(1)
        denominator = 1
        for coeff in self.terms.values():
            denominator = denominator * coeff.denominator // gcd(denominator, coeff.denominator)
        content = 0
        for coeff in self.terms.values():
            content = gcd(content, abs(int(coeff * denominator)))
        scale = Fraction(content, denominator)
        integer = MultiPoly.from_terms(
            {m: c / scale for m, c in self.terms.items()}, self.variables
        )
        return integer, scale

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def evaluate(self, point: Sequence[Any]) -> Any:
        """Double-precision evaluation; see poly_eval_complex."""
        return poly_eval_complex(self, point)

    def evaluate_exact(self, point: Sequence[Any]) -> Fraction:
        """Exact value at a rational point (floats are taken at their binary value)."""
        if len(point) != len(self.variables):
            raise InvalidInputError(
                f"Point has {len(point)} coordinates, polynomial has {len(self.variables)} variables"
            )
        values = [to_fraction(v) for v in point]
        total = Fraction(0)
        for monomial, coeff in self.terms.items():
            term = coeff
            for v, e in zip(values, monomial):
                if e:
                    term *= v ** e
            total += term
        return total


@lru_cache(maxsize=512)
def _float_terms(p: MultiPoly) -> Tuple[Tuple[Tuple[int, ...], float], ...]:
    return tuple((monomial, float(coeff)) for monomial, coeff in sorted(p.terms.items()))


def poly_eval_complex(p: MultiPoly, point: Sequence[Any]) -> Any:
    """Evaluate p in double precision at a complex (or real) point.

    Coefficients are the correctly rounded doubles of the exact rationals.
    Coordinates may be numpy arrays, in which case the result broadcasts.
    """
    if len(point) != len(p.variables):
        raise InvalidInputError(
            f"Point has {len(point)} coordinates, polynomial has {len(p.variables)} variables"
        )
    terms = _float_terms(p)
    max_exps = [0] * len(point)
    for monomial, _ in terms:
        for i, e in enumerate(monomial):
            max_exps[i] = max(max_exps[i], e)
    powers = []
    for value, top in zip(point, max_exps):
        row = [1]
        for _ in range(top):
            row.append(row[-1] * value)
        powers.append(row)
    total = 0j
    for monomial, coeff in terms:
        term = coeff
        for i, e in enumerate(monomial):
            if e:
                term = term * powers[i][e]
        total = total + term
    return total


# ============================================================================
# Truncated power series
# ============================================================================

@dataclass(frozen=True)
class TruncSeries:
    """Power series in z truncated after z^order; coefficients are MultiPoly."""
    order: int
    coefficients: Tuple[MultiPoly, ...]

    def __post_init__(self):
        if self.order < 0:
            raise InvalidInputError(f"Series order must be >= 0, got {self.order}")
        if len(self.coefficients) != self.order + 1:
            raise InvalidInputError(
                f"Order {self.order} needs {self.order + 1} coefficients, got {len(self.coefficients)}"
            )
        variables = {c.variables for c in self.coefficients}
        if len(variables) != 1:
            raise InvalidInputError("All series coefficients must share one variable set")

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.coefficients[0].variables

    @classmethod
    def from_coefficients(cls, coefficients: Iterable[Any], order: int,
                          variables: Sequence[str]) -> 'TruncSeries':
        """Pad or truncate a coefficient list to the given order."""
        coeffs = []
        for c in list(coefficients)[:order + 1]:
            coeffs.append(c if isinstance(c, MultiPoly) else MultiPoly.constant(c, variables))
        while len(coeffs) < order + 1:
            coeffs.append(MultiPoly.zero(variables))
        return cls(order, tuple(coeffs))

    @classmethod
    def constant(cls, value: Scalar, order: int, variables: Sequence[str]) -> 'TruncSeries':
        return cls.from_coefficients([value], order, variables)

    @classmethod
    def monomial(cls, power: int, order: int, variables: Sequence[str],
                 coeff: Scalar = 1) -> 'TruncSeries':
        """coeff * z^power (zero if power exceeds the order)."""
        coeffs = [0] * (order + 1)
        if power <= order:
            coeffs[power] = coeff
        return cls.from_coefficients(coeffs, order, variables)

    @classmethod
    def schwarz(cls, order: int, variables: Sequence[str] = None) -> 'TruncSeries':
        """Symbolic omega(z) = c1 z + ... + c_order z^order."""
        variables = tuple(variables) if variables else schwarz_variables(order)
        coeffs = [MultiPoly.zero(variables)]
        for k in range(1, order + 1):
            coeffs.append(MultiPoly.variable(f"c{k}", variables))
        return cls(order, tuple(coeffs))

    def coefficient(self, k: int) -> MultiPoly:
        if not 0 <= k <= self.order:
            raise InvalidInputError(f"Coefficient z^{k} is beyond order {self.order}")
        return self.coefficients[k]

    def _check_compatible(self, other: 'TruncSeries'):
        if not isinstance(other, TruncSeries):
            raise InvalidInputError(f"Expected TruncSeries, got {type(other).__name__}")
        if other.variables != self.variables:
            raise InvalidInputError(
                f"Series variable sets differ: {self.variables} vs {other.variables}"
            )

    def __add__(self, other: 'TruncSeries') -> 'TruncSeries':
        self._check_compatible(other)
        order = min(self.order, other.order)
        return TruncSeries(order, tuple(
            self.coefficients[k] + other.coefficients[k] for k in range(order + 1)
        ))

    def __sub__(self, other: 'TruncSeries') -> 'TruncSeries':
        return self + (-other)

    def __neg__(self) -> 'TruncSeries':
        return TruncSeries(self.order, tuple(-c for c in self.coefficients))

    def __mul__(self, other: Any) -> 'TruncSeries':
        if isinstance(other, TruncSeries):
            return series_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other: Any) -> 'TruncSeries':
        return self.scale(other)

    def __pow__(self, exponent: int) -> 'TruncSeries':
        if not isinstance(exponent, int) or exponent < 0:
            raise InvalidInputError(f"Exponent must be a nonnegative integer, got {exponent!r}")
        result = TruncSeries.constant(1, self.order, self.variables)
        for _ in range(exponent):
            result = series_mul(result, self)
        return result

    def scale(self, factor: Any) -> 'TruncSeries':
        """Multiply every coefficient by a scalar or a MultiPoly."""
        return TruncSeries(self.order, tuple(c * factor for c in self.coefficients))


def series_mul(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    """Cauchy product truncated at the common order."""
    if not isinstance(a, TruncSeries) or not isinstance(b, TruncSeries):
        raise InvalidInputError("series_mul expects two TruncSeries")
    if a.variables != b.variables:
        raise InvalidInputError(f"Series variable sets differ: {a.variables} vs {b.variables}")
    if a.order != b.order:
        raise InvalidInputError(f"Series orders differ: {a.order} vs {b.order}")
    coeffs = []
    for k in range(a.order + 1):
        total = MultiPoly.zero(a.variables)
        for i in range(k + 1):
            left, right = a.coefficients[i], b.coefficients[k - i]
            if left.is_zero or right.is_zero:
                continue
            total = total + left * right
        coeffs.append(total)
    return TruncSeries(a.order, tuple(coeffs))


def herglotz_expand(omega: TruncSeries) -> TruncSeries:
    """(1 + omega) / (1 - omega) = 1 + 2 * sum_{k>=1} omega^k, truncated at omega's order."""
    if not isinstance(omega, TruncSeries):
        raise InvalidInputError("herglotz_expand expects a TruncSeries")
    if omega.order < 1:
        raise InvalidInputError("herglotz_expand needs order >= 1")
    if not omega.coefficients[0].is_zero:
        raise InvalidInputError("omega must vanish at z = 0 (nonzero constant term)")
    result = TruncSeries.constant(1, omega.order, omega.variables)
    power = omega
    # omega^k starts at z^k, so powers beyond the order vanish
    for _ in range(omega.order):
        result = result + power.scale(2)
        power = series_mul(power, omega)
    return result
