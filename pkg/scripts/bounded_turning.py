"""
Coefficient formulas and Hankel determinant polynomials for the bounded-turning
classes R (Re f' > 0) and R1 (Re (f' + z f'') > 0).

Both classes come from a Schwarz function omega through the Herglotz series
P = (1 + omega) / (1 - omega):

    R  : f'(z)            = P(z)   so  n   * a_n = [z^(n-1)] P
    R1 : f'(z) + z f''(z) = P(z)   so  n^2 * a_n = [z^(n-1)] P

Every result is an exact MultiPoly in c1..c4.
"""
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Sequence, Tuple

from hankel_data_model import ClassId, InvalidInputError
from series_algebra import (
    MultiPoly, SERIES_ORDER, SCHWARZ_VARS, TruncSeries, herglotz_expand,
    poly_eval_complex, schwarz_variables,
)


class HankelKind(Enum):
    """H2_2 = a2 a4 - a3^2, H3_1 = the 3x3 determinant of a1..a5."""
    H2_2 = "H2(2)"
    H3_1 = "H3(1)"


@dataclass(frozen=True)
class CoefficientFormulas:
    """a_2..a_order of f(z) = z + a_2 z^2 + ... as polynomials in c1..c(order-1)."""
    class_id: ClassId
    a: Tuple[MultiPoly, ...]

    @property
    def order(self) -> int:
        return len(self.a) + 1

    def coefficient(self, n: int) -> MultiPoly:
        """a_n for 2 <= n <= order (a_1 = 1 is the normalisation and is not stored)."""
        if not 2 <= n <= self.order:
            raise InvalidInputError(f"a_{n} is not available (formulas run a_2..a_{self.order})")
        return self.a[n - 2]

    def to_dict(self) -> dict:
        return {
            'class': self.class_id.value,
            'coefficients': {f'a{n}': str(self.coefficient(n)) for n in range(2, self.order + 1)},
        }


@dataclass(frozen=True)
class HankelPoly:
    """Hankel functional stored as integer polynomial times scale."""
    kind: HankelKind
    class_id: ClassId
    poly: MultiPoly
    scale: Fraction

    @property
    def expression(self) -> MultiPoly:
        """The functional itself, scale * poly."""
        return self.poly * self.scale

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'class': self.class_id.value,
            'poly': str(self.poly),
            'scale': f"{self.scale.numerator}/{self.scale.denominator}",
        }


# ============================================================================
# Transcribed formulas
# ============================================================================

PRINTED_COEFFICIENTS: Dict[ClassId, Dict[int, str]] = {
    ClassId.R: {
        2: "c1",
        3: "2/3*(c1**2 + c2)",
        4: "1/2*(c3 + 2*c1*c2 + c1**3)",
        5: "2/5*(c4 + 2*c1*c3 + 3*c1**2*c2 + c1**4 + c2**2)",
    },
    ClassId.R1: {
        2: "c1/2",
        3: "2/9*(c1**2 + c2)",
        4: "1/8*(c3 + 2*c1*c2 + c1**3)",
        5: "2/25*(c4 + 2*c1*c3 + 3*c1**2*c2 + c1**4 + c2**2)",
    },
}

# (bracketed polynomial, scale) of the printed H3(1) expansions
PRINTED_EXPANSIONS: Dict[ClassId, Tuple[str, Fraction]] = {
    ClassId.R: (
        "-12*c1**4*c2 - 16*c2**3 - 54*c1**3*c3 + 108*c1*c2*c3 - 135*c3**2"
        " + 60*c1**2*c2**2 - 7*c1**6 - 72*c1**2*c4 + 144*c2*c4",
        Fraction(1, 540),
    ),
    ClassId.R1: (
        "-1217*c1**6 - 1140*c1**4*c2 + 13116*c1**2*c2**2 + 7936*c2**3 - 9234*c1**3*c3"
        " + 972*c1*c2*c3 - 18225*c3**2 + 2592*(8*c2 - c1**2)*c4",
        Fraction(1, 1166400),
    ),
}

PRINTED_REGROUPED: Dict[ClassId, Tuple[str, Fraction]] = {
    ClassId.R: (
        "-54*c3*(c3 - 2*c1*c2 + c1**3) - 81*c3**2 - 12*c1**4*c2 - 16*c2**3"
        " + 60*c1**2*c2**2 - 7*c1**6 + 72*(2*c2 - c1**2)*c4",
        Fraction(1, 540),
    ),
    ClassId.R1: (
        "-8991*c3**2 - 9234*c3*(c3 - 2/19*c1*c2 + c1**3) - 1140*c1**4*c2"
        " + 13116*c1**2*c2**2 + 7936*c2**3 - 1217*c1**6 + 2592*(8*c2 - c1**2)*c4",
        Fraction(1, 1166400),
    ),
}


# ============================================================================
# Derivation
# ============================================================================

def derive_coefficients(class_id: ClassId, order: int = SERIES_ORDER) -> CoefficientFormulas:
    """Solve for a_2..a_order by matching coefficients of the class equation.

    Args:
        class_id: ClassId.R or ClassId.R1
        order: highest a_n to derive (5 by default; a_n needs c1..c(n-1))

    Returns:
        CoefficientFormulas over the variables c1..c(order-1)
    """
    if not isinstance(class_id, ClassId):
        raise InvalidInputError(f"Expected ClassId, got {class_id!r}")
    if order < 2:
        raise InvalidInputError(f"Order must be at least 2, got {order}")
    variables = schwarz_variables(order - 1)
    omega = TruncSeries.schwarz(order - 1, variables)
    herglotz = herglotz_expand(omega)

    a = []
    for n in range(2, order + 1):
        # f' contributes n a_n z^(n-1); z f'' adds n (n-1) a_n z^(n-1)
        multiplier = n if class_id is ClassId.R else n * n
        a.append(herglotz.coefficient(n - 1) * Fraction(1, multiplier))
    return CoefficientFormulas(class_id, tuple(a))


def printed_coefficients(class_id: ClassId) -> CoefficientFormulas:
    """a_2..a_5 exactly as transcribed."""
    printed = PRINTED_COEFFICIENTS[class_id]
    return CoefficientFormulas(class_id, tuple(
        MultiPoly.from_expr(printed[n], SCHWARZ_VARS) for n in range(2, 6)
    ))


def verify_printed_coefficients(class_id: ClassId) -> Dict[int, bool]:
    """Compare derived a_2..a_5 with the transcribed formulas, term by term."""
    derived = derive_coefficients(class_id)
    printed = printed_coefficients(class_id)
    return {n: derived.coefficient(n) == printed.coefficient(n) for n in range(2, 6)}


def hankel_expression(kind: HankelKind, a: Sequence[Any]) -> Any:
    """Evaluate the determinant from (a2, a3, a4, a5) of any ring type.

    Works for MultiPoly, Fraction, complex and numpy arrays alike.
    """
    if kind is HankelKind.H2_2:
        if len(a) < 3:
            raise InvalidInputError("H2(2) needs a2, a3, a4")
        a2, a3, a4 = a[0], a[1], a[2]
        return a2 * a4 - a3 * a3
    if len(a) < 4:
        raise InvalidInputError("H3(1) needs a2, a3, a4, a5")
    a2, a3, a4, a5 = a[0], a[1], a[2], a[3]
    return a3 * (a2 * a4 - a3 * a3) - a4 * (a4 - a2 * a3) + a5 * (a3 - a2 * a2)


def _hankel_poly(kind: HankelKind, formulas: CoefficientFormulas) -> HankelPoly:
    needed = 5 if kind is HankelKind.H3_1 else 4
    if formulas.order < needed:
        raise InvalidInputError(f"{kind.value} needs coefficients through a_{needed}")
    a = [formulas.coefficient(n) for n in range(2, needed + 1)]
    expression = hankel_expression(kind, a)
    if expression.variables != SCHWARZ_VARS:
        expression = expression.embed(SCHWARZ_VARS)
    poly, scale = expression.cleared()
    return HankelPoly(kind, formulas.class_id, poly, scale)


def hankel3_poly(formulas: CoefficientFormulas) -> HankelPoly:
    """H3(1) = a3(a2 a4 - a3^2) - a4(a4 - a2 a3) + a5(a3 - a2^2)."""
    return _hankel_poly(HankelKind.H3_1, formulas)


def hankel2_poly(formulas: CoefficientFormulas) -> HankelPoly:
    """H2(2) = a2 a4 - a3^2."""
    return _hankel_poly(HankelKind.H2_2, formulas)


def printed_hankel3(class_id: ClassId, regrouped: bool = False) -> HankelPoly:
    """The transcribed H3(1) expansion (or its regrouped form) as a HankelPoly."""
    text, scale = (PRINTED_REGROUPED if regrouped else PRINTED_EXPANSIONS)[class_id]
    bracket = MultiPoly.from_expr(text, SCHWARZ_VARS)
    poly, content = bracket.cleared()
    return HankelPoly(HankelKind.H3_1, class_id, poly, scale * content)


def eval_functional(h: HankelPoly, c: Sequence[Any]) -> Any:
    """Double-precision value of scale * poly at c = (c1, c2, c3, c4).

    Entries of c may be numpy arrays; the result broadcasts.
    """
    if len(c) != len(h.poly.variables):
        raise InvalidInputError(
            f"Expected {len(h.poly.variables)} coefficients, got {len(c)}"
        )
    return float(h.scale) * poly_eval_complex(h.poly, c)


def class_relation_holds(order: int = SERIES_ORDER) -> bool:
    """f in R1 iff z f' in R, so a_n(R1) = a_n(R) / n for every n."""
    r = derive_coefficients(ClassId.R, order)
    r1 = derive_coefficients(ClassId.R1, order)
    return all(
        r1.coefficient(n) == r.coefficient(n) * Fraction(1, n)
        for n in range(2, order + 1)
    )
