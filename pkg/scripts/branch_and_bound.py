"""
Certified maximisation of polynomials in (x, y) over boxes and triangles.

Best-first interval branch-and-bound, run by pybnb: the box with the largest
enclosure upper bound is split along its wider side; sub-boxes that certifiably
violate a region constraint, or whose upper bound falls below the best feasible
value found so far, are pruned. On boxes lying wholly inside the region a
sign-definite partial derivative collapses the box to the face where the
maximum must lie.

The certified upper bound is sound whether or not the tolerance is reached.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import lru_cache, partial
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import pybnb

from hankel_data_model import HankelAuditError, InvalidInputError, MaxCertificate
from interval_arithmetic import (
    Box2, CENTERED_SCHEME, INFLATION_ULPS, Interval, poly_eval_interval,
)
from series_algebra import MultiPoly, PLANE_VARS


logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_BUDGET = 1_000_000
THREADS_ENV = "HANKEL_AUDIT_THREADS"
SMALLEST_POSITIVE = float(np.nextafter(0.0, 1.0))

CLOSURE_NOTE = (
    "strict inequalities evaluated on their closures; a continuous function has "
    "the same supremum over an open region and its closure"
)
SEARCH_SCHEME = (CENTERED_SCHEME + "; faces of wholly feasible boxes via derivative sign"
                 "; best-first pybnb search")


class Relation(Enum):
    LE0 = "<=0"
    GE0 = ">=0"


@dataclass(frozen=True)
class RegionSpec:
    """Bounding box plus constraints q(x, y) <= 0 or q(x, y) >= 0."""
    name: str
    box: Box2
    constraints: Tuple[Tuple[MultiPoly, Relation], ...] = ()
    description: str = ""
    strict: bool = False

    def contains(self, point: Tuple[float, float]) -> bool:
        """Exact membership of a double point (closures of strict constraints)."""
        if not self.box.contains_point(point):
            return False
        for q, relation in self.constraints:
            value = q.evaluate_exact(point)
            if relation is Relation.LE0 and value > 0:
                return False
            if relation is Relation.GE0 and value < 0:
                return False
        return True

    def classify(self, box: Box2) -> Optional[bool]:
        """None if box certifiably misses the region, True if wholly inside, else False."""
        inside = True
        for q, relation in self.constraints:
            enclosure = poly_eval_interval(q, box, centered=False)
            if relation is Relation.LE0:
                if enclosure.lo > 0:
                    return None
                inside = inside and enclosure.hi <= 0
            else:
                if enclosure.hi < 0:
                    return None
                inside = inside and enclosure.lo >= 0
        return inside

    def implies_nonnegative(self, q: MultiPoly) -> bool:
        """True when q is a positive rational multiple of a constraint read as "... >= 0"."""
        for c, relation in self.constraints:
            target = -c if relation is Relation.LE0 else c
            if target.is_zero:
                continue
            monomial, coeff = next(iter(target.terms.items()))
            ratio = q.coefficient(monomial) / coeff
            if ratio > 0 and q == target * ratio:
                return True
        return False


@dataclass(frozen=True)
class NamedPolynomial:
    name: str
    poly: MultiPoly
    provenance: str = ""

    @classmethod
    def from_expr(cls, name: str, text: str, provenance: str = "") -> 'NamedPolynomial':
        return cls(name, MultiPoly.from_expr(text, PLANE_VARS), provenance)


# ============================================================================
# Registries
# ============================================================================

def _constraint(text: str, relation: Relation) -> Tuple[MultiPoly, Relation]:
    return MultiPoly.from_expr(text, PLANE_VARS), relation


UNIT_SQUARE = Box2.from_bounds(0.0, 1.0, 0.0, 1.0)

REGIONS: Dict[str, RegionSpec] = {
    'unit-square': RegionSpec('unit-square', UNIT_SQUARE, (), "0 <= x <= 1, 0 <= y <= 1"),
    'triangle-E': RegionSpec(
        'triangle-E', UNIT_SQUARE,
        (_constraint("x + y - 1", Relation.LE0),),
        "x >= 0, y >= 0, x + y <= 1",
    ),
    'region-D-r': RegionSpec(
        'region-D-r', UNIT_SQUARE,
        (_constraint("x + 2*y - 1", Relation.GE0), _constraint("x + y - 1", Relation.LE0)),
        "x + 2y > 1, x + y <= 1, x >= 0", strict=True,
    ),
    'region-D-r1': RegionSpec(
        'region-D-r1', UNIT_SQUARE,
        (_constraint("21*x + 32*y - 21", Relation.GE0), _constraint("x + y - 1", Relation.LE0)),
        "x + (32/21) y > 1, x + y <= 1, x >= 0", strict=True,
    ),
    'region-D-r1-printed': RegionSpec(
        'region-D-r1-printed', UNIT_SQUARE,
        (_constraint("32*x + 21*y - 32", Relation.GE0), _constraint("x + y - 1", Relation.LE0)),
        "x + (21/32) y > 1, x + y <= 1, x >= 0", strict=True,
    ),
    'half-interval': RegionSpec(
        'half-interval', Box2.from_bounds(0.0, 0.5, 0.0, 0.0), (), "0 <= x <= 1/2, y = 0",
    ),
    'upper-half-interval': RegionSpec(
        'upper-half-interval', Box2.from_bounds(0.5, 1.0, 0.0, 0.0), (), "1/2 <= x <= 1, y = 0",
    ),
}

H1_TEXT = "7*x**3 - 72*x**2 + 72*x + 12*x**2*y - 12*x*y**2 - 144*x*y - 128*y**3 + 144*y"
G1_TEXT = "-128*y**3 + (144 - 144*x + 12*x**2)*y - 72*x**2 + 72*x + 7"
H2_TEXT = ("-12800*y**3 + 10524*x*y**2 + (1140*x**2 - 20736*x + 20736)*y"
           " + 1217*x**3 - 2592*x**2 + 13608*x")
H2_DERIVED_TEXT = ("1140*x**2*y + 7936*y**3 + 13116*x*y**2 + 1217*x**3"
                   " + 2592*(8*y + x)*(1 - x - y**2)")

_REGISTRY_TEXT: Dict[str, Tuple[str, str]] = {
    'h1': (H1_TEXT, "R, second case: bound of H3(1) is 54t + 81t^2 + h1(|c1|^2, |c2|) over D"),
    'g1': (G1_TEXT, "R, second case: h1 < g1 after dropping -12xy^2 and 7x^3 <= 7"),
    'h2': (H2_TEXT, "R1, second case: printed h2 over D"),
    'h2-derived': (H2_DERIVED_TEXT,
                   "R1, second case: h2 re-expanded from the preceding inequality line"),
    'g2-x0': ("1217*x**3 + 11016*x + 2592*x*(1 - x)", "R1, boundary y = 0 of E as printed"),
    'g2-0y-printed': ("20736*y - 12800*y**2", "R1, boundary x = 0 of E as printed"),
    'g2-hyp': ("7936 + 21060*x - 40164*x**2 + 23401*x**3", "R1, hypotenuse y = 1 - x of E"),
    'quartic': ("144 + 480*x*(1 - 2*x) + 6*x*(1 - 4*x**2) + 90*x + x**4",
                "R, critical system of g1 after eliminating y on [0, 1/2]"),
    'dh2dx': ("3*(3508*y**2 - 6912*y + 760*x*y + 1217*x**2 - 1728*x + 4536)",
              "R1, partial derivative of h2 in x as printed"),
    'g1-minus-h1': (f"({G1_TEXT}) - ({H1_TEXT})", "R, g1 dominates h1 on the unit square"),
    'h2-domination': (f"({H2_TEXT}) - ({H2_DERIVED_TEXT})",
                      "R1, printed h2 minus re-derived h2"),
    'critical-numerator': ("6*x - 3", "R, y = (6x - 3)/(x - 6) from the first critical equation"),
    'critical-denominator': ("6 - x", "R, y = (6x - 3)/(x - 6) from the first critical equation"),
}


def region_spec(name: str) -> RegionSpec:
    try:
        return REGIONS[name]
    except KeyError:
        raise InvalidInputError(f"Unknown region '{name}' (known: {', '.join(REGIONS)})")


@lru_cache(maxsize=None)
def named_polynomial(name: str) -> NamedPolynomial:
    try:
        text, provenance = _REGISTRY_TEXT[name]
    except KeyError:
        raise InvalidInputError(
            f"Unknown polynomial '{name}' (known: {', '.join(_REGISTRY_TEXT)})"
        )
    return NamedPolynomial.from_expr(name, text, provenance)


def registered_names() -> List[str]:
    return list(_REGISTRY_TEXT)


def configured_threads() -> int:
    """Worker count from HANKEL_AUDIT_THREADS (0 or unset = single threaded)."""
    raw = os.getenv(THREADS_ENV, "0").strip() or "0"
    try:
        threads = int(raw)
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV} must be a nonnegative integer, got '{raw}'")
    if threads < 0:
        raise InvalidInputError(f"{THREADS_ENV} must be a nonnegative integer, got '{raw}'")
    return threads


# ============================================================================
# Search engine
# ============================================================================

@lru_cache(maxsize=256)
def _gradient(poly: MultiPoly) -> Tuple[MultiPoly, MultiPoly]:
    return poly.diff('x'), poly.diff('y')


def _face(box: Box2, axis: str, high: bool) -> Box2:
    side = getattr(box, axis)
    value = side.hi if high else side.lo
    if axis == 'x':
        return Box2(Interval.point(value), box.y)
    return Box2(box.x, Interval.point(value))


def _reduce(poly: MultiPoly, box: Box2) -> Box2:
    """Collapse a wholly feasible box to the face holding the maximum of poly."""
    gx, gy = _gradient(poly)
    for axis, derivative in (('x', gx), ('y', gy)):
        if getattr(box, axis).is_point or derivative.is_zero:
            continue
        slope = poly_eval_interval(derivative, box, centered=True)
        if slope.lo > 0:
            box = _face(box, axis, high=True)
        elif slope.hi < 0:
            box = _face(box, axis, high=False)
    return box


def _best_point(poly: MultiPoly, region: RegionSpec,
                box: Box2) -> Optional[Tuple[float, Tuple[float, float]]]:
    """Largest certified lower value among feasible centre and corners of box."""
    best = None
    for point in [box.center] + box.corners:
        if not region.contains(point):
            continue
        value = poly_eval_interval(poly, Box2(Interval.point(point[0]), Interval.point(point[1]))).lo
        if best is None or value > best[0]:
            best = (value, point)
    return best


class _Evaluation(NamedTuple):
    """A feasible box after face reduction, its certified bound and best sample."""
    box: Box2
    bound: float
    best: Optional[Tuple[float, Tuple[float, float]]]


def _evaluate(poly: MultiPoly, region: RegionSpec, box: Box2,
              cap: float = np.inf) -> Optional[_Evaluation]:
    """None when box certifiably misses the region."""
    status = region.classify(box)
    if status is None:
        return None
    if status:
        box = _reduce(poly, box)
    bound = min(poly_eval_interval(poly, box, centered=True).hi, cap)
    return _Evaluation(box, bound, _best_point(poly, region, box))


class BoxSearch(pybnb.Problem):
    """Maximum of a polynomial over a region as a pybnb problem.

    Node state is an _Evaluation. Children are evaluated in branch(), on the
    executor when one is given, so pybnb sees the same nodes in the same order
    whatever the thread count.
    """

    def __init__(self, poly: MultiPoly, region: RegionSpec,
                 executor: Optional[ThreadPoolExecutor] = None):
        root = _evaluate(poly, region, region.box)
        if root is None:
            raise InvalidInputError(f"Region '{region.name}' has no feasible points")
        self._poly = poly
        self._region = region
        self._executor = executor
        self._current = root
        self.witness: Optional[Tuple[float, float]] = None
        self.witness_value = -np.inf
        self.floor = -np.inf  # bounds of boxes too thin to split

    def sense(self):
        return pybnb.maximize

    def objective(self):
        found = self._current.best
        if found is None:
            return -pybnb.inf
        value, point = found
        if self.witness is None or value > self.witness_value:
            self.witness_value, self.witness = value, point
        return value

    def bound(self):
        return self._current.bound

    def save_state(self, node):
        node.state = self._current

    def load_state(self, node):
        self._current = node.state

    def branch(self):
        try:
            halves = self._current.box.bisect()
        except InvalidInputError:
            self.floor = max(self.floor, self._current.bound)
            return
        cap = self._current.bound
        if self._executor is None:
            children = [_evaluate(self._poly, self._region, half, cap) for half in halves]
        else:
            children = list(self._executor.map(
                partial(_evaluate, self._poly, self._region, cap=cap), halves))
        for evaluation in children:
            if evaluation is None:
                continue
            child = pybnb.Node()
            child.state = evaluation
            yield child


@dataclass
class _SearchResult:
    upper: float
    lower: float
    witness: Optional[Tuple[float, float]]
    processed: int
    complete: bool
    stopped_early: bool = False


def _search(poly: MultiPoly, region: RegionSpec, tol: float, budget: int, threads: int,
            stop_at: Optional[float] = None) -> _SearchResult:
    if not tol > 0:
        raise InvalidInputError(f"tol must be > 0, got {tol}")
    if budget < 1:
        raise InvalidInputError(f"budget must be >= 1, got {budget}")

    executor = ThreadPoolExecutor(max_workers=threads) if threads > 0 else None
    try:
        problem = BoxSearch(poly, region, executor)
        results = pybnb.Solver(comm=None).solve(
            problem,
            absolute_gap=tol,
            relative_gap=None,
            node_limit=budget,
            objective_stop=stop_at,
            queue_strategy='bound',
            log=logger,
            disable_signal_handlers=True,
        )
    finally:
        if executor is not None:
            executor.shutdown()

    if problem.witness is None:
        return _SearchResult(np.inf, -np.inf, None, results.nodes, False)
    lower = problem.witness_value
    upper = max(float(results.bound), problem.floor, lower)
    stopped_early = results.termination_condition == pybnb.TerminationCondition.objective_limit
    complete = upper - lower <= tol or stopped_early
    if results.termination_condition == pybnb.TerminationCondition.node_limit and not complete:
        logger.warning(
            "Budget of %d boxes exhausted (gap %.3g > tol %.3g)", budget, upper - lower, tol,
        )
    logger.debug("%d boxes processed, bounds [%.12g, %.12g] (%s)",
                 results.nodes, lower, upper, results.termination_condition)
    return _SearchResult(upper, lower, problem.witness, results.nodes, complete, stopped_early)


def _certificate(p: NamedPolynomial, region: RegionSpec, sense: str, tol: float, budget: int,
                 result: _SearchResult, upper: float, lower: float,
                 exact_poly: MultiPoly) -> MaxCertificate:
    if result.witness is None:
        raise HankelAuditError(f"No feasible point of '{region.name}' was found")
    note = CLOSURE_NOTE if region.strict else ""
    if result.stopped_early:
        note = (note + "; " if note else "") + "stopped at a point violating the requested sign"
    return MaxCertificate(
        polynomial=p.name,
        region=f"{region.name}: {region.description}" if region.description else region.name,
        sense=sense,
        tol=tol,
        upper=float(upper),
        lower=float(lower),
        witness=(float(result.witness[0]), float(result.witness[1])),
        witness_value=exact_poly.evaluate_exact(result.witness),
        boxes_processed=result.processed,
        budget=budget,
        complete=result.complete,
        inflation_ulps=INFLATION_ULPS,
        enclosure=SEARCH_SCHEME,
        closure_note=note,
    )


def bb_maximize(p: NamedPolynomial, region: RegionSpec, tol: float = DEFAULT_TOL,
                budget: int = DEFAULT_BUDGET, threads: Optional[int] = None) -> MaxCertificate:
    """Certified maximum of p over region.

    Args:
        p: polynomial in (x, y)
        region: box plus constraints
        tol: target gap between certified upper bound and witness value
        budget: maximum number of boxes (pybnb nodes) to process
        threads: worker threads for child evaluation (None reads HANKEL_AUDIT_THREADS)

    Returns:
        MaxCertificate with sense "max"; complete is False when the budget ran out
    """
    threads = configured_threads() if threads is None else threads
    result = _search(p.poly, region, tol, budget, threads)
    return _certificate(p, region, "max", tol, budget, result, result.upper, result.lower, p.poly)


def bb_minimize(p: NamedPolynomial, region: RegionSpec, tol: float = DEFAULT_TOL,
                budget: int = DEFAULT_BUDGET, threads: Optional[int] = None,
                stop_at: Optional[float] = None) -> MaxCertificate:
    """Certified minimum of p over region (maximisation of -p).

    The search ends early once a feasible point with -p >= stop_at is found.
    """
    threads = configured_threads() if threads is None else threads
    result = _search(-p.poly, region, tol, budget, threads, stop_at)
    return _certificate(p, region, "min", tol, budget, result, -result.lower, -result.upper, p.poly)


@dataclass(frozen=True)
class PositivityResult:
    verified: bool
    margin: float
    strict: bool
    certificate: MaxCertificate

    def to_dict(self) -> dict:
        return {
            'verified': self.verified,
            'margin': self.margin,
            'strict': self.strict,
            'certificate': self.certificate.to_dict(),
        }


def min_positive_check(p: NamedPolynomial, region: RegionSpec, budget: int = DEFAULT_BUDGET,
                       tol: float = DEFAULT_TOL, strict: bool = True,
                       threads: Optional[int] = None) -> PositivityResult:
    """Certify min p > 0 over region (or min p >= 0 when strict is False).

    margin is the certified lower bound of p. Both modes need a certified
    bound, never a tolerance: the relaxed mode verifies only when the search
    closes at exactly 0, as it does where the minimum sits on a face or corner
    that face reduction reaches. Never verifies on an inconclusive run.
    """
    # a feasible point where p already breaks the requested sign
    stop_at = 0.0 if strict else SMALLEST_POSITIVE
    certificate = bb_minimize(p, region, tol, budget, threads, stop_at)
    margin = certificate.lower
    verified = margin > 0 if strict else margin >= 0
    if not verified:
        logger.info("Positivity of %s over %s not verified (margin %.6g)", p.name, region.name, margin)
    return PositivityResult(verified, margin, strict, certificate)


# ============================================================================
# Edges
# ============================================================================

EDGES = ('y=0', 'y=1', 'x=0', 'x=1', 'y=1-x')


def edge_maximize(p: NamedPolynomial, edge: str, tol: float = DEFAULT_TOL,
                  budget: int = DEFAULT_BUDGET, threads: Optional[int] = None) -> MaxCertificate:
    """Maximum of p along one edge of the unit square or the hypotenuse y = 1 - x.

    The edge is substituted exactly and searched as a one-dimensional problem.
    """
    x, _ = MultiPoly.generators(PLANE_VARS)
    if edge == 'y=1-x':
        restricted = NamedPolynomial(f"{p.name}|{edge}", p.poly.substitute({'y': 1 - x}),
                                     p.provenance)
        region = RegionSpec(f"edge {edge}", Box2.from_bounds(0.0, 1.0, 0.0, 0.0), (),
                            "0 <= x <= 1 with y = 1 - x")
        certificate = bb_maximize(restricted, region, tol, budget, threads)
        wx = certificate.witness[0]
        return replace(certificate, witness=(wx, float(1 - Fraction(wx))))
    if edge in ('y=0', 'y=1'):
        value = float(edge[-1])
        box = Box2.from_bounds(0.0, 1.0, value, value)
    elif edge in ('x=0', 'x=1'):
        value = float(edge[-1])
        box = Box2.from_bounds(value, value, 0.0, 1.0)
    else:
        raise InvalidInputError(f"Unknown edge '{edge}' (known: {', '.join(EDGES)})")
    region = RegionSpec(f"edge {edge}", box, (), edge)
    certificate = bb_maximize(NamedPolynomial(f"{p.name}|{edge}", p.poly, p.provenance),
                              region, tol, budget, threads)
    return certificate


def edge_table(p: NamedPolynomial, edges: Sequence[str] = EDGES, tol: float = DEFAULT_TOL,
               budget: int = DEFAULT_BUDGET) -> pd.DataFrame:
    """One row per edge: certified maximum, witness and exact witness value."""
    rows = []
    for edge in edges:
        certificate = edge_maximize(p, edge, tol, budget)
        rows.append({
            'polynomial': p.name,
            'edge': edge,
            'upper': certificate.upper,
            'lower': certificate.lower,
            'witness_x': certificate.witness[0],
            'witness_y': certificate.witness[1],
            'witness_value': float(certificate.witness_value),
            'boxes': certificate.boxes_processed,
            'complete': certificate.complete,
        })
    return pd.DataFrame(rows)
