"""
Data model for the Hankel determinant audit: records, exact-value helpers and errors.
"""
import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple


SCHEMA_VERSION = 1
TOOL_VERSION = "1.0.0"


# ============================================================================
# Errors
# ============================================================================

class HankelAuditError(Exception):
    """Base class for every error raised by the audit toolkit."""


class InvalidInputError(HankelAuditError, ValueError):
    """Arguments do not satisfy an operation's input contract."""


class PreconditionError(InvalidInputError):
    """An operation was called outside the domain where it makes a claim."""


class BudgetExhaustedError(HankelAuditError):
    """Branch-and-bound ran out of boxes before reaching its tolerance.

    The attached certificate is still sound; only its gap is wider than asked.
    """

    def __init__(self, message: str, certificate: "MaxCertificate"):
        super().__init__(message)
        self.certificate = certificate


class AuditFailureError(HankelAuditError):
    """A verification item required by a later step did not pass."""

    def __init__(self, message: str, item: "AuditItem"):
        super().__init__(message)
        self.item = item


# ============================================================================
# Exact values
# ============================================================================

def to_fraction(value: Any) -> Fraction:
    """Convert int, float, str ("p/q") or Fraction to an exact Fraction.

    Floats are converted exactly (binary value), never via their decimal repr.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidInputError(f"Not a rational value: {value!r}")
    if isinstance(value, (int, float, str)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError, OverflowError) as e:
            raise InvalidInputError(f"Not a rational value: {value!r} ({e})")
    # sympy Rational and friends expose p/q
    if hasattr(value, "p") and hasattr(value, "q"):
        return Fraction(int(value.p), int(value.q))
    raise InvalidInputError(f"Not a rational value: {value!r}")


def format_fraction(value: Fraction) -> str:
    """Render a rational as "p/q" (q is always printed, even when it is 1)."""
    value = to_fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: str) -> Fraction:
    """Inverse of format_fraction."""
    return to_fraction(text)


def exact_dict(value: Fraction) -> Dict[str, Any]:
    """Lossless JSON form of an exact rational plus a convenience double."""
    return {'exact': format_fraction(value), 'float': float(value)}


# ============================================================================
# Enumerations
# ============================================================================

class ClassId(Enum):
    """The two bounded-turning classes: Re f' > 0 and Re (f' + z f'') > 0."""
    R = "r"
    R1 = "r1"

    @classmethod
    def parse(cls, text: str) -> 'ClassId':
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InvalidInputError(f"Unknown class '{text}' (expected one of: r, r1)")

    @property
    def label(self) -> str:
        return "R" if self is ClassId.R else "R1"


class AuditKind(Enum):
    EXACT_IDENTITY = "exact-identity"
    SIGN_CONDITION = "sign-condition"
    OPTIMIZATION = "optimization"
    DISCREPANCY = "discrepancy"


class AuditStatus(Enum):
    PASS = "pass"
    FAIL = "fail"
    INFO = "info"


# ============================================================================
# Records
# ============================================================================

@dataclass(frozen=True)
class SchwarzSample:
    """Leading coefficients c1..c4 of one Schwarz function, with provenance."""
    c: Tuple[complex, complex, complex, complex]
    provenance: str
    seed: Optional[int] = None
    index: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> 'SchwarzSample':
        """Create a sample from a flat dictionary (one CSV row)."""
        c = tuple(
            complex(data.get(f'c{k}_re', 0.0), data.get(f'c{k}_im', 0.0))
            for k in range(1, 5)
        )
        seed = data.get('seed')
        return cls(
            c=c,
            provenance=data.get('provenance', ''),
            seed=None if seed is None else int(seed),
            index=int(data.get('index', 0)),
        )

    def to_dict(self) -> dict:
        """Flatten to the CSV column layout (re/im of c1..c4)."""
        row = {'index': self.index}
        for k, ck in enumerate(self.c, 1):
            row[f'c{k}_re'] = ck.real
            row[f'c{k}_im'] = ck.imag
        row['provenance'] = self.provenance
        row['seed'] = self.seed
        return row


@dataclass(frozen=True)
class AuditItem:
    """One checked step of a theorem reproduction."""
    name: str
    kind: AuditKind
    status: AuditStatus
    detail: str
    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status is not AuditStatus.FAIL

    @classmethod
    def from_dict(cls, data: dict) -> 'AuditItem':
        return cls(
            name=data['name'],
            kind=AuditKind(data['kind']),
            status=AuditStatus(data['status']),
            detail=data.get('detail', ''),
            data=dict(data.get('data', {})),
        )

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'kind': self.kind.value,
            'status': self.status.value,
            'detail': self.detail,
            'data': self.data,
        }


@dataclass(frozen=True)
class MaxCertificate:
    """Outcome of an interval branch-and-bound run.

    The optimum over the region lies in [lower, upper]. For sense "max" the
    upper end is the certified bound and the lower end is the value of a
    feasible witness; for sense "min" the roles swap.
    """
    polynomial: str
    region: str
    sense: str
    tol: float
    upper: float
    lower: float
    witness: Tuple[float, float]
    witness_value: Fraction
    boxes_processed: int
    budget: int
    complete: bool
    inflation_ulps: int
    enclosure: str
    closure_note: str = ""

    @property
    def certified_bound(self) -> float:
        return self.upper if self.sense == "max" else self.lower

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    @property
    def budget_exhausted(self) -> bool:
        return not self.complete

    @classmethod
    def from_dict(cls, data: dict) -> 'MaxCertificate':
        return cls(
            polynomial=data['polynomial'],
            region=data['region'],
            sense=data['sense'],
            tol=float(data['tol']),
            upper=float(data['upper']),
            lower=float(data['lower']),
            witness=tuple(data['witness']),
            witness_value=parse_fraction(data['witness_value']['exact']),
            boxes_processed=int(data['boxes_processed']),
            budget=int(data['budget']),
            complete=bool(data['complete']),
            inflation_ulps=int(data['inflation_ulps']),
            enclosure=data['enclosure'],
            closure_note=data.get('closure_note', ''),
        )

    def to_dict(self) -> dict:
        return {
            'polynomial': self.polynomial,
            'region': self.region,
            'sense': self.sense,
            'tol': self.tol,
            'upper': self.upper,
            'lower': self.lower,
            'gap': self.gap,
            'witness': list(self.witness),
            'witness_value': exact_dict(self.witness_value),
            'boxes_processed': self.boxes_processed,
            'budget': self.budget,
            'complete': self.complete,
            'budget_exhausted': self.budget_exhausted,
            'inflation_ulps': self.inflation_ulps,
            'enclosure': self.enclosure,
            'closure_note': self.closure_note,
        }


@dataclass(frozen=True)
class CaseProfile:
    """Bound of one case of a theorem: (t-quadratic + part) / scale, t = |c3|.

    t_coefficients are (constant, linear, quadratic) in t. All are nonnegative,
    so the maximum over t in [0, 1] is attained at t = 1.
    """
    class_id: ClassId
    case_index: int
    t_coefficients: Tuple[Fraction, Fraction, Fraction]
    scale: Fraction
    part_name: str = ""

    def t_quadratic(self, t: Fraction) -> Fraction:
        const, lin, quad = self.t_coefficients
        return const + lin * t + quad * t * t

    @property
    def t_maximum(self) -> Fraction:
        return self.t_quadratic(Fraction(1))

    def to_dict(self) -> dict:
        return {
            'class': self.class_id.value,
            'case': self.case_index,
            't_coefficients': [format_fraction(c) for c in self.t_coefficients],
            't_maximum': format_fraction(self.t_maximum),
            'scale': format_fraction(self.scale),
            'part': self.part_name,
        }


@dataclass
class TheoremReport:
    """Everything reproduce_theorem establishes for one class."""
    class_id: ClassId
    case1: CaseProfile
    case1_bound: Fraction
    case2: CaseProfile
    case2_bound: float
    case2_certificate: MaxCertificate
    case2_self_consistent: float
    case2_self_consistent_certificate: MaxCertificate
    final: Fraction
    final_printed_form: str
    audit: List[AuditItem]
    prior_bound: float
    sharp_h2: Fraction
    tol: float
    budget: int

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.audit)

    @property
    def complete(self) -> bool:
        return (self.case2_certificate.complete
                and self.case2_self_consistent_certificate.complete)

    def to_dict(self) -> dict:
        return {
            'class': self.class_id.value,
            'case1': self.case1.to_dict(),
            'case1_bound': exact_dict(self.case1_bound),
            'case2': self.case2.to_dict(),
            'case2_bound': self.case2_bound,
            'case2_certificate': self.case2_certificate.to_dict(),
            'case2_self_consistent': self.case2_self_consistent,
            'case2_self_consistent_certificate': self.case2_self_consistent_certificate.to_dict(),
            'final': self.final_printed_form,
            'final_exact': exact_dict(self.final),
            'audit': [item.to_dict() for item in self.audit],
            'prior_bound': self.prior_bound,
            'sharp_h2': exact_dict(self.sharp_h2),
            'tol': self.tol,
            'budget': self.budget,
            'passed': self.passed,
        }


@dataclass(frozen=True)
class ReportEnvelope:
    """Versioned wrapper around every machine-readable output."""
    command: Dict[str, Any]
    timestamp: str
    payload: Dict[str, Any]
    schema_version: int = SCHEMA_VERSION
    tool_version: str = TOOL_VERSION

    @classmethod
    def from_dict(cls, data: dict) -> 'ReportEnvelope':
        return cls(
            command=dict(data['command']),
            timestamp=data['timestamp'],
            payload=data['payload'],
            schema_version=int(data['schema_version']),
            tool_version=data['tool_version'],
        )

    def to_dict(self) -> dict:
        return {
            'schema_version': self.schema_version,
            'tool_version': self.tool_version,
            'command': self.command,
            'timestamp': self.timestamp,
            'payload': self.payload,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'ReportEnvelope':
        return cls.from_dict(json.loads(text))
