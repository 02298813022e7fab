import math
from fractions import Fraction

import numpy as np
import pytest

import branch_and_bound
from hankel_data_model import (
    AuditFailureError, AuditItem, AuditKind, AuditStatus, BudgetExhaustedError, ClassId,
    InvalidInputError,
)
from branch_and_bound import named_polynomial
from schwarz_functions import SAMPLE_COLUMNS
from theorem_pipeline import (
    CASE1_PROFILES, CASE1_TERMS, NONNEG_SPLITS, PRIOR_BOUND, SHARP_H2, THEOREM_BOUNDS,
    GroupedTerm, Sign, audit_exact_identities,
    audit_sign_conditions, case1_bound, case1_sign_items, case2_bound,
    case2_self_consistent_bound, case_coverage, discrepancy_items, random_search,
    reproduce_theorem, sample_log, triangle_chain_violations, verify_lemmas, witness_array,
)


def by_name(items):
    return {item.name: item for item in items}


@pytest.fixture
def corrupted_h1(monkeypatch):
    """Registry where h1 carries a wrong linear coefficient."""
    text, provenance = branch_and_bound._REGISTRY_TEXT['h1']
    monkeypatch.setitem(branch_and_bound._REGISTRY_TEXT, 'h1',
                        (text.replace("72*x +", "73*x +"), provenance))
    named_polynomial.cache_clear()
    yield
    named_polynomial.cache_clear()


# ============================================================================
# Exact identities
# ============================================================================

def test_r_identities_all_pass():
    items = audit_exact_identities(ClassId.R)
    assert all(item.status is AuditStatus.PASS for item in items), \
        [item.name for item in items if item.status is not AuditStatus.PASS]
    names = by_name(items)
    for expected in ("case 1 regrouping", "case 2 assembly of h1", "g1 - h1",
                     "quartic elimination", "H3(1) regrouped form", "g1 on x=0"):
        assert expected in names
    assert discrepancy_items(ClassId.R) == []


def test_r1_identities_pass_apart_from_reported_discrepancies():
    items = audit_exact_identities(ClassId.R1)
    discrepancies = [item for item in items if item.kind is AuditKind.DISCREPANCY]
    others = [item for item in items if item.kind is not AuditKind.DISCREPANCY]
    assert len(discrepancies) == 3
    assert all(item.status is AuditStatus.INFO for item in discrepancies)
    assert all(item.status is AuditStatus.PASS for item in others)
    names = by_name(items)
    assert "dh2/dx decomposition" in names
    assert "g2 on y=1-x" in names
    assert "case 1 coefficient of |c4|" in names


def test_h2_linear_coefficient_discrepancy():
    item = by_name(discrepancy_items(ClassId.R1))["h2 linear coefficient"]
    assert item.data['delta'] == "11016*x"
    assert item.data['printed_coefficient'] == "13608/1"
    assert item.data['derived_coefficient'] == "2592/1"
    assert item.data['preceding_line_matches_derived']
    assert not item.data['preceding_line_matches_printed']


def test_g2_edge_discrepancy_keeps_the_conclusion():
    item = by_name(discrepancy_items(ClassId.R1))["g2(0, y) degree"]
    assert item.data['printed_max'] == "209952/25"
    assert item.data['restriction_max'] == pytest.approx(10158.52, abs=0.01)
    assert item.data['below_corner_value']
    assert "restriction of h2" in item.detail


def test_case1_value_cross_multiplication():
    item = by_name(audit_exact_identities(ClassId.R1))["case 1 value"]
    assert item.status is AuditStatus.PASS
    assert Fraction(31833, 1166400) == Fraction(3537, 129600)


def test_corrupted_registry_entry_fails_the_audit(corrupted_h1):
    item = by_name(audit_exact_identities(ClassId.R))["case 2 assembly of h1"]
    assert item.status is AuditStatus.FAIL
    assert "x" in item.data['delta']


# ============================================================================
# Case 1
# ============================================================================

@pytest.mark.parametrize("class_id", [ClassId.R, ClassId.R1])
def test_grouped_terms_are_claimed_nonpositive(class_id):
    assert all(term.claimed_nonpositive for term in CASE1_TERMS[class_id])


@pytest.mark.parametrize("class_id", [ClassId.R, ClassId.R1])
def test_case1_terms_are_certified(class_id):
    items = case1_sign_items(class_id)
    assert len(items) == len(CASE1_TERMS[class_id])
    assert all(item.status is AuditStatus.PASS for item in items)


def test_case1_split_factor_is_certified_without_slack():
    item = by_name(case1_sign_items(ClassId.R1))["case 1 term -11016*(x)*(1 - x - y**2)"]
    factor = item.data['factors'][1]
    assert factor['method'].startswith("exact split")
    assert factor['split_is_exact'] and factor['verified']
    assert factor['margin'] >= 0
    assert [piece['factor'] for piece in factor['pieces']] == ["1 - x - y", "y", "1 - y"]
    assert factor['pieces'][0]['method'] == "region constraint"


def test_split_must_reproduce_the_factor(monkeypatch):
    monkeypatch.setitem(NONNEG_SPLITS, "1 - x - y**2", (("1 - x - y",), ("y",)))
    item = by_name(case1_sign_items(ClassId.R1))["case 1 term -11016*(x)*(1 - x - y**2)"]
    assert item.status is AuditStatus.FAIL
    assert not item.data['factors'][1]['split_is_exact']


def test_slightly_positive_nonpositive_factor_fails(monkeypatch):
    # y**2 - 1 + 1/10000000 is 1e-7 at the corner (0, 1) of E
    terms = tuple(
        GroupedTerm(4, (("x", Sign.NONNEG), ("y**2 - 1 + 1/10000000", Sign.NONPOS)))
        if term.coefficient == 4 else term
        for term in CASE1_TERMS[ClassId.R]
    )
    monkeypatch.setitem(CASE1_TERMS, ClassId.R, terms)
    items = by_name(case1_sign_items(ClassId.R))
    failing = items["case 1 term 4*(x)*(y**2 - 1 + 1/10000000)"]
    assert failing.status is AuditStatus.FAIL
    assert failing.data['factors'][1]['margin'] < 0
    assert sum(item.status is AuditStatus.FAIL for item in items.values()) == 1


def test_case1_bounds_are_exact():
    assert case1_bound(ClassId.R) == Fraction(207, 540) == Fraction(23, 60)
    assert case1_bound(ClassId.R1) == Fraction(31833, 1166400)
    profile = CASE1_PROFILES[ClassId.R]
    assert profile.t_quadratic(Fraction(0)) * profile.scale == Fraction(72, 540)


def test_case1_bound_names_the_failing_term():
    failing = AuditItem("case 1 term 16*(y**2)*(y - 1)", AuditKind.SIGN_CONDITION,
                        AuditStatus.FAIL, "forced")
    with pytest.raises(AuditFailureError, match="16"):
        case1_bound(ClassId.R, sign_items=[failing])


# ============================================================================
# Case 2
# ============================================================================

def test_case2_bound_r():
    bound, certificate = case2_bound(ClassId.R)
    assert certificate.complete
    assert bound == pytest.approx((135 + 7 + 24 * math.sqrt(6)) / 540, abs=1e-6)
    assert bound == pytest.approx(0.371829, abs=1e-6)
    assert bound < float(case1_bound(ClassId.R))


def test_case2_bound_r1():
    bound, _ = case2_bound(ClassId.R1)
    assert bound == pytest.approx(15229 / 583200, abs=1e-9)
    assert bound < 3537 / 129600


def test_case2_budget_exhaustion_carries_the_certificate():
    with pytest.raises(BudgetExhaustedError) as excinfo:
        case2_bound(ClassId.R, tol=1e-12, budget=5)
    certificate = excinfo.value.certificate
    assert not certificate.complete
    assert certificate.upper >= 7 + 24 * math.sqrt(6)


def test_self_consistent_bounds():
    r_bound, _ = case2_self_consistent_bound(ClassId.R)
    assert r_bound <= case2_bound(ClassId.R)[0]
    r1_bound, certificate = case2_self_consistent_bound(ClassId.R1)
    assert certificate.closure_note
    assert r1_bound <= 15229 / 583200
    assert r1_bound >= (18225 + 20736 * math.sqrt(6) / 5) / 1166400 - 1e-9


def test_sign_conditions_pass():
    for class_id in ClassId:
        items = audit_sign_conditions(class_id)
        assert all(item.passed for item in items), [i.name for i in items if not i.passed]
    r1 = by_name(audit_sign_conditions(ClassId.R1))
    assert r1["dh2/dx positive"].data['margin'] >= 648


# ============================================================================
# Theorem
# ============================================================================

def test_reproduce_r():
    report = reproduce_theorem(ClassId.R, threads=0)
    assert report.final == Fraction(207, 540)
    assert report.final_printed_form == "207/540"
    assert float(report.final) == pytest.approx(0.383333, abs=1e-6)
    assert report.passed and report.complete
    assert report.prior_bound == pytest.approx(0.64488, abs=1e-5)
    assert report.sharp_h2 == SHARP_H2
    payload = report.to_dict()
    assert payload['final'] == "207/540"
    assert payload['final_exact']['exact'] == "23/60"


def test_reproduce_r1():
    report = reproduce_theorem(ClassId.R1, threads=0)
    assert report.final == Fraction(3537, 129600)
    assert report.final_printed_form == "3537/129600"
    assert float(report.final) == pytest.approx(0.0272917, abs=1e-7)
    assert report.passed
    assert len([i for i in report.audit if i.kind is AuditKind.DISCREPANCY]) == 3


def test_prior_bound_constant():
    assert PRIOR_BOUND == pytest.approx((877 / 3 + 25 * math.sqrt(5)) / 540)


# ============================================================================
# Sampling runs
# ============================================================================

def test_random_search_r():
    summary = random_search(ClassId.R, n=3000, seed=42)
    assert summary.violations == 0
    assert summary.best_value >= 0.25
    assert summary.best_value < float(THEOREM_BOUNDS[ClassId.R][0])
    assert summary.witness_values['z^3'] == pytest.approx(0.25)
    assert summary.h2_violations == 0
    assert summary.h2_best == pytest.approx(4 / 9)
    assert summary.triangle_chain_violations == 0
    assert summary.case_counts['outside'] == 0


def test_random_search_r1():
    summary = random_search(ClassId.R1, n=1000, seed=7)
    assert summary.violations == 0
    assert summary.witness_values['z^3'] == pytest.approx(1 / 64)
    assert summary.h2_best is None
    assert summary.best_value < float(THEOREM_BOUNDS[ClassId.R1][0])


@pytest.mark.slow
@pytest.mark.parametrize("class_id, seed", [(ClassId.R, 42), (ClassId.R1, 7)])
def test_full_size_random_search_stays_below_the_bounds(class_id, seed):
    summary = random_search(class_id, n=100_000, seed=seed)
    assert summary.samples == 100_000
    assert summary.violations == 0
    assert summary.best_value < float(THEOREM_BOUNDS[class_id][0])
    assert summary.triangle_chain_violations == 0
    assert summary.case_counts['outside'] == 0
    if class_id is ClassId.R:
        assert summary.h2_violations == 0


@pytest.mark.slow
def test_full_size_lemma_run():
    items = by_name(verify_lemmas(n=100_000, seed=42))
    assert all(item.passed for item in items.values())
    assert items["Prokhorov estimate"].data['grid_size'] == 22


def test_random_search_is_deterministic():
    first = random_search(ClassId.R1, n=500, seed=11).to_dict()
    second = random_search(ClassId.R1, n=500, seed=11).to_dict()
    assert first == second


def test_random_search_with_workers():
    summary = random_search(ClassId.R, n=1001, seed=3, workers=2)
    assert summary.samples == 1001
    assert summary.violations == 0


def test_random_search_rejects_empty_runs():
    with pytest.raises(InvalidInputError):
        random_search(ClassId.R, n=0)
    with pytest.raises(InvalidInputError):
        verify_lemmas(n=0)


def test_lemmas_hold_on_samples():
    items = by_name(verify_lemmas(n=5000, seed=1))
    assert all(item.passed for item in items.values())
    prokhorov = items["Prokhorov estimate"]
    assert prokhorov.data['grid_size'] == 22
    assert "(-2, 1)" in prokhorov.data['margins']
    assert "(-2/19, 1)" in prokhorov.data['margins']
    assert items["equality cases"].status is AuditStatus.PASS


def test_triangle_chain_and_case_coverage_on_witnesses():
    c = witness_array()
    for class_id in ClassId:
        assert triangle_chain_violations(class_id, c) == 0
    assert case_coverage(ClassId.R, c) == {'case1': 2, 'case2': 2, 'outside': 0}
    outside = np.array([[0.9, 0.5, 0, 0]], dtype=complex)
    assert case_coverage(ClassId.R1, outside)['outside'] == 1


def test_sample_log_has_h3_values():
    df = sample_log(ClassId.R, n=50, seed=5)
    assert list(df.columns) == SAMPLE_COLUMNS
    assert len(df) == 54
    assert df['abs_h3'].notna().all()
    assert df['abs_h3'].iloc[-2] == pytest.approx(0.25)
