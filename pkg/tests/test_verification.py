from fractions import Fraction

import pytest

from admflux.sphere_poly import SpherePolynomial, integrate
from admflux.verification import CHECK_NAMES, CheckResult, VerificationSummary, recursive_monomial_integral, verify_known_limits


def test_recursion_base_cases_and_known_values():
    assert recursive_monomial_integral(0, 0) == 1
    assert recursive_monomial_integral(2, 0) == Fraction(1, 3)
    assert recursive_monomial_integral(2, 2) == Fraction(1, 15)
    assert recursive_monomial_integral(4, 2) == Fraction(1, 35)
    with pytest.raises(ValueError):
        recursive_monomial_integral(3, 2)
    with pytest.raises(ValueError):
        recursive_monomial_integral(-2, 2)


def test_recursion_matches_exact_integration():
    x1, x2 = SpherePolynomial.variable(1), SpherePolynomial.variable(2)
    for p in range(0, 13, 2):
        for q in range(0, 13, 2):
            assert integrate(x1**p * x2**q).value == recursive_monomial_integral(p, q)


def test_quick_checks_pass():
    summary = verify_known_limits("exact")
    assert [r.name for r in summary.rows] == ["exact-J", "exact-C"]
    assert summary.passed


def test_monomial_row():
    summary = verify_known_limits("monomial")
    assert summary.passed and summary.rows[0].name == "monomial-table"


def test_degraded_quadrature_is_reported_not_raised():
    summary = verify_known_limits("minkowski", degree=4, max_degree=6)
    assert not summary.passed
    assert any("quadrature-convergence" in r.detail for r in summary.rows)
    assert "FAIL" in summary.table()


def test_summary_table_format():
    rows = (
        CheckResult("a", "1", "1", "exact", True, 0.5),
        CheckResult("b", "1", "2", "exact", False, 0.25, "off by one"),
    )
    s = VerificationSummary(rows)
    text = s.table()
    assert not s.passed
    assert "1/2 checks passed" in text and "off by one" in text
    assert not VerificationSummary(()).passed


def test_check_names_are_stable():
    assert CHECK_NAMES == (
        "exact-J",
        "exact-C",
        "monomial-table",
        "minkowski-J",
        "minkowski-C",
        "schwarzschild",
        "divergent-example",
        "constraints",
    )
