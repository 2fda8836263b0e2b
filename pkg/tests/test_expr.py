from fractions import Fraction

import pytest
from hypothesis import given

from admflux.expr import ExpressionError, UnknownIdentifierError, parse_expression
from admflux.sphere_poly import SpherePolynomial

from conftest import polynomials

X1, X2, X3 = (SpherePolynomial.variable(i) for i in (1, 2, 3))


def test_monomial():
    assert parse_expression("x1*x2^3") == X1 * X2**3


def test_sum():
    assert parse_expression("x1 + x1*x2") == X1 + X1 * X2


def test_canonicalized_after_parse():
    assert parse_expression("x3^2") == 1 - X1**2 - X2**2


def test_rational_literals_and_whitespace():
    assert parse_expression(" 1/3 * x1 ^ 2 - 2/4") == Fraction(1, 3) * X1**2 - Fraction(1, 2)


def test_unary_minus_and_parentheses():
    assert parse_expression("-(x1 - x2)*(x1 + x2)") == X2**2 - X1**2
    assert parse_expression("--x1") == X1


def test_exponent_binds_tighter_than_product():
    assert parse_expression("2*x1^2") == 2 * X1**2


@pytest.mark.parametrize("text", ["x1 +", "x1 ** 2", "(x1", "x1)", "3 x1", "", "x1^", "x1^x2", "1/0"])
def test_syntax_errors(text):
    with pytest.raises(ExpressionError):
        parse_expression(text)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as err:
        parse_expression("x1 + y")
    assert err.value.column == 6


def test_negative_exponent_rejected():
    with pytest.raises(ExpressionError):
        parse_expression("x1^-2")


def test_error_reports_line_and_column():
    with pytest.raises(ExpressionError) as err:
        parse_expression("x1 +\n  x2 $ 3")
    assert (err.value.line, err.value.column) == (2, 6)


def test_non_ascii_rejected():
    with pytest.raises(ExpressionError):
        parse_expression("x₁")


@given(polynomials(max_degree=8, max_terms=6))
def test_printed_form_reparses(A):
    assert parse_expression(str(A)) == A
