from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from admflux.sphere_poly import (
    ORIENTATION,
    SphereOneForm,
    SpherePolynomial,
    SphereSym2,
    canonicalize,
    exterior_d,
    grad_dot,
    hessian,
    hodge_star_d,
    integrate,
    laplacian,
    monomial_integral,
)
from admflux.spherical_frame import quadrature_integrate, quadrature_rule, random_sphere_points

from conftest import odd_polynomials, one_forms, polynomials, raw_polynomials

P = SpherePolynomial.parse
X1, X2, X3 = (SpherePolynomial.variable(i) for i in (1, 2, 3))


# --- independent numeric helpers -------------------------------------------------


def ambient_gradient(A: SpherePolynomial, x: np.ndarray) -> np.ndarray:
    """Gradient of the polynomial extension of A, differentiated term by term in numpy."""
    out = np.zeros_like(x)
    for (a, b, c), v in A.items():
        v = float(v)
        e = np.array([a, b, c])
        for k in range(3):
            if e[k] == 0:
                continue
            ek = e.copy()
            ek[k] -= 1
            out[:, k] += v * e[k] * np.prod(x ** ek, axis=1)
    return out


def tangential(v, x):
    return v - np.einsum("ni,ni->n", v, x)[:, None] * x


def chart_star_d(w: SphereOneForm, theta, phi, h=1e-3):
    """*d w with the outward-normal orientation, by 4th-order differences in (theta, phi)."""

    def comps(t, p):
        x = np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)
        xt = np.stack([np.cos(t) * np.cos(p), np.cos(t) * np.sin(p), -np.sin(t)], axis=-1)
        xp = np.stack([-np.sin(t) * np.sin(p), np.sin(t) * np.cos(p), np.zeros_like(t)], axis=-1)
        W = w.evaluate(x)
        return np.einsum("ni,ni->n", W, xt), np.einsum("ni,ni->n", W, xp)

    def d(fn, which):
        c = [1 / 12, -8 / 12, 8 / 12, -1 / 12]
        off = [-2, -1, 1, 2]
        return sum(ci * fn(o * h) for ci, o in zip(c, off)) / h

    d_theta_wphi = d(lambda s: comps(theta + s, phi)[1], 0)
    d_phi_wtheta = d(lambda s: comps(theta, phi + s)[0], 1)
    return (d_theta_wphi - d_phi_wtheta) / np.sin(theta)


# --- canonical form ------------------------------------------------------------


def test_sphere_relation_reduces_to_one():
    assert P("x1^2 + x2^2 + x3^2") == SpherePolynomial.constant(1)


def test_x3_squared_eliminated():
    assert P("x3^2") == P("1 - x1^2 - x2^2")
    assert dict(P("x3^2").terms) == {(0, 0, 0): 1, (2, 0, 0): -1, (0, 2, 0): -1}


def test_x1_x3_cubed_matches_oracle(oracle):
    expected = P(oracle["canonical_x1_x3cubed"].replace("**", "^"))
    assert P("x3^3*x1") == expected
    assert expected == P("x1*x3 - x1^3*x3 - x1*x2^2*x3")


def test_zero_polynomial_has_no_terms():
    z = P("x1 - x1")
    assert z.is_zero() and dict(z.terms) == {}
    assert not P("x3^2 + x1^2 + x2^2 - 1").terms


def test_canonical_terms_have_low_x3_power():
    A = P("x3^7*x1 + x3^4 - 3*x2*x3^5")
    assert all(c <= 1 for (_, _, c) in A.terms)
    assert all(v != 0 for v in A.terms.values())


def test_canonical_function_values_unchanged():
    raw = {(1, 0, 3): Fraction(2), (0, 2, 4): Fraction(-1, 3), (0, 0, 6): Fraction(5)}
    A = canonicalize(raw)
    x = random_sphere_points(50, np.random.default_rng(1))
    direct = 2 * x[:, 0] * x[:, 2] ** 3 - x[:, 1] ** 2 * x[:, 2] ** 4 / 3 + 5 * x[:, 2] ** 6
    np.testing.assert_allclose(A.evaluate(x), direct, rtol=1e-13, atol=1e-13)


# --- gradient pairing and Laplacian ------------------------------------------------


def test_grad_dot_generators():
    assert grad_dot(X1, X2) == -X1 * X2
    assert grad_dot(X1, X1) == 1 - X1 * X1


def test_grad_dot_main_example():
    A = P("x1*x2^3")
    assert grad_dot(A, A) == P("x2^6 + 9*x1^2*x2^4 - 16*x1^2*x2^6")


def test_grad_dot_against_numeric_pairing():
    rng = np.random.default_rng(7)
    rule = quadrature_rule(30)
    x = random_sphere_points(200, rng)
    for _ in range(20):
        A = SpherePolynomial({tuple(rng.integers(0, 4, 3)): 1})
        B = SpherePolynomial({tuple(rng.integers(0, 4, 3)): 1})
        gA = tangential(ambient_gradient(A, x), x)
        gB = tangential(ambient_gradient(B, x), x)
        numeric = np.einsum("ni,ni->n", gA, gB)
        np.testing.assert_allclose(grad_dot(A, B).evaluate(x), numeric, atol=1e-12)
        dA, dB = exterior_d(A), exterior_d(B)
        np.testing.assert_allclose(dA.dot(dB).evaluate(x), numeric, atol=1e-12)
        pts = rule.points
        quad = rule.integrate(
            np.einsum("ni,ni->n", tangential(ambient_gradient(A, pts), pts), tangential(ambient_gradient(B, pts), pts))
        )
        assert abs(float(integrate(grad_dot(A, B))) - quad) <= 1e-12 * max(1.0, abs(quad))


def test_laplacian_examples():
    assert laplacian(X1) == -2 * X1
    A = P("x1*x2^3")
    assert laplacian(A) == -20 * A + 6 * X1 * X2
    assert laplacian(SpherePolynomial.constant(1)).is_zero()


@pytest.mark.parametrize("m", [X1, X2, X3])
def test_degree_one_eigenfunctions(m):
    assert laplacian(m) == -2 * m


def test_degree_two_harmonic():
    assert laplacian(X1 * X2) == -6 * X1 * X2


def test_laplacian_is_trace_of_hessian():
    A = P("x1*x2^3 - 2*x3*x1 + x2")
    assert hessian(A).trace() == laplacian(A)


# --- integration ---------------------------------------------------------------------


def test_integral_examples():
    assert integrate(P("x1^4")).value == Fraction(1, 5)
    assert integrate(P("x1^2*x2^4")).value == Fraction(1, 35)
    assert integrate(P("x1*x2^2")).value == 0
    assert str(integrate(P("1"))) == "4π"


def test_monomial_integrals_match_spherical_coordinates(oracle):
    table = oracle["monomials_over_4pi"]
    assert len(table) >= 30
    for key, val in table.items():
        a, b, c = map(int, key.split(","))
        assert monomial_integral(a, b, c) == Fraction(val)
        assert integrate(SpherePolynomial({(a, b, c): 1})).value == Fraction(val)


def recursion_reference(p, q):
    if p == 0:
        return Fraction(1, q + 1)
    if q == 0:
        return Fraction(1, p + 1)
    n = p + q
    return (p * (p - 1) * recursion_reference(p - 2, q) + q * (q - 1) * recursion_reference(p, q - 2)) / Fraction(n * (n + 1))


@pytest.mark.parametrize("i,j", [(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)])
def test_two_exponent_recursion(i, j):
    xi, xj = SpherePolynomial.variable(i), SpherePolynomial.variable(j)
    for p in range(0, 13, 2):
        for q in range(0, 13, 2):
            assert integrate(xi**p * xj**q).value == recursion_reference(p, q), (p, q)


@given(polynomials(max_degree=10, max_terms=6))
def test_exact_integral_agrees_with_quadrature(A):
    rule = quadrature_rule(max(A.degree(), 1))
    num = quadrature_integrate(A, rule)
    ex = float(integrate(A))
    scale = float(integrate(SpherePolynomial({k: abs(v) for k, v in A.items()}))) + 1.0
    assert abs(num - ex) <= 1e-12 * scale


# --- exterior derivative and Hodge star ---------------------------------------------


def test_exterior_d_examples():
    assert exterior_d(SpherePolynomial.constant(3)).is_zero()
    assert exterior_d(X1) == SphereOneForm((1 - X1 * X1, -X1 * X2, -X1 * X3))


def test_one_form_projection_invariant():
    w = SphereOneForm((X2, X3 * X1, SpherePolynomial.constant(1)))
    radial = sum((c * x for c, x in zip(w.comps, (X1, X2, X3))), SpherePolynomial())
    assert radial.is_zero()
    # adding a multiple of the normal does not change the form
    n = P("x1*x2 - 3")
    assert SphereOneForm((X2 + n * X1, X3 * X1 + n * X2, 1 + n * X3)) == w


def test_star_d_of_exact_form_vanishes():
    for A in (P("x1*x2^3"), P("x3^5 - x1*x2"), X1):
        assert hodge_star_d(exterior_d(A)).is_zero()


def test_star_d_worked_example():
    A = P("x1*x2^3")
    w = exterior_d(A) * P("-3*x1^2*x2^4 - x2^6")
    assert hodge_star_d(w) == P("x3*(-6*x2^8 + 6*x1^2*x2^6)")


def test_star_d_matches_chart_differences():
    w = X2 * exterior_d(X1)
    exact = hodge_star_d(w)
    assert exact == X3
    rng = np.random.default_rng(3)
    theta = rng.uniform(0.3, np.pi - 0.3, 200)
    phi = rng.uniform(0, 2 * np.pi, 200)
    x = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
    numeric = ORIENTATION * chart_star_d(w, theta, phi)
    np.testing.assert_allclose(exact.evaluate(x), numeric, atol=1e-10)


def test_star_d_random_forms_match_chart_differences():
    rng = np.random.default_rng(11)
    theta = rng.uniform(0.4, np.pi - 0.4, 60)
    phi = rng.uniform(0, 2 * np.pi, 60)
    x = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
    for _ in range(10):
        comps = [SpherePolynomial({tuple(rng.integers(0, 3, 3)): int(rng.integers(-3, 4))}) for _ in range(3)]
        w = SphereOneForm(comps)
        np.testing.assert_allclose(
            hodge_star_d(w).evaluate(x), ORIENTATION * chart_star_d(w, theta, phi), atol=1e-8
        )


@given(polynomials(max_degree=6))
def test_integral_of_laplacian_vanishes(A):
    assert integrate(laplacian(A)).value == 0


# --- symmetric two-tensors ---------------------------------------------------------------


def test_metric_trace_is_two():
    assert SphereSym2.metric().trace() == SpherePolynomial.constant(2)
    assert SphereSym2.metric().traceless().is_zero()


def test_metric_divergence_vanishes():
    assert SphereSym2.metric().divergence().is_zero()
    assert (SphereSym2.metric() * P("x1*x2")).divergence() == exterior_d(P("x1*x2"))


def test_symmetric_product_contracts_to_pairing():
    a, b = exterior_d(X1), exterior_d(P("x2*x3"))
    S = SphereSym2.sym_product(a, b)
    assert S.trace() == a.dot(b)


@given(odd_polynomials(6, 6))
def test_evaluation_is_exactly_odd_at_any_batch_position(A):
    pts = quadrature_rule(24).points
    n = len(pts) // 2
    v = A.evaluate(pts)
    assert np.array_equal(v[n:], -v[:n])
    assert np.array_equal(A.evaluate(pts[::-1])[::-1], v)
