import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from admflux.sphere_poly import SphereOneForm, SpherePolynomial

settings.register_profile(
    "admflux",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("admflux")

PROPERTY_EXAMPLES = 200

ORACLE_FILE = Path(__file__).parent / "oracles" / "frozen.json"


@pytest.fixture(scope="session")
def oracle():
    return json.loads(ORACLE_FILE.read_text())


coefficients = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def exponent_triples(draw, max_degree: int, allow_high_x3: bool = True, parity: int | None = None):
    """Exponents (a, b, c) with a + b + c <= max_degree, optionally of fixed parity."""
    degrees = [d for d in range(max_degree + 1) if parity is None or d % 2 == parity]
    d = draw(st.sampled_from(degrees))
    c = draw(st.integers(0, d if allow_high_x3 else min(d, 1)))
    a = draw(st.integers(0, d - c))
    return (a, d - c - a, c)


def raw_polynomials(max_degree: int = 10, max_terms: int = 6):
    """Unreduced term maps that may contain any power of x3."""
    return st.dictionaries(exponent_triples(max_degree), coefficients, max_size=max_terms)


def polynomials(max_degree: int = 6, max_terms: int = 5):
    return raw_polynomials(max_degree, max_terms).map(SpherePolynomial)


def one_forms(max_degree: int = 8, max_terms: int = 4):
    return st.tuples(*(polynomials(max_degree, max_terms) for _ in range(3))).map(SphereOneForm)


def odd_polynomials(max_degree: int = 5, max_terms: int = 4):
    terms = st.dictionaries(exponent_triples(max_degree, parity=1), coefficients, min_size=1, max_size=max_terms)
    return terms.map(SpherePolynomial)


def unit_vectors():
    return st.tuples(*(st.floats(-1, 1) for _ in range(3))).filter(lambda v: 0.1 < np.linalg.norm(v)).map(
        lambda v: np.asarray(v) / np.linalg.norm(v)
    )


def frac(s) -> Fraction:
    return Fraction(s)
