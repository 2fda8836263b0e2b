from fractions import Fraction

import numpy as np
import pytest

from admflux.hypersurface_geometry import Ambient, GraphFunction, SpacelikeViolationError, chart_geometry
from admflux.sources import ExpansionSource, GraphSource, PerturbedFlatMetric, divergent_momentum_data
from admflux.sphere_poly import SpherePolynomial, exterior_d
from admflux.spherical_frame import InvalidRadiusError, chart_basis, random_sphere_points

X1, X2, X3 = (SpherePolynomial.variable(i) for i in (1, 2, 3))
MAIN = GraphFunction.single(Fraction(1, 3), X1 * X2**3)
PTS = random_sphere_points(25, np.random.default_rng(3))


def test_perturbed_metric_derivative_matches_central_difference():
    metric = PerturbedFlatMetric(X1**2 / 2 + 1, -(X1**2) / 2 + 1)
    x = np.array([[7.0, -3.0, 5.0]])
    step = 1e-5
    fd = np.stack([(metric.perturbation(x + step * e) - metric.perturbation(x - step * e))[0] / (2 * step) for e in np.eye(3)])
    np.testing.assert_allclose(metric.derivative(x)[0], fd, rtol=1e-8, atol=1e-14)


def test_perturbed_metric_radial_and_tangential_blocks():
    metric = PerturbedFlatMetric(SpherePolynomial.constant(2), SpherePolynomial.constant(3))
    x = np.array([[0.0, 0.0, 4.0]])
    np.testing.assert_allclose(metric.perturbation(x)[0], np.diag([0.75, 0.75, 0.5]))


def test_divergent_data_rejects_q_outside_range():
    for q in (Fraction(1, 2), 1, Fraction(6, 5)):
        with pytest.raises(ValueError):
            divergent_momentum_data(q, X1**2, X1 * X3)


def test_divergent_data_structure():
    src = divergent_momentum_data(0.6, X1**2, X1 * X3, B=(1, 0, 0), remainder_scale=2)
    powers = [t.power for t in src.expansion.terms]
    assert powers == [-2, Fraction(-13, 5)]
    lead, rem = src.expansion.terms
    assert lead.alpha == exterior_d(X1)
    assert rem.alpha == exterior_d(X1**2) * (X1 * X3) * 2
    assert src.symbolic_radial_momentum() == ((Fraction(-2), lead.alpha), (Fraction(-13, 5), rem.alpha))
    with pytest.raises(InvalidRadiusError):
        src.fields(0.0, PTS)


def test_expansion_source_cartesian_blocks_reassemble_chart_cross_term():
    src = divergent_momentum_data(Fraction(3, 5), X1**2, X1 * X3)
    r = 50.0
    pi = src.fields(r, PTS).pi
    omega = src.radial_momentum(r, PTS)
    theta = np.arccos(PTS[:, 2])
    phi = np.arctan2(PTS[:, 1], PTS[:, 0])
    E = chart_basis(theta, phi)
    # pi(dr, E_a) with dr = x~ and the chart vector r E_a
    from_cart = np.einsum("ni,nij,naj->na", PTS, pi, E) * r
    np.testing.assert_allclose(from_cart, np.einsum("ni,nai->na", omega, E), rtol=1e-12, atol=1e-18)


def test_graph_source_radial_momentum_is_chart_cross_block():
    src = GraphSource(Ambient.schwarzschild(1.0), MAIN)
    r = 300.0
    omega = src.radial_momentum(r, PTS)
    cg = chart_geometry(src.ambient, MAIN, r, PTS)
    np.testing.assert_allclose(np.einsum("ni,nai->na", omega, cg["E"]), cg["pi"][:, 0, 1:], rtol=1e-12, atol=1e-18)
    np.testing.assert_allclose(np.einsum("ni,ni->n", omega, PTS), 0.0, atol=1e-15)


def test_graph_source_fields_agree_with_chart_geometry():
    src = GraphSource(Ambient.schwarzschild(2.0), MAIN)
    r = 80.0
    fl = src.fields(r, PTS)
    cg = chart_geometry(src.ambient, MAIN, r, PTS)
    np.testing.assert_allclose(fl.w2, cg["w2"], rtol=1e-13)
    # g(dr-direction, dr-direction) in both frames
    np.testing.assert_allclose(np.einsum("ni,nij,nj->n", PTS, fl.g, PTS), cg["g"][:, 0, 0], rtol=1e-13)


def test_graph_source_timelike_and_horizon():
    src = GraphSource(Ambient.minkowski(), GraphFunction.single(1, X1 * 3))
    with pytest.raises(SpacelikeViolationError):
        src.fields(10.0, PTS)
    with pytest.raises(InvalidRadiusError):
        GraphSource(Ambient.schwarzschild(1.0), MAIN).fields_at(np.array([[1.0, 0.0, 0.0]]))


def test_permuted_sources_relabel_fields():
    perm = (2, 3, 1)
    P = np.zeros((3, 3))
    for i, j in enumerate(perm):
        P[j - 1, i] = 1.0
    x = np.array([[4.0, 7.0, -2.0]])
    for src in (GraphSource(Ambient.minkowski(), MAIN), divergent_momentum_data(0.6, X1**2, X1 * X3)):
        a = src.fields_at(x).pi[0]
        b = src.permuted(perm).fields_at(x @ P.T).pi[0]
        np.testing.assert_allclose(b, P @ a @ P.T, rtol=1e-12, atol=1e-18)


def test_graph_source_expansion_only_for_single_admissible_term():
    assert GraphSource(Ambient.minkowski(), MAIN).expansion is not None
    assert GraphSource(Ambient.minkowski(), GraphFunction(((Fraction(1, 3), X1), (0, X2)))).expansion is None
