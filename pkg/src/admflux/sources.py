"""Initial data sources for the flux integrals.

A source supplies Cartesian metric, metric derivatives and momentum at
arbitrary points, and the radial block pi_r of the momentum on coordinate
spheres (numerically, and symbolically when it is known in closed form).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import kernel
from .hypersurface_geometry import (
    Ambient,
    GraphFunction,
    MomentumExpansion,
    ExpansionTerm,
    SpacelikeViolationError,
    chart_geometry,
    momentum_expansion,
)
from .sphere_poly import SphereOneForm, SpherePolynomial, SphereSym2, exterior_d
from .spherical_frame import InvalidRadiusError

__all__ = [
    "CartesianFields",
    "FluxSource",
    "GraphSource",
    "ExpansionSource",
    "PerturbedFlatMetric",
    "divergent_momentum_data",
]


class CartesianFields(NamedTuple):
    h: np.ndarray  # (M, 3, 3), g - delta
    dg: np.ndarray  # (M, 3, 3, 3), dg[:, k, i, j] = d_k g_ij
    pi: np.ndarray  # (M, 3, 3)
    w2: np.ndarray  # (M,)

    @property
    def g(self) -> np.ndarray:
        return np.eye(3) + self.h


class FluxSource(abc.ABC):
    label: str = "source"

    @abc.abstractmethod
    def check_radius(self, r: float) -> None: ...

    @abc.abstractmethod
    def fields_at(self, x) -> CartesianFields:
        """Fields at Cartesian points x of shape (M, 3)."""

    def fields(self, r: float, points) -> CartesianFields:
        self.check_radius(r)
        return self.fields_at(r * np.asarray(points, dtype=float))

    @abc.abstractmethod
    def radial_momentum(self, r: float, points) -> np.ndarray:
        """Tangential one-form omega on the unit sphere with omega . E_a = pi_ra, shape (M, 3)."""

    def symbolic_radial_momentum(self) -> tuple[tuple[Fraction, SphereOneForm], ...] | None:
        """Terms (s, alpha_s) with pi_r = sum r^{s+1} alpha_s exactly, or None."""
        return None

    @property
    def expansion(self) -> MomentumExpansion | None:
        return None

    def permuted(self, perm: tuple[int, int, int]) -> "FluxSource":
        raise NotImplementedError


class GraphSource(FluxSource):
    """Spacelike graph t = f over the static slice of ``ambient``."""

    def __init__(self, ambient: Ambient, f: GraphFunction, label: str | None = None):
        self.ambient = ambient
        self.f = f
        self.label = label or f"graph[{ambient.kind}, m={ambient.mass:g}] f = {f}"
        self._expansion = None
        self._expansion_done = False

    def __repr__(self):
        return f"GraphSource({self.ambient!r}, {self.f})"

    def check_radius(self, r: float) -> None:
        self.ambient.check_radius(r)

    def fields_at(self, x) -> CartesianFields:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=-1)
        if np.any(r <= 2 * self.ambient.mass):
            raise InvalidRadiusError("field evaluation inside r <= 2m")
        jet = self.f.jet(r, x / r[:, None])
        out = CartesianFields(*kernel.graph_fields(x, self.ambient.mass, jet.cartesian_gradient(), jet.cartesian_hessian()))
        bad = ~(out.w2 > 0)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise SpacelikeViolationError(float(r[i]), x[i] / r[i], float(out.w2[i]))
        return out

    def radial_momentum(self, r: float, points) -> np.ndarray:
        cg = chart_geometry(self.ambient, self.f, r, points)
        pi_ra = cg["pi"][..., 0, 1:]
        s2 = 1.0 - np.asarray(points)[..., 2] ** 2
        up = np.stack([pi_ra[..., 0], pi_ra[..., 1] / s2], axis=-1)
        return np.einsum("...a,...ai->...i", up, cg["E"])

    @property
    def expansion(self) -> MomentumExpansion | None:
        if not self._expansion_done:
            self._expansion_done = True
            if self.f.is_single_term() and 0 <= self.f.terms[0][0] < Fraction(1, 2):
                self._expansion = momentum_expansion(self.ambient, self.f)
        return self._expansion

    def permuted(self, perm):
        return GraphSource(self.ambient, self.f.permuted(perm))


@dataclass(frozen=True)
class PerturbedFlatMetric:
    """g = delta + (a/r) x~ x~^T + (b/r) (delta - x~ x~^T) with a, b functions on S^2."""

    a: SpherePolynomial
    b: SpherePolynomial

    def _h(self, x):
        r = np.sqrt(np.einsum("...i,...i->...", x, x))
        xt = x / r[..., None]
        a = self.a.evaluate(xt) / r
        b = self.b.evaluate(xt) / r
        xx = xt[..., :, None] * xt[..., None, :]
        return a[..., None, None] * xx + b[..., None, None] * (np.eye(3) - xx)

    def perturbation(self, x) -> np.ndarray:
        """g - delta."""
        return self._h(np.asarray(x, dtype=float))

    def derivative(self, x) -> np.ndarray:
        """d_k g_ij by complex-step differentiation (exact to rounding)."""
        x = np.asarray(x, dtype=float)
        h = 1e-20 * np.linalg.norm(x, axis=-1)
        out = np.empty(x.shape[:-1] + (3, 3, 3))
        for k in range(3):
            xc = x.astype(complex)
            xc[..., k] += 1j * h
            out[..., k, :, :] = self._h(xc).imag / h[..., None, None]
        return out


class ExpansionSource(FluxSource):
    """Momentum given by explicit graded terms, optionally with a metric model."""

    def __init__(self, expansion: MomentumExpansion, metric: PerturbedFlatMetric | None = None, label: str = "explicit"):
        self._exp = expansion
        self.metric = metric
        self.label = label

    def check_radius(self, r: float) -> None:
        if not r > 0:
            raise InvalidRadiusError(f"radius must be positive, got {r}")

    def fields_at(self, x) -> CartesianFields:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        pi = self._exp.cartesian(x)
        if self.metric is None:
            h = np.zeros(x.shape[:-1] + (3, 3))
            dg = np.zeros(x.shape[:-1] + (3, 3, 3))
        else:
            h = self.metric.perturbation(x)
            dg = self.metric.derivative(x)
        return CartesianFields(h, dg, pi, np.ones(x.shape[:-1]))

    def radial_momentum(self, r: float, points) -> np.ndarray:
        return self._exp.cross_block(r, points)

    def symbolic_radial_momentum(self):
        return tuple((t.power, t.alpha) for t in self._exp.terms if t.alpha is not None)

    @property
    def expansion(self) -> MomentumExpansion:
        return self._exp

    def permuted(self, perm):
        def sub(t: ExpansionTerm) -> ExpansionTerm:
            return ExpansionTerm(
                t.power,
                None if t.beta is None else t.beta.substitute_axes(perm),
                None if t.alpha is None else _permute_form(t.alpha, perm),
                None if t.h is None else _permute_sym(t.h, perm),
            )

        metric = None
        if self.metric is not None:
            metric = PerturbedFlatMetric(self.metric.a.substitute_axes(perm), self.metric.b.substitute_axes(perm))
        exp = MomentumExpansion(tuple(sub(t) for t in self._exp.terms), self._exp.truncation)
        return ExpansionSource(exp, metric, self.label)


def _permute_form(w: SphereOneForm, perm) -> SphereOneForm:
    comps = [None] * 3
    for i in range(3):
        comps[perm[i] - 1] = w.comps[i].substitute_axes(perm)
    return SphereOneForm(comps)


def _permute_sym(h: SphereSym2, perm) -> SphereSym2:
    rows = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            rows[perm[i] - 1][perm[j] - 1] = h.comps[i][j].substitute_axes(perm)
    return SphereSym2(rows)


def divergent_momentum_data(
    q,
    alpha: SpherePolynomial,
    beta: SpherePolynomial,
    B=(0, 0, 0),
    A0=0,
    remainder_scale=1,
) -> ExpansionSource:
    """Initial data with a radial-angular momentum remainder of order r^{-2-q}.

    Displayed terms::

        g  = (1 + A0/r + alpha/2r) dr^2 + (1 + A0/r - alpha/2r) r^2 sigma
        pi = beta/r^2 dr^2 + (2/r) d(B.x~) dr + (B.x~) sigma

    The displayed momentum has a closed pi_r and carries no angular momentum.
    The O(r^{-2-q}) remainder is modelled by the cross block
    ``pi_ra = remainder_scale * r^{-1-q} (beta d alpha)_a``, which is not closed
    for generic alpha, beta and makes the flux grow like r^{1-q}.
    """
    q = Fraction(str(q)) if isinstance(q, float) else Fraction(q)
    if not (Fraction(1, 2) < q < 1):
        raise ValueError(f"q must lie in (1/2, 1), got {q}")
    kappa = Fraction(str(remainder_scale)) if isinstance(remainder_scale, float) else Fraction(remainder_scale)
    A0 = Fraction(str(A0)) if isinstance(A0, float) else Fraction(A0)
    Bt = SpherePolynomial()
    for i, Bi in enumerate(B):
        Bi = Fraction(str(Bi)) if isinstance(Bi, float) else Fraction(Bi)
        Bt = Bt + SpherePolynomial.variable(i + 1) * Bi
    terms = (
        ExpansionTerm(Fraction(-2), beta=beta, alpha=exterior_d(Bt), h=SphereSym2.metric() * Bt),
        ExpansionTerm(-2 - q, alpha=exterior_d(alpha) * beta * kappa),
    )
    half = Fraction(1, 2)
    metric = PerturbedFlatMetric(alpha * half + A0, -(alpha * half) + A0)
    label = f"divergent-momentum q={q} alpha={alpha} beta={beta} B={tuple(B)}"
    return ExpansionSource(MomentumExpansion(terms, -2 - q), metric, label)
