"""Graph hypersurfaces t = f(r, u) in Minkowski and Schwarzschild spacetimes.

Numeric geometry in spherical chart components (induced metric, second
fundamental form, conjugate momentum) and the symbolic expansion of the
momentum of a single-term graph f = r^p A(u) in powers of r.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal

import numpy as np

from .sphere_poly import (
    SphereOneForm,
    SpherePolynomial,
    SphereSym2,
    exterior_d,
    grad_dot,
    hessian,
    laplacian,
)
from .spherical_frame import (
    InvalidRadiusError,
    QuadratureRule,
    SpherePoint,
    SphericalSym2,
    chart_basis_at,
)

__all__ = [
    "Ambient",
    "GraphFunction",
    "GraphJet",
    "GeometryAtPoint",
    "ExpansionTerm",
    "MomentumExpansion",
    "SpacelikeReport",
    "SpacelikeViolationError",
    "HorizonError",
    "AdmissibilityWarning",
    "IllConditionedWarning",
    "geometry_at",
    "chart_geometry",
    "pi_ra_exact",
    "momentum_expansion",
    "spacelike_check",
    "inverse_adjugate",
]


class SpacelikeViolationError(ValueError):
    def __init__(self, r: float, point, w2: float):
        self.r = r
        self.point = np.asarray(point)
        self.w2 = w2
        super().__init__(f"hypersurface is not spacelike at r={r}, x={self.point.tolist()} (w^2={w2:.3e})")


class HorizonError(InvalidRadiusError):
    pass


class AdmissibilityWarning(UserWarning):
    pass


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Ambient:
    """Minkowski, or Schwarzschild of mass m in static coordinates.

    ``m = 0`` is accepted for the Schwarzschild kind so that the flat limit of
    its formulas can be exercised.
    """

    kind: Literal["minkowski", "schwarzschild"] = "minkowski"
    m: float = 0.0

    def __post_init__(self):
        if self.kind not in ("minkowski", "schwarzschild"):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        if self.kind == "minkowski" and self.m != 0:
            raise ValueError("Minkowski ambient has no mass parameter")
        if self.m < 0:
            raise ValueError("mass must be nonnegative")

    @classmethod
    def minkowski(cls) -> "Ambient":
        return cls("minkowski", 0.0)

    @classmethod
    def schwarzschild(cls, m: float) -> "Ambient":
        return cls("schwarzschild", float(m))

    @property
    def mass(self) -> float:
        return self.m if self.kind == "schwarzschild" else 0.0

    def check_radius(self, r: float) -> None:
        if not r > 0:
            raise InvalidRadiusError(f"radius must be positive, got {r}")
        if r <= 2 * self.mass:
            raise HorizonError(f"radius {r} is not outside the horizon r = {2 * self.mass}")

    def lapse_squared(self, r):
        """V = 1 - 2m/r."""
        return 1.0 - 2.0 * self.mass / r


@dataclass
class GraphJet:
    """Radial and tangential derivatives of f at points of one coordinate sphere.

    Tangential quantities are ambient Cartesian components on the unit sphere:
    ``grad_t`` is the sphere gradient of f(r, .), ``hess_t`` its covariant
    Hessian, ``grad_t_r`` the r-derivative of ``grad_t``.
    """

    r: float | np.ndarray
    points: np.ndarray
    f: np.ndarray
    f_r: np.ndarray
    f_rr: np.ndarray
    grad_t: np.ndarray
    grad_t_r: np.ndarray
    hess_t: np.ndarray
    lap_t: np.ndarray

    def cartesian_gradient(self) -> np.ndarray:
        return self.f_r[..., None] * self.points + self.grad_t / np.asarray(self.r)[..., None]

    def cartesian_hessian(self) -> np.ndarray:
        r = np.asarray(self.r)[..., None, None]
        x = self.points
        P = np.eye(3) - x[..., :, None] * x[..., None, :]
        b = (self.grad_t_r - self.grad_t / r[..., 0]) / r[..., 0]
        outer = x[..., :, None] * b[..., None, :]
        return (
            self.f_rr[..., None, None] * x[..., :, None] * x[..., None, :]
            + outer
            + np.swapaxes(outer, -1, -2)
            + (self.hess_t + r * self.f_r[..., None, None] * P) / r**2
        )


@dataclass(frozen=True)
class _TermData:
    p: float
    A: SpherePolynomial
    grad: SphereOneForm
    hess: SphereSym2
    lap: SpherePolynomial


@dataclass(frozen=True)
class GraphFunction:
    """f(r, u) = sum_k r^{p_k} A_k(u) with exact rational powers, strictly decreasing."""

    terms: tuple[tuple[Fraction, SpherePolynomial], ...] = ()

    def __post_init__(self):
        merged: dict[Fraction, SpherePolynomial] = {}
        for p, A in self.terms:
            p = Fraction(p)
            if not isinstance(A, SpherePolynomial):
                A = SpherePolynomial.parse(A) if isinstance(A, str) else SpherePolynomial.constant(A)
            merged[p] = merged.get(p, SpherePolynomial()) + A
        terms = tuple(sorted(((p, A) for p, A in merged.items() if not A.is_zero()), key=lambda t: -t[0]))
        for p, A in terms:
            if p > Fraction(1, 2) and A.degree() > 0:
                warnings.warn(
                    f"power {p} exceeds 1/2; the graph is not asymptotically flat", AdmissibilityWarning, stacklevel=3
                )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def single(cls, p, A) -> "GraphFunction":
        return cls(((Fraction(p), A),))

    @classmethod
    def zero(cls) -> "GraphFunction":
        return cls(())

    def is_single_term(self) -> bool:
        return len(self.terms) == 1

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"r^({p})*({A})" for p, A in self.terms)

    def scaled(self, lam) -> "GraphFunction":
        return GraphFunction(tuple((p, A * Fraction(lam)) for p, A in self.terms))

    def permuted(self, perm: tuple[int, int, int]) -> "GraphFunction":
        """Relabel ambient axes: x_i -> x_{perm[i]}."""
        return GraphFunction(tuple((p, A.substitute_axes(perm)) for p, A in self.terms))

    def parity(self) -> int | None:
        """+1 if f(r, -u) = f(r, u), -1 if odd, None otherwise."""
        pars = {A.parity() for _, A in self.terms}
        if not pars:
            return 1
        return pars.pop() if len(pars) == 1 else None

    @functools.cached_property
    def _data(self) -> tuple[_TermData, ...]:
        return tuple(_TermData(float(p), A, exterior_d(A), hessian(A), laplacian(A)) for p, A in self.terms)

    def jet(self, r, points) -> GraphJet:
        """Jet at radius ``r`` (scalar, or one radius per point) and unit ``points``."""
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        r = np.asarray(r, dtype=float)
        rv = r[..., None]
        f = np.zeros(shape)
        f_r = np.zeros(shape)
        f_rr = np.zeros(shape)
        lap = np.zeros(shape)
        g = np.zeros(shape + (3,))
        g_r = np.zeros(shape + (3,))
        H = np.zeros(shape + (3, 3))
        for t in self._data:
            rp = r**t.p
            a = t.A.evaluate(pts)
            ga = t.grad.evaluate(pts)
            f += rp * a
            f_r += t.p * rp / r * a
            f_rr += t.p * (t.p - 1) * rp / r**2 * a
            g += rp[..., None] * ga
            g_r += (t.p * rp / r)[..., None] * ga
            H += rp[..., None, None] * t.hess.evaluate(pts)
            lap += rp * t.lap.evaluate(pts)
        return GraphJet(r if r.ndim else float(r), pts, f, f_r, f_rr, g, g_r, H, lap)

    def evaluate(self, x) -> np.ndarray:
        """f at Cartesian points x (..., 3)."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        xt = x / r[..., None]
        out = np.zeros(x.shape[:-1])
        for p, A in self.terms:
            out = out + r ** float(p) * A.evaluate(xt)
        return out


def inverse_adjugate(M: np.ndarray, cond_limit: float = 1e12) -> np.ndarray:
    """Closed-form 3x3 inverse; warns when the condition number exceeds ``cond_limit``."""
    M = np.asarray(M, dtype=float)
    adj = np.empty_like(M)
    adj[..., 0, 0] = M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1]
    adj[..., 0, 1] = M[..., 0, 2] * M[..., 2, 1] - M[..., 0, 1] * M[..., 2, 2]
    adj[..., 0, 2] = M[..., 0, 1] * M[..., 1, 2] - M[..., 0, 2] * M[..., 1, 1]
    adj[..., 1, 0] = M[..., 1, 2] * M[..., 2, 0] - M[..., 1, 0] * M[..., 2, 2]
    adj[..., 1, 1] = M[..., 0, 0] * M[..., 2, 2] - M[..., 0, 2] * M[..., 2, 0]
    adj[..., 1, 2] = M[..., 0, 2] * M[..., 1, 0] - M[..., 0, 0] * M[..., 1, 2]
    adj[..., 2, 0] = M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0]
    adj[..., 2, 1] = M[..., 0, 1] * M[..., 2, 0] - M[..., 0, 0] * M[..., 2, 1]
    adj[..., 2, 2] = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    det = np.einsum("...i,...i->...", M[..., 0, :], adj[..., :, 0])
    inv = adj / det[..., None, None]
    cond = np.abs(M).sum(-1).max(-1) * np.abs(inv).sum(-1).max(-1)
    if np.any(~np.isfinite(cond)) or np.any(cond > cond_limit):
        warnings.warn(f"ill-conditioned 3x3 inversion (cond ~ {np.max(cond):.2e})", IllConditionedWarning, stacklevel=2)
    return inv


@dataclass(frozen=True)
class GeometryAtPoint:
    """Geometry of the graph at one point, in (r, theta, phi) components."""

    g: SphericalSym2
    g_inv: SphericalSym2
    k: SphericalSym2
    pi: SphericalSym2
    w: float
    r: float = field(default=0.0)

    @property
    def tr_k(self) -> float:
        return float(np.sum(self.g_inv.matrix() * self.k.matrix()))

    def k_from_pi(self) -> SphericalSym2:
        """Recover k = pi - (1/2)(tr_g pi) g."""
        G = self.g.matrix()
        Pm = self.pi.matrix()
        tr_pi = float(np.sum(self.g_inv.matrix() * Pm))
        return SphericalSym2.from_matrix(Pm - 0.5 * tr_pi * G)


def _chart_jet(jet: GraphJet):
    pts = jet.points
    E = chart_basis_at(pts)  # (...,2,3)
    s2 = pts[..., 0] ** 2 + pts[..., 1] ** 2
    f_a = np.einsum("...ai,...i->...a", E, jet.grad_t)
    f_ra = np.einsum("...ai,...i->...a", E, jet.grad_t_r)
    hess = np.einsum("...ai,...ij,...bj->...ab", E, jet.hess_t, E)
    sigma = np.zeros(s2.shape + (2, 2))
    sigma[..., 0, 0] = 1.0
    sigma[..., 1, 1] = s2
    sigma_inv = np.zeros_like(sigma)
    sigma_inv[..., 0, 0] = 1.0
    sigma_inv[..., 1, 1] = 1.0 / s2
    return E, sigma, sigma_inv, f_a, f_ra, hess


def _assemble(rr, ra, ab):
    shape = np.shape(rr)
    M = np.empty(shape + (3, 3))
    M[..., 0, 0] = rr
    M[..., 0, 1:] = ra
    M[..., 1:, 0] = ra
    M[..., 1:, 1:] = ab
    return M


def chart_geometry(ambient: Ambient, f: GraphFunction, r: float, points, inverse: str = "closed"):
    """Vectorised (r, theta, phi) components of g, g^{-1}, k, pi and w at r * points.

    Returns a dict of arrays: ``g``, ``g_inv``, ``k``, ``pi`` of shape (..., 3, 3)
    and ``w``, ``w2`` of shape (...).  ``inverse`` selects the closed-form
    inverse metric or a generic adjugate inversion.
    """
    ambient.check_radius(r)
    jet = f.jet(r, points)
    _require_off_axis(jet.points)
    E, sigma, sigma_inv, f_a, f_ra, hess = _chart_jet(jet)
    f_r, f_rr = jet.f_r, jet.f_rr
    f_up = np.einsum("...ab,...b->...a", sigma_inv, f_a)
    grad_ang = np.einsum("...i,...i->...", jet.grad_t, jet.grad_t) / r**2
    ff_ab = f_a[..., :, None] * f_a[..., None, :]

    if ambient.kind == "minkowski":
        V = 1.0
        w2 = 1.0 - f_r**2 - grad_ang
        _require_spacelike(w2, r, jet.points)
        w = np.sqrt(w2)
        g = _assemble(1.0 - f_r**2, -f_r[..., None] * f_a, r**2 * sigma - ff_ab)
        k_rr = f_rr
        k_ra = f_ra - f_a / r
        k_ab = hess + r * sigma * f_r[..., None, None]
    else:
        m = ambient.m
        V = 1.0 - 2.0 * m / r
        mr = m / r**2
        w2 = 1.0 / V - V * f_r**2 - grad_ang
        _require_spacelike(w2, r, jet.points)
        w = np.sqrt(w2)
        g = _assemble(1.0 / V - V * f_r**2, -V * f_r[..., None] * f_a, r**2 * sigma - V * ff_ab)
        k_rr = f_rr + 3.0 * f_r * mr / V - f_r**3 * mr * V
        k_ra = f_ra - f_a / r + f_a * mr / V - (f_r**2)[..., None] * f_a * mr * V
        k_ab = hess + (r * sigma - ff_ab * mr) * (f_r * V)[..., None, None]
    k = _assemble(k_rr, k_ra, k_ab) / w[..., None, None]

    if inverse == "closed":
        inv_rr = V + V**2 * f_r**2 / w2
        inv_ra = (V * f_r / w2)[..., None] * f_up / r**2
        inv_ab = sigma_inv / r**2 + f_up[..., :, None] * f_up[..., None, :] / (r**4 * w2[..., None, None])
        g_inv = _assemble(inv_rr, inv_ra, inv_ab)
    elif inverse == "adjugate":
        g_inv = inverse_adjugate(g)
    else:
        raise ValueError(f"unknown inverse method {inverse!r}")
    tr_k = np.einsum("...ij,...ij->...", g_inv, k)
    pi = k - tr_k[..., None, None] * g
    return {"g": g, "g_inv": g_inv, "k": k, "pi": pi, "w": w, "w2": w2, "tr_k": tr_k, "jet": jet, "E": E}


def _require_off_axis(points):
    if np.any(1.0 - np.asarray(points)[..., 2] ** 2 <= 0.0):
        raise ValueError("spherical chart is singular at the poles")


def _require_spacelike(w2, r, points):
    w2 = np.asarray(w2)
    if np.any(~(w2 > 0)):
        idx = np.unravel_index(np.argmin(np.where(np.isnan(w2), -np.inf, w2)), w2.shape) if w2.ndim else ()
        raise SpacelikeViolationError(r, np.asarray(points)[idx], float(w2[idx]))


def geometry_at(ambient: Ambient, f: GraphFunction, r: float, p: SpherePoint) -> GeometryAtPoint:
    """Induced metric, second fundamental form and momentum at r * p."""
    out = chart_geometry(ambient, f, r, p.x[None, :], inverse="adjugate")
    return GeometryAtPoint(
        g=SphericalSym2.from_matrix(out["g"][0]),
        g_inv=SphericalSym2.from_matrix(out["g_inv"][0]),
        k=SphericalSym2.from_matrix(out["k"][0]),
        pi=SphericalSym2.from_matrix(out["pi"][0]),
        w=float(out["w"][0]),
        r=float(r),
    )


def pi_ra_exact(f: GraphFunction, r: float, p: SpherePoint, ambient: Ambient | None = None) -> np.ndarray:
    """Closed-form dr du^a block of the momentum of a Minkowski graph.

    Uses only the flat Hessian of f and the Laplacian of f(r, .) on the unit
    sphere; no inverse metric is formed.
    """
    if ambient is not None and ambient.kind != "minkowski":
        raise ValueError("the closed cross-term formula holds for Minkowski graphs only")
    if not r > 0:
        raise InvalidRadiusError(f"radius must be positive, got {r}")
    jet = f.jet(r, p.x[None, :])
    _require_off_axis(jet.points)
    _, sigma, sigma_inv, f_a, f_ra, hess = _chart_jet(jet)
    f_a, f_ra, hess, sigma, sigma_inv = f_a[0], f_ra[0], hess[0], sigma[0], sigma_inv[0]
    f_r, f_rr, lap = float(jet.f_r[0]), float(jet.f_rr[0]), float(jet.lap_t[0])
    f_up = sigma_inv @ f_a
    grad2 = f_r**2 + f_a @ f_up / r**2
    D = 1.0 - grad2
    if not D > 0:
        raise SpacelikeViolationError(r, p.x, D)
    # flat Hessian in the chart
    hbar_ra = f_ra - f_a / r
    hbar_ab = hess + r * sigma * f_r
    Q = f_r**2 * f_rr + 2.0 * f_r * (f_up @ hbar_ra) / r**2 + f_up @ hbar_ab @ f_up / r**4
    lap_flat = f_rr + lap / r**2 + 2.0 * f_r / r
    return (f_ra - f_a / r + lap_flat * f_r * f_a + f_r * f_a * Q / D) / math.sqrt(D)


# symbolic expansion


@dataclass(frozen=True)
class ExpansionTerm:
    """pi ~ r^s (beta dr^2 + 2 r alpha_a dr du^a + r^2 h_ab du^a du^b); blocks not computed are None."""

    power: Fraction
    beta: SpherePolynomial | None = None
    alpha: SphereOneForm | None = None
    h: SphereSym2 | None = None


@dataclass(frozen=True)
class MomentumExpansion:
    """Graded momentum terms; the remainder is o(r^truncation) in each computed block."""

    terms: tuple[ExpansionTerm, ...]
    truncation: Fraction | None = None

    def __post_init__(self):
        powers = [t.power for t in self.terms]
        if any(a <= b for a, b in zip(powers, powers[1:])):
            raise ValueError("expansion powers must be strictly decreasing")

    def term(self, power) -> ExpansionTerm | None:
        power = Fraction(power)
        for t in self.terms:
            if t.power == power:
                return t
        return None

    def leading(self) -> ExpansionTerm:
        return self.terms[0]

    def cartesian(self, x) -> np.ndarray:
        """Cartesian components pi_ij at points x (..., 3), summing the known blocks."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        xt = x / r[..., None]
        out = np.zeros(x.shape + (3,))
        for t in self.terms:
            rs = r ** float(t.power)
            part = np.zeros_like(out)
            if t.beta is not None:
                part += t.beta.evaluate(xt)[..., None, None] * xt[..., :, None] * xt[..., None, :]
            if t.alpha is not None:
                a = t.alpha.evaluate(xt)
                part += xt[..., :, None] * a[..., None, :] + a[..., :, None] * xt[..., None, :]
            if t.h is not None:
                part += t.h.evaluate(xt)
            out += rs[..., None, None] * part
        return out

    def cross_block(self, r: float, points) -> np.ndarray:
        """Ambient one-form sum_s r^{s+1} alpha_s at unit points; chart pi_ra = this . E_a."""
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape)
        for t in self.terms:
            if t.alpha is not None:
                out += r ** float(t.power + 1) * t.alpha.evaluate(pts)
        return out


def momentum_expansion(ambient: Ambient, f: GraphFunction, orders: int = 3) -> MomentumExpansion:
    """Leading terms of the momentum of f = r^p A in powers of r.

    Terms produced (grading s as in :class:`ExpansionTerm`):

    * s = p - 2: all blocks,
      beta = -2pA - lap A, alpha = (p-1) dA, h = Hess A - (p^2 A + lap A) sigma;
    * s = p - 3 (Schwarzschild only): alpha = -(p-2) m dA;
    * s = 3p - 4: alpha = dA [p^2(3p+1)/2 A^2 + p A lap A + (p-1)/2 |grad A|^2].

    The Schwarzschild mass must be rational-representable; it is converted
    with ``Fraction(m).limit_denominator``.
    """
    if not f.is_single_term():
        raise NotImplementedError("the symbolic expansion covers single-term graphs r^p A only")
    (p, A), = f.terms
    if not (0 <= p < Fraction(1, 2)):
        raise ValueError(f"expansion requires 0 <= p < 1/2, got {p}")
    dA = exterior_d(A)
    lapA = laplacian(A)
    grad2 = grad_dot(A, A)
    sigma = SphereSym2.metric()
    terms = [
        ExpansionTerm(
            p - 2,
            beta=A * (-2 * p) - lapA,
            alpha=dA * (p - 1),
            h=hessian(A) - sigma * (A * p**2 + lapA),
        )
    ]
    if ambient.kind == "schwarzschild" and ambient.m != 0:
        m = Fraction(ambient.m).limit_denominator(10**12)
        terms.append(ExpansionTerm(p - 3, alpha=dA * (-(p - 2) * m)))
    coeff = A * A * (p**2 * (3 * p + 1) / 2) + A * lapA * p + grad2 * ((p - 1) / 2)
    terms.append(ExpansionTerm(3 * p - 4, alpha=dA * coeff))
    terms.sort(key=lambda t: -t.power)
    terms = terms[: max(1, orders)]
    # remainder is o(r^s) for the last retained power s
    return MomentumExpansion(tuple(terms), terms[-1].power)


@dataclass(frozen=True)
class SpacelikeReport:
    min_w2: float
    r_at_min: float
    point_at_min: np.ndarray
    passed: bool

    def __bool__(self):
        return self.passed


def spacelike_check(ambient: Ambient, f: GraphFunction, radii: Iterable[float], rule: QuadratureRule) -> SpacelikeReport:
    """Minimum of w^2 over the rule's nodes on each sampled sphere."""
    best = (math.inf, math.nan, None)
    for r in radii:
        ambient.check_radius(r)
        jet = f.jet(r, rule.points)
        V = ambient.lapse_squared(r)
        w2 = 1.0 / V - V * jet.f_r**2 - np.einsum("...i,...i->...", jet.grad_t, jet.grad_t) / r**2
        i = int(np.argmin(w2))
        if w2[i] < best[0]:
            best = (float(w2[i]), float(r), rule.points[i].copy())
    return SpacelikeReport(best[0], best[1], best[2], bool(best[0] > 1e-12))
