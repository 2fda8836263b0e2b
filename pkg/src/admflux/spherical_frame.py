"""Numeric machinery on coordinate spheres.

Cartesian <-> spherical components of symmetric tensors, product quadrature
on S^2 (Gauss-Legendre in cos(theta) times the trapezoid rule in phi), and the
flat divergence of a symmetric tensor written in spherical components.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .sphere_poly import ORIENTATION, SpherePolynomial

__all__ = [
    "InvalidRadiusError",
    "QuadratureConvergenceError",
    "SpherePoint",
    "SphericalSym2",
    "QuadratureRule",
    "QuadratureResult",
    "DivergenceResult",
    "chart_basis",
    "chart_basis_at",
    "gauss_legendre",
    "to_spherical",
    "from_spherical",
    "quadrature_rule",
    "quadrature_integrate",
    "adaptive_integrate",
    "div_flat_spherical",
    "div_flat_batch",
    "area_rotate",
    "rotation_field",
    "random_sphere_points",
]


class InvalidRadiusError(ValueError):
    pass


class QuadratureConvergenceError(RuntimeError):
    def __init__(self, message, last_value=None, degree=None):
        super().__init__(message)
        self.last_value = last_value
        self.degree = degree


@dataclass(frozen=True)
class SpherePoint:
    """A point of the unit sphere; chart angles (theta, phi) are derived."""

    x: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.x, dtype=float).reshape(3)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("zero vector is not a sphere point")
        if abs(norm - 1.0) > 1e-14:
            v = v / norm
        object.__setattr__(self, "x", v)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "SpherePoint":
        s = math.sin(theta)
        return cls(np.array([s * math.cos(phi), s * math.sin(phi), math.cos(theta)]))

    @property
    def theta(self) -> float:
        return math.acos(max(-1.0, min(1.0, self.x[2])))

    @property
    def phi(self) -> float:
        return math.atan2(self.x[1], self.x[0])

    @property
    def sigma(self) -> np.ndarray:
        """Round metric in (theta, phi) components."""
        return np.diag([1.0, math.sin(self.theta) ** 2])


def chart_basis(theta, phi):
    """Coordinate vectors d x/d theta, d x/d phi of the unit sphere, shape (..., 2, 3)."""
    theta = np.asarray(theta)
    phi = np.asarray(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1)
    return np.stack([e_theta, e_phi], axis=-2)


def chart_basis_at(points):
    """:func:`chart_basis` evaluated from unit Cartesian points, without passing through the angles."""
    x = np.asarray(points, dtype=float)
    s = np.hypot(x[..., 0], x[..., 1])
    e_theta = np.stack([x[..., 0] * x[..., 2] / s, x[..., 1] * x[..., 2] / s, -s], axis=-1)
    e_phi = np.stack([-x[..., 1], x[..., 0], np.zeros_like(s)], axis=-1)
    return np.stack([e_theta, e_phi], axis=-2)


@dataclass(frozen=True)
class SphericalSym2:
    """Symmetric tensor split as T_rr dr^2 + 2 T_ra dr du^a + T_ab du^a du^b."""

    rr: float
    ra: np.ndarray
    ab: np.ndarray

    def __post_init__(self):
        ab = np.asarray(self.ab, dtype=float).reshape(2, 2)
        if not np.allclose(ab, ab.T, rtol=1e-12, atol=1e-300):
            raise ValueError("angular block must be symmetric")
        object.__setattr__(self, "ra", np.asarray(self.ra, dtype=float).reshape(2))
        object.__setattr__(self, "ab", ab)

    def matrix(self) -> np.ndarray:
        """Full 3x3 matrix in (r, theta, phi) coordinates."""
        m = np.empty((3, 3))
        m[0, 0] = self.rr
        m[0, 1:] = m[1:, 0] = self.ra
        m[1:, 1:] = self.ab
        return m

    @classmethod
    def from_matrix(cls, m) -> "SphericalSym2":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1:], 0.5 * (m[1:, 1:] + m[1:, 1:].T))


def _jacobian(r: float, p: SpherePoint) -> np.ndarray:
    # columns: d x / d(r, theta, phi)
    E = chart_basis(p.theta, p.phi)
    return np.column_stack([p.x, r * E[0], r * E[1]])


def to_spherical(T, r: float, p: SpherePoint) -> SphericalSym2:
    """Spherical components of a symmetric Cartesian tensor at x = r p."""
    if not r > 0:
        raise InvalidRadiusError(f"radius must be positive, got {r}")
    M = _jacobian(r, p)
    return SphericalSym2.from_matrix(M.T @ np.asarray(T, dtype=float) @ M)


def from_spherical(S: SphericalSym2, r: float, p: SpherePoint) -> np.ndarray:
    """Inverse of :func:`to_spherical` (closed-form inverse Jacobian)."""
    if not r > 0:
        raise InvalidRadiusError(f"radius must be positive, got {r}")
    E = chart_basis(p.theta, p.phi)
    s2 = math.sin(p.theta) ** 2
    if s2 == 0:
        raise ValueError("spherical chart is singular at the poles")
    Minv = np.vstack([p.x, E[0] / r, E[1] / (r * s2)])
    return Minv.T @ S.matrix() @ Minv


def _legendre_and_derivative(n: int, x):
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    return p1, n * (p0 - x * p1) / (1 - x * x)


@functools.lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], accurate to rounding.

    numpy's ``leggauss`` weights lose about three digits by n = 100, which is
    visible in fluxes with strong cancellation.  Its nodes are polished by
    Newton steps and the weights recomputed in extended precision where the
    platform has it.
    """
    x0, w0 = np.polynomial.legendre.leggauss(n)
    if n == 1:
        return x0, w0
    x = x0.astype(np.longdouble)
    for _ in range(3):
        p, dp = _legendre_and_derivative(n, x)
        x = x - p / dp
    _, dp = _legendre_and_derivative(n, x)
    w = 2 / ((1 - x * x) * dp * dp)
    return x.astype(float), w.astype(float)


class QuadratureRule:
    """Product rule on S^2 with antipodally paired nodes.

    The second half of ``points`` is exactly the negation of the first half and
    carries identical weights, so the rule integrates odd functions to an exact
    floating-point zero.
    """

    def __init__(self, degree: int):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        self.degree = degree
        n = max(1, (degree + 2) // 2)
        N = degree + 1
        N += N % 2
        N = max(N, 2)
        self.n_theta, self.n_phi = n, N

        t, wt = gauss_legendre(n)
        t = 0.5 * (t - t[::-1])
        wt = 0.5 * (wt + wt[::-1])
        phi = 2.0 * np.pi * np.arange(N) / N
        dphi = 2.0 * np.pi / N

        rep_i, rep_k = [], []
        for i in range(n // 2):
            rep_i += [i] * N
            rep_k += list(range(N))
        if n % 2:
            rep_i += [n // 2] * (N // 2)
            rep_k += list(range(N // 2))
        rep_i = np.array(rep_i)
        rep_k = np.array(rep_k)
        tt = t[rep_i]
        st = np.sqrt((1.0 - tt) * (1.0 + tt))
        half = np.stack([st * np.cos(phi[rep_k]), st * np.sin(phi[rep_k]), tt], axis=-1)
        self.points = np.concatenate([half, -half])
        w = wt[rep_i] * dphi
        self.weights = np.concatenate([w, w])
        self.half = len(half)
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f"QuadratureRule(degree={self.degree}, n_theta={self.n_theta}, n_phi={self.n_phi})"

    def integrate(self, values) -> np.ndarray | float:
        """Weighted sum of node values; extra trailing axes are kept."""
        v = np.asarray(values)
        h = self.half
        paired = v[:h] + v[h:]
        out = np.tensordot(self.weights[:h], paired, axes=(0, 0))
        return float(out) if np.ndim(out) == 0 else out


@functools.lru_cache(maxsize=64)
def quadrature_rule(degree: int) -> QuadratureRule:
    """Rule exact for polynomials of total degree <= ``degree`` in x1, x2, x3."""
    return QuadratureRule(int(degree))


def _node_values(F, points):
    if isinstance(F, SpherePolynomial):
        return F.evaluate(points)
    return F(points)


def quadrature_integrate(F, rule: QuadratureRule):
    """Integrate ``F`` (callable on (M, 3) points, or SpherePolynomial) with ``rule``."""
    return rule.integrate(_node_values(F, rule.points))


class QuadratureResult(NamedTuple):
    value: np.ndarray | float
    error: np.ndarray | float
    degree: int


def adaptive_integrate(
    F: Callable | SpherePolynomial,
    degree: int = 24,
    rtol: float = 1e-11,
    max_n: int = 256,
    max_degree: int | None = None,
    groups: Sequence[int] | None = None,
) -> QuadratureResult:
    """Double the rule until successive values agree.

    Agreement is ``|I_2d - I_d| <= rtol |I_2d|`` per component, with a rounding
    floor proportional to the integral of ``|F|``.  ``groups`` lists widths of
    consecutive component blocks (e.g. the three components of a vector) that
    share the largest floor in the block, so a component that vanishes
    identically does not have to converge below the rounding of its siblings.  Raises
    :class:`QuadratureConvergenceError` once the rule would need more than
    ``max_n`` Gauss-Legendre nodes (or a degree above ``max_degree``).
    """
    cap = 2 * max_n - 1
    if max_degree is not None:
        cap = min(cap, max_degree)
    d = max(1, min(degree, cap))
    prev = None
    while True:
        rule = quadrature_rule(d)
        vals = np.asarray(_node_values(F, rule.points), dtype=float)
        value = np.asarray(rule.integrate(vals))
        scale = np.asarray(rule.integrate(np.abs(vals)))
        if groups is not None and scale.ndim == 1:
            scale = _group_max(scale, groups)
        if not np.all(np.isfinite(value)):
            raise QuadratureConvergenceError(f"non-finite integrand at degree {d}", value, d)
        if prev is not None:
            err = np.abs(value - prev)
            tol = np.maximum(rtol * np.abs(value), 1e-13 * scale)
            if np.all(err <= tol):
                out = float(value) if value.ndim == 0 else value
                e = float(err) if err.ndim == 0 else err
                return QuadratureResult(out, e, d)
        if d >= cap:
            raise QuadratureConvergenceError(
                f"quadrature did not converge up to degree {d} (rtol={rtol})", value, d
            )
        prev = value
        d = min(2 * d, cap)


def _group_max(scale: np.ndarray, groups: Sequence[int]) -> np.ndarray:
    if sum(groups) != scale.shape[0]:
        raise ValueError(f"group widths {tuple(groups)} do not cover {scale.shape[0]} components")
    out = np.empty_like(scale)
    pos = 0
    for w in groups:
        out[pos : pos + w] = scale[pos : pos + w].max()
        pos += w
    return out


def area_rotate(points, v):
    """Rotate tangent vectors by a quarter turn using the area form.

    Returns R(v) with <R(u), v> = eps(u, v); with the orientation convention
    of :mod:`sphere_poly` this is ``ORIENTATION * x cross v``.
    """
    return ORIENTATION * np.cross(points, v)


def rotation_field(axis: int, points) -> np.ndarray:
    """Rotation Killing field e_axis x x restricted to the unit sphere.

    Computed as the area-form rotation of the sphere gradient of x_axis.
    """
    pts = np.asarray(points, dtype=float)
    e = np.zeros(3)
    e[axis - 1] = 1.0
    grad = e - pts * pts[..., axis - 1 : axis]
    return area_rotate(pts, grad)


def random_sphere_points(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class DivergenceResult:
    """Flat divergence of a symmetric tensor at one point.

    ``radial`` is the dr component, ``cartesian`` the full one-form in
    Cartesian components, ``direction`` the unit point it was evaluated at.
    """

    radial: float
    cartesian: np.ndarray
    direction: np.ndarray

    @property
    def tangential(self) -> np.ndarray:
        return self.cartesian - self.radial * self.direction


def _frame_to_e1(p: np.ndarray) -> np.ndarray:
    """Proper rotation Q with Q p = e1."""
    a = np.array([0.0, 0.0, 1.0]) if abs(p[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    t1 = a - p * (a @ p)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(p, t1)
    return np.vstack([p, t1, t2])


_FD = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_OFF = np.array([-2.0, -1.0, 1.0, 2.0])


def div_flat_batch(h: Callable, r: float, points, radial_step: float = 1e-3, angular_step: float = 1e-3):
    """Vectorised flat divergence of the Cartesian tensor field ``h``.

    ``h`` maps Cartesian points (..., 3) to symmetric tensors (..., 3, 3).  For
    each unit vector in ``points`` the spherical-component divergence formula
    is evaluated in a rotated chart that puts the point on the equator, with
    fourth-order centred differences (radial step ``radial_step * r``).
    Returns ``(radial, cartesian)`` arrays of shapes (M,) and (M, 3).
    """
    if not r > 0:
        raise InvalidRadiusError(f"radius must be positive, got {r}")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    P = P / np.linalg.norm(P, axis=-1, keepdims=True)
    M = len(P)
    Q = np.stack([_frame_to_e1(p) for p in P])  # (M,3,3)

    hr = radial_step * r
    ha = angular_step
    half_pi = 0.5 * np.pi
    # stencil: (radius, theta, phi) in the rotated chart, 13 samples per point
    radii = np.concatenate([[r], r + _OFF * hr, [r] * 8])
    thetas = np.concatenate([[half_pi] * 5, half_pi + _OFF * ha, [half_pi] * 4])
    phis = np.concatenate([[0.0] * 9, _OFF * ha])
    S = len(radii)
    E = chart_basis(thetas, phis)  # (S,2,3)
    yhat = np.stack([np.sin(thetas) * np.cos(phis), np.sin(thetas) * np.sin(phis), np.cos(thetas)], axis=-1)
    y = radii[:, None] * yhat  # (S,3) rotated coordinates
    x = np.einsum("mji,sj->msi", Q, y)  # x = Q^T y, shape (M,S,3)
    T = np.asarray(h(x))  # (M,S,3,3)
    Tr = np.einsum("mia,msab,mjb->msij", Q, T, Q)  # rotated components
    h00 = np.einsum("si,msij,sj->ms", yhat, Tr, yhat)
    h0a = radii[None, :, None] * np.einsum("sai,msij,sj->msa", E, Tr, yhat)
    hab = (radii**2)[None, :, None, None] * np.einsum("sai,msij,sbj->msab", E, Tr, E)

    sin_t = np.sin(thetas)
    rad = slice(1, 5)
    th = slice(5, 9)
    ph = slice(9, 13)
    # d_r (r^2 h_00), d_r (r^2 h_0a)
    d_r_h00 = (_FD * radii[rad] ** 2 * h00[:, rad]).sum(-1) / hr
    d_r_h0a = np.einsum("k,mka->ma", _FD * radii[rad] ** 2, h0a[:, rad]) / hr
    # (1/sqrt s) d_b (sqrt s s^{bc} h_0c): theta part sin*h_0theta, phi part h_0phi/sin
    div_h0 = (_FD * sin_t[th] * h0a[:, th, 0]).sum(-1) / ha + (_FD * h0a[:, ph, 1] / sin_t[ph]).sum(-1) / ha
    div_hab = np.stack(
        [
            (_FD * sin_t[th] * hab[:, th, a, 0]).sum(-1) / ha + (_FD * hab[:, ph, a, 1] / sin_t[ph]).sum(-1) / ha
            for a in range(2)
        ],
        axis=-1,
    )
    # at the equator sqrt(sigma) = 1 and d_a sigma^{bc} = 0
    tr_hab = hab[:, 0, 0, 0] + hab[:, 0, 1, 1]
    radial = d_r_h00 / r**2 + div_h0 / r**2 - tr_hab / r**3
    angular = (d_r_h0a + div_hab) / r**2
    # back to Cartesian: omega' = radial yhat + sum_a omega_a E^a / r
    E0 = E[0]
    omega_rot = radial[:, None] * yhat[0] + (angular[:, :1] * E0[0] + angular[:, 1:] * E0[1]) / r
    cart = np.einsum("mji,mj->mi", Q, omega_rot)
    return radial, cart


def div_flat_spherical(h: Callable, r: float, p: SpherePoint, radial_step: float = 1e-3, angular_step: float = 1e-3):
    """Flat divergence of the symmetric tensor field ``h`` at ``r p``."""
    radial, cart = div_flat_batch(h, r, p.x[None, :], radial_step, angular_step)
    return DivergenceResult(float(radial[0]), cart[0], p.x)
