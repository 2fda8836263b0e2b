"""Surface flux integrals on coordinate spheres and their radial limits.

Conventions: the rotation field for axis l is Y_l = e_l x x (axis 3 is
x1 d2 - x2 d1), and all fluxes are raw surface integrals at finite radius.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .hypersurface_geometry import MomentumExpansion
from .sphere_poly import (
    SphereOneForm,
    SpherePolynomial,
    SphereSym2,
    exterior_d,
    hodge_star_d,
    integrate,
)
from .sources import FluxSource
from .spherical_frame import (
    QuadratureRule,
    adaptive_integrate,
    div_flat_batch,
    quadrature_rule,
    random_sphere_points,
)

__all__ = [
    "QUANTITIES",
    "FluxSeries",
    "LimitVerdict",
    "DecayProfile",
    "FinitenessVerdict",
    "InadmissibleProfileError",
    "ConstraintNotSatisfiedError",
    "ConstraintReport",
    "LeadingFluxReport",
    "surface_fluxes",
    "angular_momentum_flux",
    "angular_momentum_symbolic",
    "center_of_mass_flux",
    "adm_energy_flux",
    "adm_momentum_flux",
    "flux_series",
    "extrapolate_limit",
    "finiteness_classify",
    "symbolic_residuals",
    "constraint_residual",
    "leading_flux_vanishes",
    "divergence_exponent",
]

QUANTITIES = ("E", "P", "J", "C")
_WIDTH = {"E": 1, "P": 3, "J": 3, "C": 3}


def _cartesian_integrands(r: float, points: np.ndarray, fields, want: Sequence[str]) -> list[np.ndarray]:
    """Columns of r^2-weighted integrands (before the 1/8pi or 1/16pi factor)."""
    x = points
    h, dg, pi = fields.h, fields.dg, fields.pi
    cols = []
    if "E" in want or "C" in want:
        # sum_j d_j g_ij - d_i g_jj
        div_g = np.einsum("njij->ni", dg) - np.einsum("nijj->ni", dg)
    if "E" in want:
        cols.append(r**2 * np.einsum("ni,ni->n", div_g, x)[:, None] / (16 * math.pi))
    if "P" in want:
        cols.append(r**2 * np.einsum("nij,nj->ni", pi, x) / (8 * math.pi))
    if "J" in want:
        Y = np.cross(np.eye(3)[None, :, :], x[:, None, :])  # (M, l, 3): e_l x x~
        cols.append(r**3 * np.einsum("nlj,njk,nk->nl", Y, pi, x) / (8 * math.pi))
    if "C" in want:
        # x^i sum_jk (d_k g_jk - d_j g_kk) x~^j - sum_k ((g_ki - d_ki) x~^k - (g_kk - 1) x~^i)
        radial = np.einsum("nj,nj->n", np.einsum("nkjk->nj", dg) - np.einsum("njkk->nj", dg), x)
        trh = np.einsum("nkk->n", h)
        term = r * x * radial[:, None] - (np.einsum("nki,nk->ni", h, x) - trh[:, None] * x)
        cols.append(r**2 * term / (16 * math.pi))
    return cols


def _spherical_j_integrand(source: FluxSource, r: float, points: np.ndarray) -> np.ndarray:
    omega = source.radial_momentum(r, points)
    Y = np.cross(np.eye(3)[None, :, :], points[:, None, :])
    return r**2 * np.einsum("nli,ni->nl", Y, omega) / (8 * math.pi)


def _integrate(integrand, rule, rtol, max_degree, groups=None):
    if isinstance(rule, QuadratureRule):
        return np.asarray(rule.integrate(integrand(rule.points)))
    start = 24 if rule is None else int(rule)
    res = adaptive_integrate(integrand, degree=start, rtol=rtol, max_degree=max_degree, groups=groups)
    return np.asarray(res.value)


def surface_fluxes(
    source: FluxSource,
    r: float,
    quantities: Iterable[str] = QUANTITIES,
    rule: QuadratureRule | int | None = None,
    j_method: Literal["spherical", "cartesian", "symbolic"] = "spherical",
    rtol: float = 1e-11,
    max_degree: int | None = None,
) -> dict[str, float | np.ndarray]:
    """E, P, J, C flux integrals over the coordinate sphere of radius ``r``.

    ``rule`` is a fixed :class:`QuadratureRule`, or the starting degree of an
    adaptive refinement (default 24) capped at ``max_degree``.  All requested
    quantities share one set of node evaluations.
    """
    want = [q for q in QUANTITIES if q in set(quantities)]
    unknown = set(quantities) - set(QUANTITIES)
    if unknown:
        raise ValueError(f"unknown quantities {sorted(unknown)}")
    source.check_radius(r)
    out: dict[str, float | np.ndarray] = {}
    if "J" in want and j_method == "symbolic":
        out["J"] = angular_momentum_symbolic(source, r)
    cart = [q for q in want if q != "J" or j_method == "cartesian"]
    spherical_j = "J" in want and j_method == "spherical"

    def integrand(points):
        cols = []
        if cart:
            cols += _cartesian_integrands(r, points, source.fields(r, points), cart)
        if spherical_j:
            cols.append(_spherical_j_integrand(source, r, points))
        return np.concatenate(cols, axis=1)

    if cart or spherical_j:
        order = cart + (["J"] if spherical_j else [])
        values = _integrate(integrand, rule, rtol, max_degree, [_WIDTH[q] for q in order])
        pos = 0
        for q in order:
            w = _WIDTH[q]
            out[q] = float(values[pos]) if w == 1 else values[pos : pos + w].copy()
            pos += w
    return {q: out[q] for q in want}


def angular_momentum_symbolic(source: FluxSource, r: float) -> np.ndarray:
    """J at radius r from the exact radial momentum block: -(r^2/8pi) sum r^{s+1} int x^l *d alpha_s."""
    terms = source.symbolic_radial_momentum()
    if terms is None:
        raise ValueError("source has no symbolic radial momentum")
    out = np.zeros(3)
    for s, alpha in terms:
        star = hodge_star_d(alpha)
        if star.is_zero():
            continue
        for l in range(3):
            q = integrate(SpherePolynomial.variable(l + 1) * star).value
            out[l] += -float(q) / 2.0 * r ** float(s + 3)
    return out


def angular_momentum_flux(
    source: FluxSource,
    r: float,
    axis: int,
    rule: QuadratureRule | int | None = None,
    method: Literal["spherical", "cartesian", "symbolic", "auto"] = "auto",
    **kw,
) -> float:
    """J(Y_axis) at radius r.

    ``auto`` takes the exact route when the source knows its radial momentum
    symbolically, else the spherical integrand with the derivative moved onto
    the rotation field.
    """
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    if method == "auto":
        method = "symbolic" if source.symbolic_radial_momentum() is not None else "spherical"
    return float(surface_fluxes(source, r, ("J",), rule, j_method=method, **kw)["J"][axis - 1])


def center_of_mass_flux(source: FluxSource, r: float, index: int, rule=None, **kw) -> float:
    if index not in (1, 2, 3):
        raise ValueError("index must be 1, 2 or 3")
    return float(surface_fluxes(source, r, ("C",), rule, **kw)["C"][index - 1])


def adm_energy_flux(source: FluxSource, r: float, rule=None, **kw) -> float:
    return float(surface_fluxes(source, r, ("E",), rule, **kw)["E"])


def adm_momentum_flux(source: FluxSource, r: float, direction: int, rule=None, **kw) -> float:
    if direction not in (1, 2, 3):
        raise ValueError("direction must be 1, 2 or 3")
    return float(surface_fluxes(source, r, ("P",), rule, **kw)["P"][direction - 1])


# radial limits


@dataclass(frozen=True)
class FluxSeries:
    radii: np.ndarray
    values: np.ndarray
    quantity: str = ""
    axis: int | None = None

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.shape != values.shape or radii.ndim != 1:
            raise ValueError("radii and values must be matching 1-d sequences")
        if np.any(np.diff(radii) <= 0) or np.any(radii <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.radii)


def flux_series(source: FluxSource, quantity: str, axis: int | None, radii: Sequence[float], rule=None, **kw) -> FluxSeries:
    vals = []
    for r in radii:
        v = surface_fluxes(source, r, (quantity,), rule, **kw)[quantity]
        vals.append(v if axis is None else v[axis - 1])
    return FluxSeries(np.asarray(radii, float), np.asarray(vals, float), quantity, axis)


@dataclass(frozen=True)
class LimitVerdict:
    """Outcome of a radial extrapolation.

    For ``finite`` the limit is ``value`` +- ``error`` and ``exponent`` is the
    fitted decay rate s of the correction c r^{-s}; for ``divergent``
    ``exponent`` is the growth rate -s.
    """

    kind: Literal["finite", "divergent", "indeterminate"]
    value: float = math.nan
    error: float = math.nan
    exponent: float = math.nan
    coefficient: float = math.nan
    residual: float = math.nan

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def is_divergent(self) -> bool:
        return self.kind == "divergent"

    def __str__(self):
        if self.kind == "finite":
            return f"Finite({self.value:.10g} +- {self.error:.2g})"
        if self.kind == "divergent":
            return f"Divergent(exponent {self.exponent:.4g})"
        return "Indeterminate"


def _linear_fit(r, v, exps):
    """Least squares v ~ v_inf + sum c_k r^{-s_k}; columns scaled by r_max."""
    rmax = r[-1]
    X = np.column_stack([np.ones_like(r)] + [(r / rmax) ** (-s) for s in exps])
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    res = v - X @ coef
    c = coef[1:] * np.array([rmax**s for s in exps])
    return coef[0], c, res


def _fit_exponent(r, v):
    def cost(s):
        _, _, res = _linear_fit(r, v, [s])
        return float(res @ res)

    grid = np.linspace(-3.0, 6.0, 181)
    costs = np.array([cost(s) for s in grid])
    i = int(np.argmin(costs))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best = minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    s = float(best.x) if best.fun <= costs[i] else float(grid[i])
    return s


def extrapolate_limit(series: FluxSeries, expected_exponents: Sequence[float] | None = None) -> LimitVerdict:
    """Fit v(r) = v_inf + c r^{-s} and classify the radial limit."""
    r, v = series.radii, series.values
    n = len(r)
    if n < 3:
        raise ValueError(f"extrapolation needs at least 3 samples, got {n}")
    scale = max(np.max(np.abs(v)), 1e-300)
    spread = np.max(v) - np.min(v)
    if spread <= 1e-13 * scale or spread == 0:
        return LimitVerdict("finite", float(np.mean(v)), float(spread), math.inf, 0.0, float(spread))

    d = np.diff(v)
    monotone = bool(np.all(d > 0) or np.all(d < 0))
    growing = monotone and bool(np.all(np.abs(d[1:]) > np.abs(d[:-1])))

    if expected_exponents:
        exps = [float(s) for s in expected_exponents]
        if n < len(exps) + 2:
            exps = exps[: max(1, n - 2)]
        v_inf, c, res = _linear_fit(r, v, exps)
        s_lead = min(exps)
        lead = float(c[int(np.argmin(exps))])
        resid = float(np.sqrt(np.mean(res**2)))
        if n >= len(exps) + 2:
            v2, _, _ = _linear_fit(r[1:], v[1:], exps)
            err = abs(v_inf - v2) + resid
        else:
            err = resid + 0.1 * abs(lead) * r[-1] ** (-s_lead)
        if s_lead >= 0.1:
            return LimitVerdict("finite", float(v_inf), float(err), s_lead, lead, resid)
        return LimitVerdict("indeterminate", float(v_inf), float(err), s_lead, lead, resid)

    s = _fit_exponent(r, v)
    v_inf, c, res = _linear_fit(r, v, [s])
    c = float(c[0])
    resid = float(np.sqrt(np.mean(res**2)))
    tail = abs(c) * r[-1] ** (-s)
    if s >= 0.1 and resid < 0.1 * tail + 1e-14 * scale:
        if n >= 4:
            s2 = _fit_exponent(r[1:], v[1:])
            v2, _, _ = _linear_fit(r[1:], v[1:], [s2])
            err = abs(float(v_inf) - float(v2)) + resid
        else:
            err = resid + 0.1 * tail
        return LimitVerdict("finite", float(v_inf), float(err), s, c, resid)
    if monotone and (s <= -0.1 or (growing and s < 0.1)):
        return LimitVerdict("divergent", math.nan, math.nan, -s, c, resid)
    return LimitVerdict("indeterminate", float(v_inf), math.nan, s, c, resid)


def divergence_exponent(source: FluxSource, axis: int) -> float | None:
    """Growth rate of J(Y_axis) predicted by the symbolic radial momentum.

    Returns the largest s + 3 over terms whose exact flux coefficient is
    nonzero, or None when every term is closed against Y_axis.
    """
    terms = source.symbolic_radial_momentum()
    if terms is None:
        return None
    best = None
    for s, alpha in terms:
        star = hodge_star_d(alpha)
        if star.is_zero():
            continue
        if integrate(SpherePolynomial.variable(axis) * star).value != 0:
            e = float(s + 3)
            best = e if best is None else max(best, e)
    return best


# finiteness criteria


class InadmissibleProfileError(ValueError):
    pass


class FinitenessVerdict(str, enum.Enum):
    FINITE_BY_EXPANSION = "FiniteByExpansion"
    FINITE_BY_DECAY = "FiniteByDecay"
    NOT_GUARANTEED = "NotGuaranteed"


@dataclass(frozen=True)
class DecayProfile:
    """Fall-off data: g - delta = O(r^-q), pi = O(r^-p), |J| = O(r^-J_decay)."""

    q: float
    p: float
    eps: float = 0.0
    has_expansion_form: bool = False
    J_decay: float = math.inf

    def decay_route(self) -> bool:
        return self.p + self.q > 3

    def current_decays(self) -> bool:
        return self.eps > 0 and self.J_decay >= 4 + self.eps


def finiteness_classify(profile: DecayProfile) -> FinitenessVerdict:
    """Which sufficient condition, if any, guarantees a finite angular momentum."""
    if not (profile.q > 0.5 and profile.p > 1.5):
        raise InadmissibleProfileError(f"need q > 1/2 and p > 3/2, got q={profile.q}, p={profile.p}")
    if not profile.current_decays():
        return FinitenessVerdict.NOT_GUARANTEED
    if profile.has_expansion_form and 1.5 < profile.p < 3:
        return FinitenessVerdict.FINITE_BY_EXPANSION
    if profile.decay_route():
        return FinitenessVerdict.FINITE_BY_DECAY
    return FinitenessVerdict.NOT_GUARANTEED


# constraint diagnostics


def symbolic_residuals(term) -> tuple[SpherePolynomial, SphereOneForm]:
    """Leading divergence coefficients of an expansion term with all blocks.

    With P = -s: ``(2-P) beta + div alpha - tr h`` and
    ``(3-P) alpha + div h_hat + d(tr h)/2``, h_hat the trace-free part of h.
    """
    if term.beta is None or term.alpha is None or term.h is None:
        raise ValueError("residuals need beta, alpha and h")
    P = -term.power
    trh = term.h.trace()
    r1 = term.beta * (2 - P) + term.alpha.divergence() - trh
    r2 = term.alpha * (3 - P) + term.h.traceless().divergence() + exterior_d(trh) * Fraction(1, 2)
    return r1, r2


@dataclass
class ConstraintReport:
    radii: np.ndarray
    div_flat: np.ndarray  # max |div_delta pi| over sample points, per radius
    momentum_constraint: np.ndarray  # max |div_g pi|
    energy_constraint: np.ndarray  # max |mu|
    residual_scalar: SpherePolynomial | None = None
    residual_form: SphereOneForm | None = None
    div_flat_exponent: float = math.nan

    @property
    def symbolic_vanishes(self) -> bool | None:
        if self.residual_scalar is None:
            return None
        return self.residual_scalar.is_zero() and self.residual_form.is_zero()


def _fd_stencil(fn, x, h, width):
    """Fourth-order centred derivatives of fn along each axis: out[..., k, ...] = d_k fn."""
    outs = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        acc = (fn(x - 2 * e) - 8 * fn(x - e) + 8 * fn(x + e) - fn(x + 2 * e)) / (12 * h)
        outs.append(acc)
    return np.stack(outs, axis=1)


def _metric_pair(fields):
    return fields.g, fields.dg


def _christoffel(g, dg):
    ginv = np.linalg.inv(g)
    low = 0.5 * (np.transpose(dg, (0, 2, 1, 3)) + np.transpose(dg, (0, 2, 3, 1)) - dg)
    return ginv, np.einsum("nlk,nkij->nlij", ginv, low)


def _constraints_at(source: FluxSource, x: np.ndarray, h: float):
    """(max |div_g pi|, max |mu|) at Cartesian points by finite differences."""
    f0 = source.fields_at(x)
    ginv, gam = _christoffel(f0.g, f0.dg)
    dpi = _fd_stencil(lambda y: source.fields_at(y).pi, x, h, 3)  # (n,k,i,j)
    dgam = _fd_stencil(lambda y: _christoffel(*_metric_pair(source.fields_at(y)))[1], x, h, 3)  # (n,m,l,i,j)
    # nabla_k pi_ij
    cov = dpi - np.einsum("nlki,nlj->nkij", gam, f0.pi) - np.einsum("nlkj,nil->nkij", gam, f0.pi)
    div = np.einsum("nki,nkij->nj", ginv, cov)
    # Ricci: R_ij = d_l G^l_ij - d_j G^l_il + G^l_lm G^m_ij - G^l_jm G^m_il
    ric = (
        np.einsum("nllij->nij", dgam)
        - np.einsum("njlil->nij", dgam)
        + np.einsum("nllm,nmij->nij", gam, gam)
        - np.einsum("nljm,nmil->nij", gam, gam)
    )
    R = np.einsum("nij,nij->n", ginv, ric)
    # k from pi: k = pi - tr(pi) g / 2
    trpi = np.einsum("nij,nij->n", ginv, f0.pi)
    k = f0.pi - 0.5 * trpi[:, None, None] * f0.g
    kup = np.einsum("nia,nab,njb->nij", ginv, k, ginv)
    k2 = np.einsum("nij,nij->n", kup, k)
    trk = np.einsum("nij,nij->n", ginv, k)
    mu = 0.5 * (R - k2 + trk**2)
    gnorm = np.sqrt(np.einsum("nj,nj->n", div, div))
    return float(np.max(gnorm)), float(np.max(np.abs(mu)))


def constraint_residual(
    source: FluxSource,
    radii: Sequence[float],
    rule: QuadratureRule | int | None = None,
    n_points: int = 16,
    seed: int = 0,
    fd_step: float = 1e-3,
) -> ConstraintReport:
    """Constraint diagnostics on sample points of each sphere.

    Reports the flat divergence of pi (spherical-component formula), the
    momentum constraint div_g pi and the energy constraint mu, each as a max
    over sample points; and, when a symbolic expansion is available, the
    residual polynomials of the leading expansion term.
    """
    if isinstance(rule, QuadratureRule):
        pts = rule.points[:: max(1, len(rule.points) // n_points)][:n_points]
    else:
        pts = random_sphere_points(n_points, np.random.default_rng(seed))
    radii = np.asarray(radii, dtype=float)
    div_flat = np.empty(len(radii))
    mom = np.empty(len(radii))
    en = np.empty(len(radii))
    for i, r in enumerate(radii):
        source.check_radius(r)
        _, cart = div_flat_batch(lambda y: source.fields_at(y.reshape(-1, 3)).pi.reshape(y.shape + (3,)), r, pts)
        div_flat[i] = float(np.max(np.linalg.norm(cart, axis=-1)))
        mom[i], en[i] = _constraints_at(source, r * pts, fd_step * r)
    r1 = r2 = None
    exp = source.expansion
    if exp is not None:
        lead = exp.leading()
        if lead.beta is not None and lead.alpha is not None and lead.h is not None:
            r1, r2 = symbolic_residuals(lead)
    slope = math.nan
    if len(radii) >= 2 and np.all(div_flat > 0):
        slope = float(np.polyfit(np.log(radii), np.log(div_flat), 1)[0])
    return ConstraintReport(radii, div_flat, mom, en, r1, r2, slope)


class ConstraintNotSatisfiedError(ValueError):
    pass


@dataclass(frozen=True)
class LeadingFluxReport:
    """Exact flux coefficients int x^l *d(alpha) dmu, as rational multiples of 4 pi."""

    direct: tuple[Fraction, Fraction, Fraction]
    via_hhat: tuple[Fraction, Fraction, Fraction] | None
    closed: bool

    @property
    def vanishes(self) -> bool:
        ok = all(c == 0 for c in self.direct)
        if self.via_hhat is not None:
            ok = ok and all(c == 0 for c in self.via_hhat)
        return ok

    def __bool__(self):
        return self.vanishes


def leading_flux_vanishes(expansion: MomentumExpansion | object) -> LeadingFluxReport:
    """Exact check that the leading cross block carries no angular momentum.

    A closed alpha passes immediately.  Otherwise the leading term must satisfy
    the momentum constraint relation, and the flux is recomputed from
    *d alpha = -(3-P)^{-1} *d div(h_hat).
    """
    lead = expansion.leading() if isinstance(expansion, MomentumExpansion) else expansion
    xs = [SpherePolynomial.variable(l) for l in (1, 2, 3)]
    alpha = lead.alpha if lead.alpha is not None else SphereOneForm.zero()
    star = hodge_star_d(alpha)
    direct = tuple(integrate(x * star).value for x in xs)
    if star.is_zero():
        return LeadingFluxReport(direct, None, True)
    if lead.beta is None or lead.h is None:
        raise ConstraintNotSatisfiedError("leading term lacks beta or h; the constraint relation cannot be checked")
    _, r2 = symbolic_residuals(lead)
    if not r2.is_zero():
        raise ConstraintNotSatisfiedError("leading term violates (3-P) alpha + div h_hat + d(tr h)/2 = 0")
    P = -lead.power
    star_h = hodge_star_d(lead.h.traceless().divergence()) * Fraction(-1, 1) / (3 - P)
    via = tuple(integrate(x * star_h).value for x in xs)
    return LeadingFluxReport(direct, via, False)
