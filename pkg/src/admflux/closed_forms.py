"""Exact rational limits of the angular momentum and center of mass fluxes.

These evaluate the limiting sphere integrals for graphs t = r^p A with
exact arithmetic and serve as the oracle for the numerical flux path.  They
are only valid in the regimes they were derived for: p = 1/3 for the
angular momentum and p = 0 for the center of mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from .sphere_poly import (
    SpherePolynomial,
    exterior_d,
    grad_dot,
    hodge_star_d,
    integrate,
    laplacian,
    SphereIntegral,
)

__all__ = [
    "ExactVector",
    "angular_momentum_exact",
    "angular_momentum_integrands",
    "center_of_mass_exact",
    "schwarzschild_angular_momentum_exact",
    "J_POWER",
    "C_POWER",
]

J_POWER = Fraction(1, 3)
C_POWER = Fraction(0)

_X = tuple(SpherePolynomial.variable(i) for i in (1, 2, 3))


@dataclass(frozen=True)
class ExactVector:
    """Three exact components along the coordinate axes.

    For ``J`` the component ``l`` pairs with the rotation about axis ``l``,
    so component 3 is J(x1 d/dx2 - x2 d/dx1).
    """

    components: tuple[Fraction, Fraction, Fraction]
    quantity: Literal["J", "C"]

    def __post_init__(self):
        if self.quantity not in ("J", "C"):
            raise ValueError(f"quantity must be 'J' or 'C', got {self.quantity!r}")
        comps = tuple(Fraction(c) for c in self.components)
        if len(comps) != 3:
            raise ValueError("an exact vector has three components")
        object.__setattr__(self, "components", comps)

    def __getitem__(self, i: int) -> Fraction:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def to_float(self) -> tuple[float, float, float]:
        return tuple(float(c) for c in self.components)

    def scaled(self, c) -> "ExactVector":
        c = Fraction(c)
        return ExactVector(tuple(c * v for v in self.components), self.quantity)

    def __str__(self):
        return f"{self.quantity}(" + ", ".join(str(c) for c in self.components) + ")"


def angular_momentum_integrands(A: SpherePolynomial) -> tuple[SphereIntegral, SphereIntegral, SphereIntegral]:
    """The exact sphere integrals of x^l *d(dA [A Lap A - |grad A|^2]), l = 1, 2, 3."""
    A = SpherePolynomial(A.terms) if not isinstance(A, SpherePolynomial) else A
    weight = A * laplacian(A) - grad_dot(A, A)
    star = hodge_star_d(exterior_d(A) * weight)
    return tuple(integrate(x * star) for x in _X)


def angular_momentum_exact(A: SpherePolynomial) -> ExactVector:
    """Limit of the angular momentum flux for the Minkowski graph t = r^{1/3} A.

    Each component is -(1/24 pi) times the corresponding integral from
    :func:`angular_momentum_integrands`; the integrals are rational multiples
    of pi, so the result is rational.
    """
    # integrate() stores I / 4pi, so -(1/24pi) I = -value / 6
    return ExactVector(tuple(-I.value / 6 for I in angular_momentum_integrands(A)), "J")


def center_of_mass_exact(A: SpherePolynomial) -> ExactVector:
    """Limit of the center of mass flux for the Minkowski graph t = A (p = 0).

    C^i = -(1/8 pi) int |grad A|^2 x^i, reported without normalization by the energy.
    """
    g2 = grad_dot(A, A)
    # -(1/8pi) * 4pi * value
    return ExactVector(tuple(-integrate(x * g2).value / 2 for x in _X), "C")


def schwarzschild_angular_momentum_exact(A: SpherePolynomial, m) -> ExactVector:
    """Limit of J for the graph t = r^{1/3} A over a Schwarzschild slice of mass m.

    The only mass-dependent term of the radial-angular momentum block at the
    relevant order is a multiple of m dA, which is closed and carries no flux.
    That is checked here rather than assumed, so the result equals
    :func:`angular_momentum_exact` for every admissible mass.
    """
    m = Fraction(str(m)) if isinstance(m, float) else Fraction(m)
    if m < 0:
        raise ValueError(f"mass must be nonnegative, got {m}")
    # coefficient of the r^{p-3} cross term is -(p - 2) m dA
    extra = exterior_d(A) * (-(J_POWER - 2) * m)
    star = hodge_star_d(extra)
    if not star.is_zero():  # pragma: no cover - d of an exact form always vanishes
        raise ArithmeticError("mass term of the cross block is not closed")
    return angular_momentum_exact(A)
