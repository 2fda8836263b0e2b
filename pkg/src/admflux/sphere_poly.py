"""Exact calculus of polynomial functions, one-forms and symmetric 2-tensors on S^2.

A function on the unit sphere is stored as a polynomial in the ambient
coordinate functions x1, x2, x3 with rational coefficients, reduced modulo
``x1^2 + x2^2 + x3^2 = 1`` so that no monomial carries ``x3`` to a power
above one.  Tangential objects (one-forms, 2-tensors) are stored through
their ambient Cartesian components, projected onto the tangent plane.

All objects are immutable; every operation returns a new canonical object.
"""

from __future__ import annotations

import functools
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "ORIENTATION",
    "SpherePolynomial",
    "SphereOneForm",
    "SphereSym2",
    "SphereIntegral",
    "canonicalize",
    "grad_dot",
    "laplacian",
    "integrate",
    "exterior_d",
    "hodge_star_d",
    "hessian",
    "monomial_integral",
    "X1",
    "X2",
    "X3",
]

Monomial = tuple[int, int, int]

# Sign of the area form relative to the one induced by the outward normal.
# With -1 we have *(dx1 ^ dx2) = -x3 and, for the rotation field
# Y_l = e_l x x, the identity  int w(Y_l) = - int x^l *dw.
ORIENTATION = -1


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, numbers.Rational):
        return Fraction(c)
    raise TypeError(f"exact rational coefficient expected, got {type(c).__name__}")


@functools.lru_cache(maxsize=None)
def _reduce_monomial(a: int, b: int, c: int) -> tuple[tuple[Monomial, int], ...]:
    """Expand x1^a x2^b x3^c with x3^2 -> 1 - x1^2 - x2^2."""
    k, e = divmod(c, 2)
    if k == 0:
        return (((a, b, c), 1),)
    out = []
    fk = math.factorial(k)
    for j in range(k + 1):
        for l in range(k + 1 - j):
            i = k - j - l
            coeff = fk // (math.factorial(i) * math.factorial(j) * math.factorial(l))
            if (j + l) % 2:
                coeff = -coeff
            out.append(((a + 2 * j, b + 2 * l, e), coeff))
    return tuple(out)


def _canonical_terms(raw: Mapping[Monomial, Fraction] | Iterable[tuple[Monomial, Fraction]]):
    items = raw.items() if isinstance(raw, Mapping) else raw
    acc: dict[Monomial, Fraction] = {}
    for (a, b, c), coeff in items:
        if not coeff:
            continue
        if c < 2:
            acc[(a, b, c)] = acc.get((a, b, c), 0) + coeff
            continue
        for mono, k in _reduce_monomial(a, b, c):
            acc[mono] = acc.get(mono, 0) + coeff * k
    return {m: Fraction(v) for m, v in acc.items() if v}


class SpherePolynomial:
    """Polynomial function on S^2 with exact rational coefficients.

    ``terms`` maps exponent triples ``(a, b, c)`` to nonzero ``Fraction``
    coefficients, with ``c`` in ``{0, 1}``.
    """

    __slots__ = ("_terms", "_compiled", "_hash")

    def __init__(self, terms=None):
        if terms is None:
            terms = {}
        elif not isinstance(terms, Mapping):
            terms = dict(terms)
        self._terms = _canonical_terms({k: _as_fraction(v) for k, v in terms.items()})
        self._compiled = None
        self._hash = None

    @classmethod
    def _trusted(cls, terms: dict[Monomial, Fraction]) -> "SpherePolynomial":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._compiled = None
        obj._hash = None
        return obj

    @classmethod
    def constant(cls, c) -> "SpherePolynomial":
        return cls({(0, 0, 0): c})

    @classmethod
    def variable(cls, i: int) -> "SpherePolynomial":
        """Coordinate function x_i, i in {1, 2, 3}."""
        if i not in (1, 2, 3):
            raise ValueError("variable index must be 1, 2 or 3")
        e = [0, 0, 0]
        e[i - 1] = 1
        return cls({tuple(e): 1})

    @classmethod
    def parse(cls, text: str) -> "SpherePolynomial":
        from .expr import parse_expression

        return parse_expression(text)

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def degree(self) -> int:
        """Total degree of the canonical representative (-1 for zero)."""
        return max((a + b + c for a, b, c in self._terms), default=-1)

    def parity(self) -> int | None:
        """+1 if even under x -> -x, -1 if odd, None if mixed or zero."""
        signs = {(-1) ** ((a + b + c) % 2) for a, b, c in self._terms}
        return signs.pop() if len(signs) == 1 else None

    def constant_term(self) -> Fraction:
        return self._terms.get((0, 0, 0), Fraction(0))

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, SpherePolynomial):
            return other
        if isinstance(other, numbers.Rational):
            return SpherePolynomial.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for m, v in other._terms.items():
            s = acc.get(m, 0) + v
            if s:
                acc[m] = s
            else:
                acc.pop(m, None)
        return SpherePolynomial._trusted(acc)

    __radd__ = __add__

    def __neg__(self):
        return SpherePolynomial._trusted({m: -v for m, v in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, numbers.Rational):
            c = Fraction(other)
            if not c:
                return SpherePolynomial()
            return SpherePolynomial._trusted({m: v * c for m, v in self._terms.items()})
        if not isinstance(other, SpherePolynomial):
            return NotImplemented
        raw: dict[Monomial, Fraction] = {}
        for (a1, b1, c1), v1 in self._terms.items():
            for (a2, b2, c2), v2 in other._terms.items():
                key = (a1 + a2, b1 + b2, c1 + c2)
                raw[key] = raw.get(key, 0) + v1 * v2
        return SpherePolynomial._trusted(_canonical_terms(raw))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, numbers.Rational):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = SpherePolynomial.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # calculus helpers on the canonical representative, viewed as an ambient polynomial

    def diff(self, i: int) -> "SpherePolynomial":
        """Ambient partial derivative d/dx_i of the canonical representative."""
        k = i - 1
        raw = {}
        for mono, v in self._terms.items():
            e = mono[k]
            if e:
                m = list(mono)
                m[k] -= 1
                raw[tuple(m)] = raw.get(tuple(m), 0) + v * e
        return SpherePolynomial._trusted(_canonical_terms(raw))

    def gradient(self) -> tuple["SpherePolynomial", "SpherePolynomial", "SpherePolynomial"]:
        return (self.diff(1), self.diff(2), self.diff(3))

    def substitute_axes(self, perm: tuple[int, int, int]) -> "SpherePolynomial":
        """Relabel coordinates: x_i -> x_{perm[i-1]}."""
        raw = {}
        for mono, v in self._terms.items():
            e = [0, 0, 0]
            for i in range(3):
                e[perm[i] - 1] += mono[i]
            raw[tuple(e)] = raw.get(tuple(e), 0) + v
        return SpherePolynomial._trusted(_canonical_terms(raw))

    # numeric evaluation

    def _compile(self):
        if self._compiled is None:
            if self._terms:
                exps = np.array(list(self._terms), dtype=np.intp)
                coeffs = np.array([float(v) for v in self._terms.values()])
            else:
                exps = np.zeros((0, 3), dtype=np.intp)
                coeffs = np.zeros(0)
            self._compiled = (exps, coeffs)
        return self._compiled

    def __call__(self, points):
        return self.evaluate(points)

    def evaluate(self, points) -> np.ndarray:
        """Evaluate at points of shape (..., 3); complex input is allowed."""
        pts = np.asarray(points)
        exps, coeffs = self._compile()
        shape = pts.shape[:-1]
        if not len(coeffs):
            return np.zeros(shape, dtype=np.result_type(pts.dtype, float))
        flat = pts.reshape(-1, 3)
        top = int(exps.max())
        out = None
        powers = []
        for i in range(3):
            x = flat[:, i]
            table = [np.ones_like(x)]
            for _ in range(top):
                table.append(table[-1] * x)
            powers.append(np.stack(table))
        # fixed-order accumulation, not a BLAS product: the rounding of each
        # point must not depend on its position in the batch, or antipodal
        # nodes stop cancelling exactly
        out = coeffs[0] * (powers[0][exps[0, 0]] * powers[1][exps[0, 1]] * powers[2][exps[0, 2]])
        for c, (a, b, d) in zip(coeffs[1:], exps[1:]):
            out = out + c * (powers[0][a] * powers[1][b] * powers[2][d])
        return out.reshape(shape)

    # formatting

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono in sorted(self._terms, key=lambda m: (-sum(m), [-e for e in m])):
            v = self._terms[mono]
            factors = []
            for i, e in enumerate(mono, start=1):
                if e == 1:
                    factors.append(f"x{i}")
                elif e > 1:
                    factors.append(f"x{i}^{e}")
            mag = abs(v)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            sign = "-" if v < 0 else "+"
            parts.append((sign, body))
        head_sign, head = parts[0]
        text = ("-" if head_sign == "-" else "") + head
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"SpherePolynomial('{self}')"


X1 = SpherePolynomial.variable(1)
X2 = SpherePolynomial.variable(2)
X3 = SpherePolynomial.variable(3)
_X = (X1, X2, X3)
_ZERO = SpherePolynomial()
_ONE = SpherePolynomial.constant(1)


def canonicalize(raw) -> SpherePolynomial:
    """Reduce a raw polynomial ``{(a, b, c): coeff}`` modulo the sphere relation."""
    if isinstance(raw, SpherePolynomial):
        return raw
    return SpherePolynomial(raw)


def _poly(p) -> SpherePolynomial:
    return p if isinstance(p, SpherePolynomial) else SpherePolynomial.constant(p)


def _radial(grad) -> SpherePolynomial:
    return X1 * grad[0] + X2 * grad[1] + X3 * grad[2]


def grad_dot(A: SpherePolynomial, B: SpherePolynomial) -> SpherePolynomial:
    """Induced-metric inner product of the sphere gradients of A and B."""
    ga, gb = A.gradient(), B.gradient()
    flat = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]
    return flat - _radial(ga) * _radial(gb)


def laplacian(A: SpherePolynomial) -> SpherePolynomial:
    """Laplace-Beltrami operator of the round metric.

    Uses ``lap_S F = lap F - x.D^2F.x - 2 x.grad F`` on |x| = 1, which holds
    for any ambient extension F.
    """
    g = A.gradient()
    hess = [[g[i].diff(j + 1) for j in range(3)] for i in range(3)]
    flat = hess[0][0] + hess[1][1] + hess[2][2]
    radial2 = _ZERO
    for i in range(3):
        for j in range(3):
            if hess[i][j]:
                radial2 = radial2 + _X[i] * _X[j] * hess[i][j]
    return flat - radial2 - 2 * _radial(g)


def _double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def monomial_integral(a: int, b: int, c: int) -> Fraction:
    """Integral of x1^a x2^b x3^c over S^2, divided by 4 pi."""
    if a % 2 or b % 2 or c % 2:
        return Fraction(0)
    num = _double_factorial(a - 1) * _double_factorial(b - 1) * _double_factorial(c - 1)
    return Fraction(num, _double_factorial(a + b + c + 1))


@dataclass(frozen=True)
class SphereIntegral:
    """Exact integral over S^2 stored as a rational multiple of 4 pi."""

    value: Fraction

    @property
    def pi_multiple(self) -> Fraction:
        """Coefficient of pi."""
        return 4 * self.value

    def __float__(self):
        return 4.0 * math.pi * float(self.value)

    def __add__(self, other):
        return SphereIntegral(self.value + other.value)

    def __mul__(self, c):
        return SphereIntegral(self.value * Fraction(c))

    __rmul__ = __mul__

    def __str__(self):
        q = self.pi_multiple
        if not q:
            return "0"
        num = "π" if abs(q.numerator) == 1 else f"{abs(q.numerator)}π"
        sign = "-" if q < 0 else ""
        return f"{sign}{num}" if q.denominator == 1 else f"{sign}{num}/{q.denominator}"


def integrate(A: SpherePolynomial) -> SphereIntegral:
    total = Fraction(0)
    for (a, b, c), v in A.items():
        total += v * monomial_integral(a, b, c)
    return SphereIntegral(total)


def _project(w) -> tuple[SpherePolynomial, SpherePolynomial, SpherePolynomial]:
    w = tuple(_poly(c) for c in w)
    n = _radial(w)
    if not n:
        return w
    return tuple(w[i] - _X[i] * n for i in range(3))


class SphereOneForm:
    """One-form on S^2 given by tangential ambient components (w1, w2, w3).

    The represented form is ``sum_i w_i dx_i`` pulled back to the sphere; the
    stored representative satisfies ``sum_i x_i w_i == 0``.
    """

    __slots__ = ("comps",)

    def __init__(self, comps):
        if len(comps) != 3:
            raise ValueError("a one-form needs three ambient components")
        self.comps = _project(comps)

    @classmethod
    def zero(cls) -> "SphereOneForm":
        return cls((_ZERO, _ZERO, _ZERO))

    def __add__(self, other):
        if not isinstance(other, SphereOneForm):
            return NotImplemented
        return SphereOneForm(tuple(a + b for a, b in zip(self.comps, other.comps)))

    def __sub__(self, other):
        if not isinstance(other, SphereOneForm):
            return NotImplemented
        return SphereOneForm(tuple(a - b for a, b in zip(self.comps, other.comps)))

    def __neg__(self):
        return SphereOneForm(tuple(-a for a in self.comps))

    def __mul__(self, scalar):
        if isinstance(scalar, (SpherePolynomial, numbers.Rational)):
            return SphereOneForm(tuple(a * scalar for a in self.comps))
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SphereOneForm):
            return NotImplemented
        return self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def is_zero(self) -> bool:
        return not any(self.comps)

    def dot(self, other: "SphereOneForm") -> SpherePolynomial:
        """Pointwise pairing under the round metric."""
        return sum((a * b for a, b in zip(self.comps, other.comps)), _ZERO)

    def divergence(self) -> SpherePolynomial:
        """Covariant divergence, i.e. the trace of the covariant derivative."""
        total = _ZERO
        for i in range(3):
            d = self.comps[i].gradient()
            total = total + d[i] - _X[i] * _radial(d)
        return total

    def evaluate(self, points) -> np.ndarray:
        """Ambient components at points (..., 3), returned as (..., 3)."""
        return np.stack([c.evaluate(points) for c in self.comps], axis=-1)

    def __repr__(self):
        return "SphereOneForm(" + ", ".join(f"'{c}'" for c in self.comps) + ")"


def exterior_d(A: SpherePolynomial) -> SphereOneForm:
    return SphereOneForm(A.gradient())


def hodge_star_d(omega: SphereOneForm) -> SpherePolynomial:
    """The function *d(omega) on S^2 (sign set by ``ORIENTATION``).

    For the ambient extension w, d(omega) is the pull-back of curl(w) . dS and
    the Hodge dual evaluates it on an oriented orthonormal frame, which gives
    ``ORIENTATION * x . curl(w)``.
    """
    w = omega.comps
    curl = (
        w[2].diff(2) - w[1].diff(3),
        w[0].diff(3) - w[2].diff(1),
        w[1].diff(1) - w[0].diff(2),
    )
    return ORIENTATION * _radial(curl)


class SphereSym2:
    """Symmetric tangential 2-tensor on S^2 with polynomial ambient components."""

    __slots__ = ("comps",)

    def __init__(self, comps):
        rows = [[_poly(comps[i][j]) for j in range(3)] for i in range(3)]
        for i in range(3):
            for j in range(i + 1, 3):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("tensor components are not symmetric")
        # P T P
        tx = [_radial(rows[i]) for i in range(3)]
        xtx = _radial(tx)
        self.comps = tuple(
            tuple(rows[i][j] - _X[i] * tx[j] - tx[i] * _X[j] + _X[i] * _X[j] * xtx for j in range(3))
            for i in range(3)
        )

    @classmethod
    def metric(cls) -> "SphereSym2":
        return cls([[_ONE if i == j else _ZERO for j in range(3)] for i in range(3)])

    @classmethod
    def zero(cls) -> "SphereSym2":
        return cls([[_ZERO] * 3 for _ in range(3)])

    @classmethod
    def sym_product(cls, a: SphereOneForm, b: SphereOneForm) -> "SphereSym2":
        """Symmetrised product (a (x) b + b (x) a) / 2."""
        half = Fraction(1, 2)
        return cls(
            [[(a.comps[i] * b.comps[j] + a.comps[j] * b.comps[i]) * half for j in range(3)] for i in range(3)]
        )

    def __add__(self, other):
        if not isinstance(other, SphereSym2):
            return NotImplemented
        return SphereSym2([[self.comps[i][j] + other.comps[i][j] for j in range(3)] for i in range(3)])

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return SphereSym2([[-c for c in row] for row in self.comps])

    def __mul__(self, scalar):
        if isinstance(scalar, (SpherePolynomial, numbers.Rational)):
            return SphereSym2([[c * scalar for c in row] for row in self.comps])
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SphereSym2):
            return NotImplemented
        return self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def is_zero(self) -> bool:
        return not any(c for row in self.comps for c in row)

    def trace(self) -> SpherePolynomial:
        return self.comps[0][0] + self.comps[1][1] + self.comps[2][2]

    def traceless(self) -> "SphereSym2":
        return self - SphereSym2.metric() * (self.trace() * Fraction(1, 2))

    def divergence(self) -> SphereOneForm:
        """Covariant divergence (contraction on the first index)."""
        out = []
        for l in range(3):
            total = _ZERO
            for j in range(3):
                d = self.comps[j][l].gradient()
                total = total + d[j] - _X[j] * _radial(d)
            out.append(total)
        return SphereOneForm(out)

    def contract(self, a: SphereOneForm, b: SphereOneForm) -> SpherePolynomial:
        total = _ZERO
        for i in range(3):
            for j in range(3):
                if self.comps[i][j]:
                    total = total + self.comps[i][j] * a.comps[i] * b.comps[j]
        return total

    def evaluate(self, points) -> np.ndarray:
        rows = [np.stack([c.evaluate(points) for c in row], axis=-1) for row in self.comps]
        return np.stack(rows, axis=-2)


def hessian(A: SpherePolynomial) -> SphereSym2:
    """Covariant Hessian on S^2: ``P D^2A P - (x . grad A) P``."""
    g = A.gradient()
    hess = [[g[i].diff(j + 1) for j in range(3)] for i in range(3)]
    return SphereSym2(hess) - SphereSym2.metric() * _radial(g)
