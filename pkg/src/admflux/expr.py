"""Parser for the polynomial text syntax used in scenario files and the CLI.

Grammar (whitespace is ignored)::

    expr   := term (("+" | "-") term)*
    term   := unary ("*" unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" INT)?
    atom   := INT ("/" INT)? | "x1" | "x2" | "x3" | "(" expr ")"

The result is canonicalized modulo the sphere relation.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .sphere_poly import SpherePolynomial

__all__ = ["ExpressionError", "UnknownIdentifierError", "parse_expression"]


class ExpressionError(ValueError):
    """Syntax error in a polynomial expression, with 1-based line/column."""

    def __init__(self, message: str, text: str, pos: int):
        self.line = text.count("\n", 0, pos) + 1
        self.column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.pos = pos
        super().__init__(f"{message} at line {self.line}, column {self.column}")


class UnknownIdentifierError(ExpressionError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(.))")
_VARS = {"x1": 1, "x2": 2, "x3": 3}


def _tokenize(text: str):
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            tokens.append(("int", m.group(1), start))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ExpressionError(f"unexpected character {ch!r}", text, start)
            tokens.append((ch, ch, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            want = "end of input" if kind == "end" else repr(kind)
            got = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExpressionError(f"expected {want}, found {got}", self.text, tok[2])
        self.i += 1
        return tok

    def expr(self) -> SpherePolynomial:
        value = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> SpherePolynomial:
        value = self.unary()
        while self.peek()[0] == "*":
            self.take()
            value = value * self.unary()
        return value

    def unary(self) -> SpherePolynomial:
        kind = self.peek()[0]
        if kind in ("+", "-"):
            self.take()
            inner = self.unary()
            return -inner if kind == "-" else inner
        return self.power()

    def power(self) -> SpherePolynomial:
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            if self.peek()[0] == "-":
                raise ExpressionError("negative exponent", self.text, self.peek()[2])
            tok = self.take("int")
            base = base ** int(tok[1])
        return base

    def atom(self) -> SpherePolynomial:
        kind, value, pos = self.peek()
        if kind == "int":
            self.take()
            num = int(value)
            if self.peek()[0] == "/":
                self.take()
                den_tok = self.take("int")
                den = int(den_tok[1])
                if den == 0:
                    raise ExpressionError("zero denominator", self.text, den_tok[2])
                return SpherePolynomial.constant(Fraction(num, den))
            return SpherePolynomial.constant(num)
        if kind == "name":
            self.take()
            if value not in _VARS:
                raise UnknownIdentifierError(f"unknown identifier {value!r}", self.text, pos)
            return SpherePolynomial.variable(_VARS[value])
        if kind == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        got = "end of input" if kind == "end" else repr(value)
        raise ExpressionError(f"unexpected {got}", self.text, pos)


def parse_expression(text: str) -> SpherePolynomial:
    """Parse ``text`` into a canonical :class:`SpherePolynomial`."""
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    parser = _Parser(text)
    value = parser.expr()
    parser.take("end")
    return value
