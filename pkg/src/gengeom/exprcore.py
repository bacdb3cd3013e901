"""Scalar expressions over chart coordinates, nested dual numbers and a parser.

Expressions are immutable trees.  They are never simplified or rewritten;
everything downstream evaluates them, either on plain floats / numpy arrays
or on :class:`Dual` numbers to obtain exact first partials.

Grammar accepted by :func:`parse` (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = ("+" | "-") , unary | power ;
    power   = atom , [ "^" , [ "+" | "-" ] , integer ] ;
    atom    = number | "pi" | name | func , "(" , expr , ")" | "(" , expr , ")" ;
    func    = "sin" | "cos" ;
    number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ]
            | "." , digits , [ exponent ] ;
    name    = letter , { letter | digit | "_" } ;

``-x^2`` parses as ``-(x^2)``.  Subtraction ``a - b`` is stored as
``Add(a, Neg(b))``; there is no separate subtraction node.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Add", "Mul", "Neg", "Div", "PowInt", "Sin", "Cos",
    "Dual", "DomainError", "ParseError",
    "parse", "evaluate", "eval", "eval_dual", "finite_diff",
    "new_tag", "seed", "value_of", "partial_of", "sin", "cos", "as_expr",
]


class DomainError(ValueError):
    """A point left the open domain where every expression is finite."""


class ParseError(ValueError):
    """Syntax error or unknown identifier; ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int, token: str | None = None):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.token = token


# ---------------------------------------------------------------------------
# Expression tree
# ---------------------------------------------------------------------------

class Expr:
    """Base class of expression nodes.  Supports arithmetic operators."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Add(self, Neg(as_expr(other)))

    def __rsub__(self, other):
        return Add(as_expr(other), Neg(self))

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("only integer exponents are supported")
        return PowInt(self, int(k))


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    index: int


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True, eq=True)
class PowInt(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, eq=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Cos(Expr):
    arg: Expr


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, np.integer, np.floating)):
        return Const(float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


# ---------------------------------------------------------------------------
# Dual numbers
# ---------------------------------------------------------------------------

_tags = itertools.count(1)


def new_tag() -> int:
    return next(_tags)


class Dual:
    """First-order dual number ``value + sum_k partials[k] eps_k``.

    ``value`` and the partials may be floats, numpy arrays (one entry per
    sample point) or Duals of an *older* tag, which gives nested
    differentiation.  Every seeding draws a fresh tag; a Dual whose tag is
    not the one being differentiated is treated as a constant, which keeps
    nested derivatives from being confused with each other.
    """

    __slots__ = ("value", "partials", "tag")
    # make ndarray <op> Dual dispatch to the Dual's reflected operator
    __array_ufunc__ = None

    def __init__(self, value, partials, tag: int):
        self.value = value
        self.partials = tuple(partials)
        self.tag = tag

    def __repr__(self):
        return f"Dual({self.value!r}, {self.partials!r}, tag={self.tag})"

    def __add__(self, other):
        if isinstance(other, Dual) and other.tag == self.tag:
            return Dual(self.value + other.value,
                        [a + b for a, b in zip(self.partials, other.partials)], self.tag)
        if isinstance(other, Dual) and other.tag > self.tag:
            return other.__radd__(self)
        return Dual(self.value + other, self.partials, self.tag)

    def __radd__(self, other):
        return Dual(other + self.value, self.partials, self.tag)

    def __sub__(self, other):
        if isinstance(other, Dual) and other.tag == self.tag:
            return Dual(self.value - other.value,
                        [a - b for a, b in zip(self.partials, other.partials)], self.tag)
        if isinstance(other, Dual) and other.tag > self.tag:
            return other.__rsub__(self)
        return Dual(self.value - other, self.partials, self.tag)

    def __rsub__(self, other):
        return Dual(other - self.value, [-a for a in self.partials], self.tag)

    def __neg__(self):
        return Dual(-self.value, [-a for a in self.partials], self.tag)

    def __mul__(self, other):
        if isinstance(other, Dual) and other.tag == self.tag:
            a, b = self.value, other.value
            return Dual(a * b, [a * db + da * b for da, db in zip(self.partials, other.partials)],
                        self.tag)
        if isinstance(other, Dual) and other.tag > self.tag:
            return other.__rmul__(self)
        return Dual(self.value * other, [da * other for da in self.partials], self.tag)

    def __rmul__(self, other):
        return Dual(other * self.value, [other * da for da in self.partials], self.tag)

    def __truediv__(self, other):
        if isinstance(other, Dual) and other.tag == self.tag:
            a, b = self.value, other.value
            q = a / b
            return Dual(q, [(da - q * db) / b for da, db in zip(self.partials, other.partials)],
                        self.tag)
        if isinstance(other, Dual) and other.tag > self.tag:
            return other.__rtruediv__(self)
        return Dual(self.value / other, [da / other for da in self.partials], self.tag)

    def __rtruediv__(self, other):
        b = self.value
        q = other / b
        return Dual(q, [-(q * db) / b for db in self.partials], self.tag)

    def __pow__(self, k: int):
        if k == 0:
            return Dual(self.value ** 0, [0.0 * da for da in self.partials], self.tag)
        dv = k * self.value ** (k - 1)
        return Dual(self.value ** k, [dv * da for da in self.partials], self.tag)

    def sin(self):
        c = cos(self.value)
        return Dual(sin(self.value), [c * da for da in self.partials], self.tag)

    def cos(self):
        s = sin(self.value)
        return Dual(cos(self.value), [-(s * da) for da in self.partials], self.tag)


def sin(x):
    if isinstance(x, Dual):
        return x.sin()
    if isinstance(x, Expr):
        return Sin(x)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return x.cos()
    if isinstance(x, Expr):
        return Cos(x)
    return np.cos(x)


def value_of(x, tag: int):
    """Strip one derivative level: the value of ``x`` at ``tag``."""
    if isinstance(x, Dual) and x.tag == tag:
        return x.value
    return x


def partial_of(x, k: int, tag: int):
    """The ``k``-th partial of ``x`` at ``tag`` (zero for constants)."""
    if isinstance(x, Dual) and x.tag == tag:
        return x.partials[k]
    return 0.0


def seed(coords: Sequence, tag: int | None = None) -> tuple[list[Dual], int]:
    """Turn coordinates into Duals with unit partials ``e_k`` under a new tag."""
    if tag is None:
        tag = new_tag()
    n = len(coords)
    return [Dual(c, [1.0 if k == i else 0.0 for k in range(n)], tag)
            for i, c in enumerate(coords)], tag


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _real_part(x):
    while isinstance(x, Dual):
        x = x.value
    return x


def _check_denominator(den):
    r = _real_part(den)
    if np.any(np.asarray(r) == 0):
        raise DomainError("division by zero: point outside the chart domain")


def evaluate(e: Expr, coords: Sequence[Any]):
    """Evaluate ``e`` on any scalar type: float, ndarray or Dual."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return coords[e.index]
    if isinstance(e, Add):
        return evaluate(e.left, coords) + evaluate(e.right, coords)
    if isinstance(e, Mul):
        return evaluate(e.left, coords) * evaluate(e.right, coords)
    if isinstance(e, Neg):
        return -evaluate(e.arg, coords)
    if isinstance(e, Div):
        den = evaluate(e.den, coords)
        _check_denominator(den)
        return evaluate(e.num, coords) / den
    if isinstance(e, PowInt):
        base = evaluate(e.base, coords)
        if e.exponent < 0:
            _check_denominator(base)
            return 1.0 / base ** (-e.exponent)
        return base ** e.exponent
    if isinstance(e, Sin):
        return sin(evaluate(e.arg, coords))
    if isinstance(e, Cos):
        return cos(evaluate(e.arg, coords))
    raise TypeError(f"not an expression node: {e!r}")


def eval(e: Expr, p: Sequence[float]) -> float:  # noqa: A001 - named after the operation
    """Plain floating-point evaluation at a point."""
    return float(evaluate(e, [float(c) for c in p]))


def eval_dual(e: Expr, p: Sequence[float]) -> Dual:
    """Value and exact first partials of ``e`` at ``p``."""
    coords, tag = seed([float(c) for c in p])
    out = evaluate(e, coords)
    n = len(coords)
    return Dual(float(value_of(out, tag)),
                [float(partial_of(out, k, tag)) for k in range(n)], tag)


def finite_diff(e: Expr, p: Sequence[float], slot: int, h: float = 1e-5) -> float:
    """Central difference ``(e(p + h e_slot) - e(p - h e_slot)) / 2h``."""
    plus = [float(c) for c in p]
    minus = list(plus)
    plus[slot] += h
    minus[slot] -= h
    return (eval(e, plus) - eval(e, minus)) / (2.0 * h)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)

_FUNCS = {"sin": Sin, "cos": Cos}


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.slots = {name: i for i, name in enumerate(names)}
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", self._byte(pos), text[pos])
            if m.lastgroup != "ws":
                self.tokens.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def _byte(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, tok, what: str):
        kind, text, pos = tok
        shown = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"expected {what}, found {shown}", self._byte(pos), text or None)

    def expect(self, op: str):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            self.fail(tok, repr(op))

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(self.peek(), "operator or end of input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Add(e, Neg(rhs))
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            arg = self.unary()
            return Neg(arg) if tok[1] == "-" else arg
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] in "+-":
                sign = -1 if self.take()[1] == "-" else 1
            tok = self.take()
            if tok[0] != "number" or not tok[1].isdigit():
                self.fail(tok, "integer exponent")
            return PowInt(base, sign * int(tok[1]))
        return base

    def atom(self) -> Expr:
        tok = self.take()
        kind, text, pos = tok
        if kind == "number":
            return Const(float(text))
        if kind == "name":
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCS[text](arg)
            if text in self.slots:
                return Var(self.slots[text])
            if text == "pi":
                return Const(math.pi)
            raise ParseError(f"unknown identifier {text!r}", self._byte(pos), text)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.fail(tok, "number, name or '('")


def parse(text: str, coordinate_names: Sequence[str] = ()) -> Expr:
    """Parse ``text`` into an expression tree over the given coordinate names."""
    return _Parser(text, coordinate_names).parse()


def to_text(e: Expr, names: Sequence[str]) -> str:
    """Render ``e`` back into the grammar.

    Compound subterms are parenthesized, so re-parsing gives a tree that
    evaluates identically (negative constants come back as ``Neg(Const)``).
    """
    if isinstance(e, Const):
        if e.value < 0:
            return f"(-{-e.value!r})"
        return repr(e.value)
    if isinstance(e, Var):
        return names[e.index]
    if isinstance(e, Add):
        if isinstance(e.right, Neg):
            return f"({to_text(e.left, names)} - {to_text(e.right.arg, names)})"
        return f"({to_text(e.left, names)} + {to_text(e.right, names)})"
    if isinstance(e, Mul):
        return f"({to_text(e.left, names)} * {to_text(e.right, names)})"
    if isinstance(e, Div):
        return f"({to_text(e.num, names)} / {to_text(e.den, names)})"
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg, names)})"
    if isinstance(e, PowInt):
        return f"({to_text(e.base, names)}^{e.exponent})"
    if isinstance(e, Sin):
        return f"sin({to_text(e.arg, names)})"
    if isinstance(e, Cos):
        return f"cos({to_text(e.arg, names)})"
    raise TypeError(f"not an expression node: {e!r}")
