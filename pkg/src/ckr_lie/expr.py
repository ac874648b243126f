"""Closed-form expressions in one real variable ``x``.

Every x-dependent coefficient in the package (potentials, masses, gauge
functions, Swanson ladder functions) is an :class:`Expr`.  Expressions are
immutable trees that can be parsed from text, printed back, evaluated on
scalars or numpy arrays, and differentiated exactly.

Grammar (``^`` is right-associative and binds tighter than ``*`` and ``/``;
a leading minus applies to the whole power, so ``-x^2`` is ``-(x^2)``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'x' | NAME '(' expr ')' | '(' expr ')'

``**`` is accepted as a synonym for ``^``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ExprDomainError, ParseError

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Func",
    "FUNCTIONS",
    "parse",
    "as_expr",
    "evaluate",
    "differentiate",
    "wronskian",
    "X",
]

Number = Union[int, float]

# ``sign`` is not part of the input grammar proper but appears in
# derivatives of ``abs``; it is parseable so printed derivatives round-trip.
FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sign": np.sign,
}


class Expr:
    """Base class of expression nodes.

    Arithmetic operators build new trees (with constant folding), so model
    code can write ``alpha * delta`` or ``1 / M``.  Calling an expression
    evaluates it.
    """

    __slots__ = ()

    # -- construction helpers -------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __call__(self, x):
        return evaluate(self, x)

    def __str__(self) -> str:
        return to_string(self)

    # -- queries --------------------------------------------------------------
    def diff(self) -> "Expr":
        return differentiate(self)

    def depends_on_x(self) -> bool:
        raise NotImplementedError

    def is_const(self, value: float | None = None) -> bool:
        return False


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: float

    def depends_on_x(self) -> bool:
        return False

    def is_const(self, value=None) -> bool:
        return value is None or self.value == value


@dataclass(frozen=True, eq=True, repr=True)
class Var(Expr):
    def depends_on_x(self) -> bool:
        return True


@dataclass(frozen=True, eq=True, repr=True)
class Neg(Expr):
    arg: Expr

    def depends_on_x(self) -> bool:
        return self.arg.depends_on_x()


@dataclass(frozen=True, eq=True, repr=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def depends_on_x(self) -> bool:
        return self.left.depends_on_x() or self.right.depends_on_x()


@dataclass(frozen=True, eq=True, repr=True)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def depends_on_x(self) -> bool:
        return self.arg.depends_on_x()


X = Var()
ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    """Coerce numbers and strings to :class:`Expr`."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (complex, np.complexfloating)):
        raise TypeError("expressions are real-valued; got a complex constant")
    if isinstance(value, (int, float, np.integer, np.floating)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


# -- smart constructors (constant folding only) -------------------------------

def _fold(op: str, a: float, b: float) -> Expr | None:
    with np.errstate(all="ignore"):
        value = _BINARY[op](np.float64(a), np.float64(b))
    if not np.isfinite(value):
        return None
    return Const(float(value))


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold("+", a.value, b.value) or BinOp("+", a, b)
    if a.is_const(0.0):
        return b
    if b.is_const(0.0):
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold("-", a.value, b.value) or BinOp("-", a, b)
    if b.is_const(0.0):
        return a
    if a.is_const(0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold("*", a.value, b.value) or BinOp("*", a, b)
    if a.is_const(0.0) or b.is_const(0.0):
        return ZERO
    if a.is_const(1.0):
        return b
    if b.is_const(1.0):
        return a
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return _fold("/", a.value, b.value) or BinOp("/", a, b)
    if b.is_const(1.0):
        return a
    if a.is_const(0.0) and not b.is_const(0.0):
        return ZERO
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        folded = None
        if not (a.value < 0 and not float(b.value).is_integer()) and not (
            a.value == 0 and b.value < 0
        ):
            folded = _fold("^", a.value, b.value)
        return folded or BinOp("^", a, b)
    if b.is_const(1.0):
        return a
    return BinOp("^", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def func(name: str, a: Expr) -> Expr:
    return Func(name, a)


# -- lexer / parser -----------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<pow>\*\*|\^)
  | (?P<op>[-+*/])
  | (?P<lpar>\()
  | (?P<rpar>\))
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}", _byte_offset(text, pos), text
            )
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.depth = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def _error(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.offset, self.text)

    def advance(self) -> _Token:
        tok = self.tok
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind == "rpar":
            raise self._error("unbalanced parentheses: unexpected ')'")
        if self.tok.kind != "end":
            raise self._error(f"unexpected token {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            e = self.unary()
            return neg(e) if op == "-" else e
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "pow":
            self.advance()
            return power(base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text == "x":
                return X
            if self.tok.kind != "lpar":
                raise self._error(f"unknown name {tok.text!r}", tok)
            if tok.text not in FUNCTIONS:
                raise self._error(f"unknown function {tok.text!r}", tok)
            arg = self._parenthesized()
            return func(tok.text, arg)
        if tok.kind == "lpar":
            return self._parenthesized()
        if tok.kind == "end":
            raise self._error("unexpected end of expression")
        if tok.kind == "rpar":
            raise self._error("unbalanced parentheses: unexpected ')'")
        raise self._error(f"unexpected token {tok.text!r}")

    def _parenthesized(self) -> Expr:
        open_tok = self.advance()
        e = self.expr()
        if self.tok.kind != "rpar":
            if self.tok.kind == "end":
                raise self._error(
                    "unbalanced parentheses: '(' is never closed", open_tok
                )
            raise self._error(f"expected ')' but found {self.tok.text!r}")
        self.advance()
        return e


def parse(text: str) -> Expr:
    """Parse ``text`` into an :class:`Expr`.

    Raises
    ------
    ParseError
        On syntax errors, unknown names or functions and unbalanced
        parentheses.  ``err.offset`` is the byte offset of the offending
        token.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0, text if isinstance(text, str) else "")
    return _Parser(text).parse()


# -- printing -----------------------------------------------------------------

def to_string(e: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(e, Const):
        s = repr(float(e.value))
        return f"({s})" if e.value < 0 or s.startswith("-") else s
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Neg):
        return f"(-{to_string(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_string(e.left)} {e.op} {to_string(e.right)})"
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    raise TypeError(type(e))


# -- evaluation ---------------------------------------------------------------

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def _first_bad(mask, x) -> float:
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return float(x)
    xs = np.broadcast_to(x, mask.shape)
    return float(xs.flat[np.flatnonzero(mask)[0]])


def _check(value, x, kind):
    bad = ~np.isfinite(value)
    if np.any(bad):
        raise ExprDomainError(kind, _first_bad(bad, x))
    return value


def _eval(e: Expr, x):
    if isinstance(e, Const):
        return np.float64(e.value) if np.ndim(x) == 0 else np.full(np.shape(x), e.value)
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, BinOp):
        a = _eval(e.left, x)
        b = _eval(e.right, x)
        if e.op == "/":
            zero = b == 0
            if np.any(zero):
                raise ExprDomainError("division by zero", _first_bad(zero, x))
        elif e.op == "^":
            bad = (a < 0) & (b != np.round(b))
            if np.any(bad):
                raise ExprDomainError(
                    "negative base with non-integer exponent", _first_bad(bad, x)
                )
            bad = (a == 0) & (b < 0)
            if np.any(bad):
                raise ExprDomainError("zero to a negative power", _first_bad(bad, x))
        with np.errstate(all="ignore"):
            value = _BINARY[e.op](a, b)
        return _check(value, x, "overflow")
    if isinstance(e, Func):
        a = _eval(e.arg, x)
        if e.name == "log":
            bad = a <= 0
            if np.any(bad):
                raise ExprDomainError("log of non-positive argument", _first_bad(bad, x))
        elif e.name == "sqrt":
            bad = a < 0
            if np.any(bad):
                raise ExprDomainError("sqrt of negative argument", _first_bad(bad, x))
        with np.errstate(all="ignore"):
            value = FUNCTIONS[e.name](a)
        return _check(value, x, f"{e.name} overflow")
    raise TypeError(type(e))


def evaluate(e: Expr, x):
    """Evaluate ``e`` at a scalar or array ``x``.

    Returns a float for scalar input and an ndarray otherwise.  Undefined
    operations raise :class:`ExprDomainError` carrying the kind of failure
    and the first offending ``x``.
    """
    xa = np.asarray(x, dtype=float)
    value = _eval(e, xa)
    if xa.ndim == 0:
        return float(value)
    return np.asarray(value, dtype=float)


# -- differentiation ----------------------------------------------------------

def differentiate(e: Expr) -> Expr:
    """Exact derivative with respect to ``x``.

    ``abs(u)`` differentiates to ``sign(u)*u'`` (so the derivative at a kink
    is 0).  Powers ``u^v`` are supported only when ``v`` does not depend on
    ``x``; anything else raises ``ValueError``.
    """
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return neg(differentiate(e.arg))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        if e.op == "+":
            return add(differentiate(u), differentiate(v))
        if e.op == "-":
            return sub(differentiate(u), differentiate(v))
        if e.op == "*":
            return add(mul(differentiate(u), v), mul(u, differentiate(v)))
        if e.op == "/":
            du, dv = differentiate(u), differentiate(v)
            if dv.is_const(0.0):
                return div(du, v)
            return div(sub(mul(du, v), mul(u, dv)), power(v, Const(2.0)))
        if e.op == "^":
            if v.depends_on_x():
                raise ValueError(
                    "u^v with x-dependent exponent cannot be differentiated; "
                    "rewrite as exp(v*log(u))"
                )
            du = differentiate(u)
            if du.is_const(0.0):
                return ZERO
            return mul(mul(v, power(u, sub(v, ONE))), du)
    if isinstance(e, Func):
        u = e.arg
        du = differentiate(u)
        if du.is_const(0.0):
            return ZERO
        return mul(_outer_derivative(e.name, u), du)
    raise TypeError(type(e))


def _outer_derivative(name: str, u: Expr) -> Expr:
    two = Const(2.0)
    if name == "sin":
        return func("cos", u)
    if name == "cos":
        return neg(func("sin", u))
    if name == "tan":
        return div(ONE, power(func("cos", u), two))
    if name == "sinh":
        return func("cosh", u)
    if name == "cosh":
        return func("sinh", u)
    if name == "tanh":
        return sub(ONE, power(func("tanh", u), two))
    if name == "exp":
        return func("exp", u)
    if name == "log":
        return div(ONE, u)
    if name == "sqrt":
        return div(ONE, mul(two, func("sqrt", u)))
    if name == "abs":
        return func("sign", u)
    if name == "sign":
        return ZERO
    raise ValueError(name)


def wronskian(u, v) -> Expr:
    """``W(u, v) = u' v - u v'``."""
    u, v = as_expr(u), as_expr(v)
    return sub(mul(differentiate(u), v), mul(u, differentiate(v)))


def lambdify(e) -> Callable:
    """Vectorized callable for ``e`` (accepts numbers as constant functions)."""
    if isinstance(e, Expr):
        return lambda x: evaluate(e, x)
    if isinstance(e, (int, float)):
        c = float(e)
        return lambda x: c if np.ndim(x) == 0 else np.full(np.shape(x), c)
    if callable(e):
        return e
    raise TypeError(type(e))


def node_count(e: Expr) -> int:
    if isinstance(e, (Const, Var)):
        return 1
    if isinstance(e, (Neg, Func)):
        return 1 + node_count(e.arg)
    return 1 + node_count(e.left) + node_count(e.right)

