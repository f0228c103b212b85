"""Arithmetic expressions over chart coordinates with exact differentiation.

Grammar (``^`` binds tightest and is right associative, unary minus sits
between ``^`` and ``* /``)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | xK | FUNC '(' expr ')' | '(' expr ')'

Coordinates are written ``x1 ... xn`` in source text; the AST stores the
0-based axis.  All evaluation is double precision.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "CoordinateRangeError",
    "DomainError",
    "parse",
    "evaluate",
    "differentiate",
    "fold_literals",
    "to_source",
    "is_constant",
    "num",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "max_coordinate",
]


class ExprError(ValueError):
    """Raised for any malformed expression source."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class CoordinateRangeError(ExprError):
    pass


class DomainError(ArithmeticError):
    """Evaluation left the real domain of an operation."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based axis


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")

# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


class _Parser:
    def __init__(self, source: str, n: int):
        self.n = n
        self.tokens: list[tuple[str, str, int]] = []
        # byte offsets, so multi-byte characters before an error are counted
        pos = 0
        while pos < len(source):
            m = _TOKEN_RE.match(source, pos)
            if m is None:
                raise ExprSyntaxError(
                    f"unexpected character {source[pos]!r}", _byte_offset(source, pos)
                )
            kind = m.lastgroup
            if kind != "ws":
                self.tokens.append((kind, m.group(), _byte_offset(source, pos)))
            pos = m.end()
        self.tokens.append(("eof", "", len(source.encode("utf-8"))))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        kind, val, off = self.take()
        if val != text or kind != "op":
            what = "end of input" if kind == "eof" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "eof":
            raise ExprSyntaxError(f"unexpected token {val!r}", off)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            arg = self.unary()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            m = re.fullmatch(r"x(\d+)", val)
            if m is None:
                raise UnknownIdentifierError(f"unknown identifier {val!r}", off)
            k = int(m.group(1))
            if not 1 <= k <= self.n:
                raise CoordinateRangeError(
                    f"coordinate {val} out of range for dimension {self.n}", off
                )
            return Var(k - 1)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "eof" else repr(val)
        raise ExprSyntaxError(f"expected an operand, found {what}", off)


def _byte_offset(source: str, pos: int) -> int:
    return len(source[:pos].encode("utf-8"))


def parse(source: str, n: int) -> Expr:
    """Parse ``source`` into an expression over coordinates ``x1..xn``."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    return _Parser(source, n).parse()


# ---------------------------------------------------------------------------
# evaluation


def _log(x: float) -> float:
    if x <= 0.0:
        raise DomainError(f"log of non-positive argument {x!r}")
    return math.log(x)


def _sqrt(x: float) -> float:
    if x < 0.0:
        raise DomainError(f"sqrt of negative argument {x!r}")
    return math.sqrt(x)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError as exc:
        raise DomainError(f"exp overflow at {x!r}") from exc


_FUNC_IMPL: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
    "tanh": math.tanh,
}


def _pow(a: float, b: float) -> float:
    if a == 0.0 and b < 0.0:
        raise DomainError("zero raised to a negative power")
    if a < 0.0 and not float(b).is_integer():
        raise DomainError(f"negative base {a!r} with non-integer exponent {b!r}")
    try:
        return math.pow(a, b)
    except OverflowError as exc:
        raise DomainError(f"overflow in {a!r}^{b!r}") from exc


def evaluate(e: Expr, p: Sequence[float]) -> float:
    """Evaluate ``e`` at the point ``p`` (indexed by 0-based axis)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(p[e.index])
    if isinstance(e, Neg):
        return -evaluate(e.arg, p)
    if isinstance(e, BinOp):
        a = evaluate(e.left, p)
        b = evaluate(e.right, p)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                raise DomainError("division by zero")
            return a / b
        return _pow(a, b)
    if isinstance(e, Call):
        return _FUNC_IMPL[e.func](evaluate(e.arg, p))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# constructors with constant folding


def is_constant(e: Expr) -> bool:
    return isinstance(e, Num)


def num(v: float) -> Num:
    return Num(float(v))


def _fold(e: Expr) -> Expr:
    try:
        return Num(evaluate(e, ()))
    except DomainError:
        return e


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if isinstance(a, Num) and a.value == 0.0:
        return b
    if isinstance(b, Num) and b.value == 0.0:
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if isinstance(b, Num) and b.value == 0.0:
        return a
    if isinstance(a, Num) and a.value == 0.0:
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    for x, y in ((a, b), (b, a)):
        if isinstance(x, Num):
            if x.value == 0.0:
                return Num(0.0)
            if x.value == 1.0:
                return y
            if x.value == -1.0:
                return neg(y)
    # keep the literal factor on the left
    if isinstance(b, Num):
        a, b = b, a
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    if isinstance(a, Num) and a.value == 0.0:
        return Num(0.0)
    if isinstance(b, Num) and b.value == 1.0:
        return a
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Num):
        if b.value == 1.0:
            return a
        if b.value == 0.0:
            return Num(1.0)
        if isinstance(a, Num):
            return _fold(BinOp("^", a, b))
    return BinOp("^", a, b)


def _call(func: str, a: Expr) -> Expr:
    e = Call(func, a)
    return _fold(e) if isinstance(a, Num) else e


# ---------------------------------------------------------------------------
# differentiation


def fold_literals(e: Expr) -> Expr:
    """Replace every coordinate-free subtree by its value (where it evaluates)."""
    if isinstance(e, (Num, Var)):
        return e
    if max_coordinate(e) < 0:
        return _fold(e)
    if isinstance(e, Neg):
        return Neg(fold_literals(e.arg))
    if isinstance(e, BinOp):
        return BinOp(e.op, fold_literals(e.left), fold_literals(e.right))
    return Call(e.func, fold_literals(e.arg))


def differentiate(e: Expr, i: int) -> Expr:
    """Exact partial derivative of ``e`` along 0-based axis ``i``."""
    return _diff(fold_literals(e), i)


def _diff(e: Expr, i: int) -> Expr:
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.index == i else 0.0)
    if isinstance(e, Neg):
        return neg(_diff(e.arg, i))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        du, dv = _diff(u, i), _diff(v, i)
        if e.op == "+":
            return add(du, dv)
        if e.op == "-":
            return sub(du, dv)
        if e.op == "*":
            return add(mul(du, v), mul(u, dv))
        if e.op == "/":
            return div(sub(mul(du, v), mul(u, dv)), power(v, Num(2.0)))
        # u ^ v
        if isinstance(v, Num):
            return mul(mul(v, power(u, Num(v.value - 1.0))), du)
        # d(u^v) = u^v (v' log u + v u'/u)
        return mul(e, add(mul(dv, _call("log", u)), div(mul(v, du), u)))
    if isinstance(e, Call):
        u = e.arg
        du = _diff(u, i)
        if isinstance(du, Num) and du.value == 0.0:
            return Num(0.0)
        f = e.func
        if f == "sin":
            outer = _call("cos", u)
        elif f == "cos":
            outer = neg(_call("sin", u))
        elif f == "exp":
            outer = e
        elif f == "log":
            return div(du, u)
        elif f == "sqrt":
            return div(du, mul(Num(2.0), e))
        else:  # tanh
            outer = sub(Num(1.0), power(e, Num(2.0)))
        return mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# printing


def _fmt_num(v: float) -> str:
    s = repr(float(v))
    return f"({s})" if v < 0 or s.startswith("-") else s


def to_source(e: Expr) -> str:
    """Fully parenthesised source text; ``parse(to_source(e), n) == e``."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def max_coordinate(e: Expr) -> int:
    """Largest 0-based axis referenced by ``e`` (-1 when none)."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Neg | Call):
        return max_coordinate(e.arg)
    if isinstance(e, BinOp):
        return max(max_coordinate(e.left), max_coordinate(e.right))
    return -1
