"""Parse, evaluate and exactly differentiate analytic scalar expressions.

These expressions power metric components, warping functions and vector
fields.  Grammar (standard infix, whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-')* power
    power  := atom ['^' ['-'] INTEGER]
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Known functions: sin, cos, tan, exp, log, sqrt.  The name ``pi`` parses as
the constant.  Exponents are integer literals only; fractional powers must
be spelled via sqrt or exp/log.

Expression trees are immutable and safe to evaluate concurrently.
Evaluation accepts floats or numpy arrays in the variable bindings; an
EvalContext is any mapping from variable name to value.  Derivatives are
exact symbolic trees; correctness is defined by evaluation, no
canonical-form simplification is attempted (smart constructors only fold
constants to keep derivative trees small).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import EvalError, ExprSyntaxError

Number = Union[float, np.ndarray]
EvalContext = Mapping[str, Number]

_FUNCS = ("sin", "cos", "tan", "exp", "log", "sqrt")


class FieldExpr:
    """Base node of an expression tree."""

    __slots__ = ()

    def eval(self, ctx: EvalContext) -> Number:
        raise NotImplementedError

    def diff(self, var: str) -> "FieldExpr":
        raise NotImplementedError

    def free_vars(self) -> frozenset:
        raise NotImplementedError

    def __str__(self) -> str:
        return _to_str(self, 0)


@dataclass(frozen=True, slots=True)
class Const(FieldExpr):
    value: float

    def eval(self, ctx):
        return self.value

    def diff(self, var):
        return _ZERO

    def free_vars(self):
        return frozenset()


@dataclass(frozen=True, slots=True)
class Var(FieldExpr):
    name: str

    def eval(self, ctx):
        try:
            return ctx[self.name]
        except KeyError:
            raise EvalError(
                f"unbound variable '{self.name}'; bound: {sorted(ctx)}"
            ) from None

    def diff(self, var):
        return _ONE if self.name == var else _ZERO

    def free_vars(self):
        return frozenset((self.name,))


@dataclass(frozen=True, slots=True)
class Add(FieldExpr):
    a: FieldExpr
    b: FieldExpr

    def eval(self, ctx):
        return self.a.eval(ctx) + self.b.eval(ctx)

    def diff(self, var):
        return add(self.a.diff(var), self.b.diff(var))

    def free_vars(self):
        return self.a.free_vars() | self.b.free_vars()


@dataclass(frozen=True, slots=True)
class Sub(FieldExpr):
    a: FieldExpr
    b: FieldExpr

    def eval(self, ctx):
        return self.a.eval(ctx) - self.b.eval(ctx)

    def diff(self, var):
        return sub(self.a.diff(var), self.b.diff(var))

    def free_vars(self):
        return self.a.free_vars() | self.b.free_vars()


@dataclass(frozen=True, slots=True)
class Mul(FieldExpr):
    a: FieldExpr
    b: FieldExpr

    def eval(self, ctx):
        return self.a.eval(ctx) * self.b.eval(ctx)

    def diff(self, var):
        return add(mul(self.a.diff(var), self.b), mul(self.a, self.b.diff(var)))

    def free_vars(self):
        return self.a.free_vars() | self.b.free_vars()


@dataclass(frozen=True, slots=True)
class Div(FieldExpr):
    a: FieldExpr
    b: FieldExpr

    def eval(self, ctx):
        # Division by zero follows IEEE semantics (inf/nan propagate).
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.divide(self.a.eval(ctx), self.b.eval(ctx))

    def diff(self, var):
        num = sub(mul(self.a.diff(var), self.b), mul(self.a, self.b.diff(var)))
        return div(num, mul(self.b, self.b))

    def free_vars(self):
        return self.a.free_vars() | self.b.free_vars()


@dataclass(frozen=True, slots=True)
class Neg(FieldExpr):
    a: FieldExpr

    def eval(self, ctx):
        return -self.a.eval(ctx)

    def diff(self, var):
        return neg(self.a.diff(var))

    def free_vars(self):
        return self.a.free_vars()


@dataclass(frozen=True, slots=True)
class Pow(FieldExpr):
    base: FieldExpr
    exponent: int

    def eval(self, ctx):
        b = self.base.eval(ctx)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.power(b, self.exponent)

    def diff(self, var):
        k = self.exponent
        return mul(
            mul(Const(float(k)), pow_int(self.base, k - 1)), self.base.diff(var)
        )

    def free_vars(self):
        return self.base.free_vars()


def _check_domain(name, arg, ctx, bad_mask):
    if not np.any(bad_mask):
        return
    idx = np.argmax(np.atleast_1d(bad_mask))
    where = {}
    for k, v in ctx.items():
        flat = np.atleast_1d(np.broadcast_to(v, np.shape(bad_mask))).ravel()
        where[k] = float(flat[idx]) if flat.size > idx else float(flat[0])
    val = float(np.atleast_1d(arg).ravel()[idx])
    raise EvalError(f"domain error: {name}({val!r}) at bindings {where}")


@dataclass(frozen=True, slots=True)
class Call(FieldExpr):
    fn: str
    arg: FieldExpr

    def eval(self, ctx):
        x = self.arg.eval(ctx)
        if self.fn == "sin":
            return np.sin(x)
        if self.fn == "cos":
            return np.cos(x)
        if self.fn == "tan":
            return np.tan(x)
        if self.fn == "exp":
            return np.exp(x)
        if self.fn == "log":
            _check_domain("log", x, ctx, np.asarray(x) <= 0.0)
            return np.log(x)
        if self.fn == "sqrt":
            _check_domain("sqrt", x, ctx, np.asarray(x) < 0.0)
            return np.sqrt(x)
        raise EvalError(f"unknown function '{self.fn}'")

    def diff(self, var):
        u, du = self.arg, self.arg.diff(var)
        if self.fn == "sin":
            return mul(Call("cos", u), du)
        if self.fn == "cos":
            return neg(mul(Call("sin", u), du))
        if self.fn == "tan":
            return mul(add(_ONE, pow_int(Call("tan", u), 2)), du)
        if self.fn == "exp":
            return mul(self, du)
        if self.fn == "log":
            return div(du, u)
        if self.fn == "sqrt":
            return div(du, mul(Const(2.0), self))
        raise EvalError(f"unknown function '{self.fn}'")

    def free_vars(self):
        return self.arg.free_vars()


_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_const(e, v=None):
    return isinstance(e, Const) and (v is None or e.value == v)


# Smart constructors: fold constants so symbolic derivatives stay compact.

def add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return Mul(a, b)


def div(a, b):
    if _is_const(a, 0.0):
        return _ZERO
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    return Div(a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def pow_int(base, k):
    if k == 0:
        return _ONE
    if k == 1:
        return base
    if _is_const(base):
        return Const(base.value ** k)
    return Pow(base, k)


# ---------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {text[bad_at]!r}", bad_at)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected '{op}'", off)
        return self.advance()

    def parse(self):
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off)
        return e

    def expr(self):
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                e = Add(e, rhs) if val == "+" else Sub(e, rhs)
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                rhs = self.unary()
                e = Mul(e, rhs) if val == "*" else Div(e, rhs)
            else:
                return e

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.advance()
            inner = self.unary()
            return inner if val == "+" else neg(inner)
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            sign = 1
            kind, val, off = self.peek()
            if kind == "op" and val == "-":
                sign = -1
                self.advance()
                kind, val, off = self.peek()
            if kind != "num" or any(c in val for c in ".eE"):
                raise ExprSyntaxError("exponent must be an integer literal", off)
            self.advance()
            return pow_int(base, sign * int(val))
        return base

    def atom(self):
        kind, val, off = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            nkind, nval, _ = self.peek()
            if nkind == "op" and nval == "(":
                if val not in _FUNCS:
                    raise ExprSyntaxError(f"unknown function '{val}'", off)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            if val == "pi":
                return Const(math.pi)
            return Var(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(
            "incomplete expression" if kind == "end" else f"unexpected token {val!r}",
            off,
        )


def parse_expr(text) -> FieldExpr:
    """Parse expression text into an immutable tree.

    Raises ExprSyntaxError with the byte offset on malformed input.
    """
    if isinstance(text, FieldExpr):
        return text
    if isinstance(text, (int, float)):
        return Const(float(text))
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


def eval_expr(expr: FieldExpr, ctx: EvalContext) -> Number:
    missing = expr.free_vars() - set(ctx)
    if missing:
        raise EvalError(f"unbound variables {sorted(missing)}; bound: {sorted(ctx)}")
    return expr.eval(ctx)


def differentiate(expr: FieldExpr, var: str) -> FieldExpr:
    """Exact symbolic partial derivative; zero for absent variables."""
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", var):
        raise EvalError(f"illegal variable name {var!r}")
    return expr.diff(var)


# Pretty printer; parse(str(e)) evaluates identically to e.

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _paren(s, need):
    return f"({s})" if need else s


def _to_str(e, parent_prec):
    if isinstance(e, Const):
        s = repr(e.value)
        return _paren(s, e.value < 0 and parent_prec > _PREC_ADD)
    if isinstance(e, Var):
        return e.name
    # Right children of +,-,*,/ print one level tighter so the reparsed
    # tree has the identical shape: float arithmetic is not associative,
    # and evaluation must round-trip bit-for-bit.
    if isinstance(e, Add):
        s = f"{_to_str(e.a, _PREC_ADD)} + {_to_str(e.b, _PREC_ADD + 1)}"
        return _paren(s, parent_prec > _PREC_ADD)
    if isinstance(e, Sub):
        s = f"{_to_str(e.a, _PREC_ADD)} - {_to_str(e.b, _PREC_ADD + 1)}"
        return _paren(s, parent_prec > _PREC_ADD)
    if isinstance(e, Mul):
        s = f"{_to_str(e.a, _PREC_MUL)}*{_to_str(e.b, _PREC_MUL + 1)}"
        return _paren(s, parent_prec > _PREC_MUL)
    if isinstance(e, Div):
        s = f"{_to_str(e.a, _PREC_MUL)}/{_to_str(e.b, _PREC_MUL + 1)}"
        return _paren(s, parent_prec > _PREC_MUL)
    if isinstance(e, Neg):
        s = f"-{_to_str(e.a, _PREC_UNARY)}"
        return _paren(s, parent_prec > _PREC_UNARY)
    if isinstance(e, Pow):
        s = f"{_to_str(e.base, _PREC_ATOM)}^{e.exponent}"
        return _paren(s, parent_prec > _PREC_POW)
    if isinstance(e, Call):
        return f"{e.fn}({_to_str(e.arg, 0)})"
    raise TypeError(f"not an expression node: {e!r}")
