"""A small expression language for smooth real functions.

Grammar (lowest to highest precedence)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" ["-"] INT)?
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

A minus sign written directly in front of a number literal folds into a
negative literal.  Exponents are integers and ``^`` does not chain.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping

from .errors import ExprSyntaxError, MissingVariable, NonFiniteResult, UnknownFunction


class Expr:
    def __str__(self):
        return to_str(self)

    def __repr__(self):
        return f"Expr({to_str(self)!r})"


@dataclass(frozen=True, repr=False)
class Num(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True, repr=False)
class Call(Expr):
    fn: str
    arg: Expr


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": _safe_exp,
    "tanh": math.tanh,
}

# -- lexer / parser ---------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            if m.group() == "\n":
                line, line_start = line + 1, m.end()
        else:
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ExprSyntaxError(msg, tok.line, tok.col)

    def take(self, text: str | None = None, kind: str | None = None) -> _Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(t.text) if t.kind != "end" else "end of input"
            self.error(f"expected {want}, got {got}")
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.take().text
            r = self.term()
            e = Add(e, r) if op == "+" else Sub(e, r)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.take().text
            r = self.unary()
            e = Mul(e, r) if op == "*" else Div(e, r)
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            self.take()
            literal = self.tok.kind == "num"
            arg = self.unary()
            if literal and isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            self.take()
            sign = 1
            if self.at("-"):
                self.take()
                sign = -1
            t = self.tok
            if t.kind != "num" or not re.fullmatch(r"\d+", t.text):
                self.error("exponent must be an integer literal")
            self.take()
            if self.at("^"):
                self.error("chained '^' is ambiguous; use parentheses")
            return Pow(base, sign * int(t.text))
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Num(float(t.text))
        if t.kind == "name":
            self.take()
            if self.at("("):
                if t.text not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {t.text!r}", t.line, t.col)
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Call(t.text, arg)
            return Var(t.text)
        if self.at("("):
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        got = repr(t.text) if t.kind != "end" else "end of input"
        self.error(f"expected a number, name or '(', got {got}")


def parse(text: str) -> Expr:
    return _Parser(text).parse()


# -- printing ---------------------------------------------------------------

def _level(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Neg) or (isinstance(e, Num) and (e.value < 0 or str(e.value).startswith("-"))):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def _num_str(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v)) if v != 0 or math.copysign(1, v) > 0 else "-0"
    return repr(v)


def to_str(e: Expr) -> str:
    if isinstance(e, Num):
        return _num_str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({to_str(e.arg)})"
    if isinstance(e, Neg):
        inner = to_str(e.arg)
        # a bare literal after "-" would fold into a negative number
        wrap = _level(e.arg) < 3 or isinstance(e.arg, Num)
        return "-" + (f"({inner})" if wrap else inner)
    if isinstance(e, Pow):
        base = to_str(e.base)
        if _level(e.base) <= 4:
            base = f"({base})"
        return f"{base}^{e.exp}"
    ops = {Add: "+", Sub: "-", Mul: "*", Div: "/"}
    lvl = _level(e)
    left, right = to_str(e.left), to_str(e.right)
    if _level(e.left) < lvl:
        left = f"({left})"
    if _level(e.right) <= lvl:
        right = f"({right})"
    return f"{left} {ops[type(e)]} {right}"


# -- evaluation -------------------------------------------------------------

def _div(a: float, b: float) -> float:
    if b == 0:
        if a == 0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _pow(a: float, n: int) -> float:
    try:
        return a ** n
    except ZeroDivisionError:
        return math.inf if n % 2 == 0 or math.copysign(1.0, a) > 0 else -math.inf
    except OverflowError:
        return math.inf if a > 0 or n % 2 == 0 else -math.inf


def evaluate(e: Expr, env: Mapping[str, float], strict: bool = False) -> float:
    """IEEE evaluation; with ``strict`` a non-finite result raises."""
    v = _eval(e, env)
    if strict and not math.isfinite(v):
        raise NonFiniteResult(f"{to_str(e)} evaluates to {v}")
    return v


def _eval(e: Expr, env: Mapping[str, float]) -> float:
    t = type(e)
    if t is Num:
        return e.value
    if t is Var:
        try:
            return float(env[e.name])
        except KeyError:
            raise MissingVariable(e.name) from None
    if t is Add:
        return _eval(e.left, env) + _eval(e.right, env)
    if t is Sub:
        return _eval(e.left, env) - _eval(e.right, env)
    if t is Mul:
        return _eval(e.left, env) * _eval(e.right, env)
    if t is Div:
        return _div(_eval(e.left, env), _eval(e.right, env))
    if t is Neg:
        return -_eval(e.arg, env)
    if t is Pow:
        return _pow(_eval(e.base, env), e.exp)
    if t is Call:
        x = _eval(e.arg, env)
        try:
            return FUNCTIONS[e.fn](x)
        except ValueError:
            return math.nan
    raise TypeError(f"not an expression: {e!r}")


# -- structure --------------------------------------------------------------

def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, (Neg, Call)):
        return (e.arg,)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    out: set[str] = set()
    for c in children(e):
        out |= variables(c)
    return out


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneous replacement of variables; no simplification is done."""
    t = type(e)
    if t is Var:
        return mapping.get(e.name, e)
    if t is Num:
        return e
    if t in (Add, Sub, Mul, Div):
        return t(substitute(e.left, mapping), substitute(e.right, mapping))
    if t is Neg:
        return Neg(substitute(e.arg, mapping))
    if t is Pow:
        return Pow(substitute(e.base, mapping), e.exp)
    if t is Call:
        return Call(e.fn, substitute(e.arg, mapping))
    raise TypeError(f"not an expression: {e!r}")


def rename(e: Expr, names: Mapping[str, str]) -> Expr:
    return substitute(e, {a: Var(b) for a, b in names.items()})


# -- simplifying constructors -------------------------------------------------

def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def _fold(value: float, fallback: Expr) -> Expr:
    return Num(value) if math.isfinite(value) else fallback


def add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold(a.value + b.value, Add(a, b))
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold(a.value - b.value, Sub(a, b))
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0) or _is(b, 0):
        return Num(0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _fold(a.value * b.value, Mul(a, b))
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is(b, 1):
        return a
    if _is(a, 0) and not _is(b, 0):
        return Num(0)
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return _fold(a.value / b.value, Div(a, b))
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value) if a.value != 0 else Num(0)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return Num(1)
    if n == 1:
        return a
    if isinstance(a, Num):
        return _fold(_pow(a.value, n), Pow(a, n))
    return Pow(a, n)


def call(fn: str, a: Expr) -> Expr:
    return Call(fn, a)


def diff(e: Expr, v: str) -> Expr:
    """Symbolic derivative with 0/1 and constant folding."""
    t = type(e)
    if t is Num:
        return Num(0)
    if t is Var:
        return Num(1 if e.name == v else 0)
    if t is Neg:
        return neg(diff(e.arg, v))
    if t is Add:
        return add(diff(e.left, v), diff(e.right, v))
    if t is Sub:
        return sub(diff(e.left, v), diff(e.right, v))
    if t is Mul:
        return add(mul(diff(e.left, v), e.right), mul(e.left, diff(e.right, v)))
    if t is Div:
        da, db = diff(e.left, v), diff(e.right, v)
        if _is(db, 0):
            return div(da, e.right)
        return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, 2))
    if t is Pow:
        if e.exp == 0:
            return Num(0)
        return mul(mul(Num(e.exp), power(e.base, e.exp - 1)), diff(e.base, v))
    if t is Call:
        da = diff(e.arg, v)
        if _is(da, 0):
            return Num(0)
        if e.fn == "sin":
            outer = call("cos", e.arg)
        elif e.fn == "cos":
            outer = neg(call("sin", e.arg))
        elif e.fn == "exp":
            outer = call("exp", e.arg)
        elif e.fn == "tanh":
            outer = sub(Num(1), power(call("tanh", e.arg), 2))
        else:
            raise UnknownFunction(f"no derivative known for {e.fn!r}")
        return mul(outer, da)
    raise TypeError(f"not an expression: {e!r}")


def simplify(e: Expr) -> Expr:
    """Bottom-up 0/1 and constant folding."""
    t = type(e)
    if t in (Num, Var):
        return e
    if t is Add:
        return add(simplify(e.left), simplify(e.right))
    if t is Sub:
        return sub(simplify(e.left), simplify(e.right))
    if t is Mul:
        return mul(simplify(e.left), simplify(e.right))
    if t is Div:
        return div(simplify(e.left), simplify(e.right))
    if t is Neg:
        return neg(simplify(e.arg))
    if t is Pow:
        return power(simplify(e.base), e.exp)
    if t is Call:
        return Call(e.fn, simplify(e.arg))
    raise TypeError(f"not an expression: {e!r}")


def degree(e: Expr, names: set[str]) -> float:
    """Polynomial degree in ``names``; ``inf`` if not polynomial in them."""
    t = type(e)
    if t is Num:
        return 0
    if t is Var:
        return 1 if e.name in names else 0
    if t in (Add, Sub):
        return max(degree(e.left, names), degree(e.right, names))
    if t is Mul:
        return degree(e.left, names) + degree(e.right, names)
    if t is Div:
        return degree(e.left, names) if degree(e.right, names) == 0 else math.inf
    if t is Neg:
        return degree(e.arg, names)
    if t is Pow:
        d = degree(e.base, names)
        if d == 0:
            return 0
        return d * e.exp if e.exp >= 0 else math.inf
    if t is Call:
        return 0 if degree(e.arg, names) == 0 else math.inf
    raise TypeError(f"not an expression: {e!r}")


def is_affine_in(e: Expr, names) -> bool:
    return degree(e, set(names)) <= 1


def compile_expr(e: Expr, names: tuple[str, ...]) -> Callable[..., float]:
    """A closure ``f(*values)`` performing exactly the arithmetic of :func:`evaluate`."""
    index = {n: i for i, n in enumerate(names)}
    missing = variables(e) - set(index)
    if missing:
        raise MissingVariable(sorted(missing)[0])

    def build(e):
        t = type(e)
        if t is Num:
            v = e.value
            return lambda x: v
        if t is Var:
            i = index[e.name]
            return lambda x: float(x[i])
        if t is Add:
            a, b = build(e.left), build(e.right)
            return lambda x: a(x) + b(x)
        if t is Sub:
            a, b = build(e.left), build(e.right)
            return lambda x: a(x) - b(x)
        if t is Mul:
            a, b = build(e.left), build(e.right)
            return lambda x: a(x) * b(x)
        if t is Div:
            a, b = build(e.left), build(e.right)
            return lambda x: _div(a(x), b(x))
        if t is Neg:
            a = build(e.arg)
            return lambda x: -a(x)
        if t is Pow:
            a, n = build(e.base), e.exp
            return lambda x: _pow(a(x), n)
        if t is Call:
            a, fn = build(e.arg), FUNCTIONS[e.fn]

            def f(x):
                try:
                    return fn(a(x))
                except ValueError:
                    return math.nan
            return f
        raise TypeError(f"not an expression: {e!r}")

    return build(e)


def affine_form(e: Expr, names) -> tuple[Expr, list[Expr]]:
    """``(constant, [coefficient per name])`` of an expression affine in ``names``."""
    names = list(names)
    if not is_affine_in(e, names):
        raise ValueError(f"{to_str(e)} is not affine in {names}")
    coefs = [simplify(diff(e, v)) for v in names]
    const = simplify(substitute(e, {v: Num(0) for v in names}))
    return const, coefs


def affine_equal(e1: Expr, e2: Expr, names) -> bool:
    """Symbolic equality of two expressions affine in ``names`` with numeric coefficients."""
    return affine_form(e1, names) == affine_form(e2, names)
