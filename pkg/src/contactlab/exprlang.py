"""The arithmetic mini-language for metric and contact-form coefficients.

Grammar (loosest to tightest binding):

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative, binds above '-'
    atom   := number | name | name '(' expr ')' | '(' expr ')'

so ``-x^2`` parses as ``-(x^2)`` and ``1/z^2`` as ``1/(z^2)``.

Evaluation is plain IEEE double arithmetic and accepts numpy arrays for the
variables, which is what makes grid sweeps and finite-difference stencils
cheap everywhere else in the package.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import j0 as _bessel_j0, j1 as _bessel_j1

from .errors import DomainError, ExprSyntaxError, UnboundVariable, UnknownFunction

__all__ = [
    "Expr", "Num", "Var", "Neg", "BinOp", "Call",
    "parse_expr", "eval_expr", "compile_expr", "to_string", "free_variables",
]


# --- AST -------------------------------------------------------------------

class Expr:
    """Base class for AST nodes; subclasses are frozen dataclasses."""


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * / ^
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr


# scipy's j0/j1 are the Cephes routines, good to ~1 ulp in double precision,
# comfortably inside the required 1e-12 absolute error on [0, 50]; the test
# suite pins them against an independent power-series oracle.
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "atan": np.arctan,
    "besselJ0": _bessel_j0,
    "besselJ1": _bessel_j1,
}


# --- tokenizer -------------------------------------------------------------

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def _tokenize(src: str):
    """Yield (kind, text, offset) triples; kind is 'num', 'name' or 'op'."""
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        m = _NUMBER.match(src, i)
        if m:
            tokens.append(("num", m.group(), i))
            i = m.end()
            continue
        m = _NAME.match(src, i)
        if m:
            tokens.append(("name", m.group(), i))
            i = m.end()
            continue
        if c in "+-*/^()":
            tokens.append(("op", c, i))
            i += 1
            continue
        raise ExprSyntaxError(i, f"unexpected character {c!r}")
    return tokens


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError(len(self.src), "unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok[1] != text:
            raise ExprSyntaxError(tok[2], f"expected {text!r}, found {tok[1]!r}")

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ExprSyntaxError(tok[2], f"unexpected trailing token {tok[1]!r}")
        return e

    def expr(self) -> Expr:
        lhs = self.term()
        while (tok := self.peek()) is not None and tok[1] in "+-":
            self.next()
            lhs = BinOp(tok[1], lhs, self.term())
        return lhs

    def term(self) -> Expr:
        lhs = self.unary()
        while (tok := self.peek()) is not None and tok[1] in "*/":
            self.next()
            lhs = BinOp(tok[1], lhs, self.unary())
        return lhs

    def unary(self) -> Expr:
        tok = self.peek()
        if tok is not None and tok[1] == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok is not None and tok[1] == "^":
            self.next()
            # right associative; the exponent may itself carry a unary minus
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.next()
        kind, text, offset = tok
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            nxt = self.peek()
            if nxt is not None and nxt[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {text!r} at offset {offset}")
                self.next()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            return Var(text)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(offset, f"unexpected token {text!r}")


def parse_expr(src: str) -> Expr:
    return _Parser(src).parse()


# --- evaluation ------------------------------------------------------------

def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"non-finite result from {what}")
    return value


def eval_expr(e: Expr, env: dict):
    """Evaluate ``e`` with the given variable bindings.

    Values in ``env`` may be floats or numpy arrays (broadcast together).
    Any non-finite intermediate (division by zero, ln of a non-positive
    number, sqrt of a negative, fractional power of a negative base) raises
    DomainError.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariable(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -eval_expr(e.arg, env)
    if isinstance(e, BinOp):
        a = eval_expr(e.lhs, env)
        b = eval_expr(e.rhs, env)
        with np.errstate(all="ignore"):
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return _check_finite(np.divide(a, b), "division")
            if e.op == "^":
                return _check_finite(np.power(a, b), "power")
        raise AssertionError(e.op)
    if isinstance(e, Call):
        arg = eval_expr(e.arg, env)
        with np.errstate(all="ignore"):
            return _check_finite(FUNCTIONS[e.fn](arg), e.fn)
    raise TypeError(f"not an Expr: {e!r}")


_CODE_FN = {
    "sin": "np.sin", "cos": "np.cos", "tan": "np.tan",
    "sinh": "np.sinh", "cosh": "np.cosh", "tanh": "np.tanh",
    "exp": "np.exp", "ln": "np.log", "sqrt": "np.sqrt",
    "abs": "np.abs", "atan": "np.arctan",
    "besselJ0": "_j0", "besselJ1": "_j1",
}


def _code(e: Expr) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_code(e.arg)})"
    if isinstance(e, BinOp):
        op = "**" if e.op == "^" else e.op
        return f"({_code(e.lhs)}{op}{_code(e.rhs)})"
    if isinstance(e, Call):
        return f"{_CODE_FN[e.fn]}({_code(e.arg)})"
    raise TypeError(f"not an Expr: {e!r}")


def compile_expr(e: Expr, coords, constants):
    """Fast evaluator f(x, y, z) for fixed coordinate names and constant
    bindings; identical values to eval_expr, but the domain check happens
    once on the final result rather than per operation."""
    reserved = {"np", "_j0", "_j1"}
    if reserved & (set(coords) | set(constants)):
        def raw(*args, _e=e):
            env = dict(constants)
            env.update(zip(coords, args))
            return eval_expr(_e, env)
    else:
        names = ", ".join(coords)
        ns = {"np": np, "_j0": _bessel_j0, "_j1": _bessel_j1, **constants}
        raw = eval(f"lambda {names}: {_code(e)}", ns)  # noqa: S307 - own AST

    def fn(*args):
        # np.float64 arguments keep scalar division-by-zero on the IEEE
        # inf path instead of raising ZeroDivisionError
        args = [np.asarray(a, dtype=float) for a in args]
        try:
            with np.errstate(all="ignore"):
                value = raw(*args)
        except ZeroDivisionError:
            raise DomainError("non-finite result from expression") from None
        return _check_finite(value, "expression")

    return fn


def free_variables(e: Expr) -> set:
    if isinstance(e, Num):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_variables(e.arg)
    if isinstance(e, BinOp):
        return free_variables(e.lhs) | free_variables(e.rhs)
    if isinstance(e, Call):
        return free_variables(e.arg)
    raise TypeError(f"not an Expr: {e!r}")


# --- pretty printer --------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _print(e: Expr, parent_prec: int, rhs_of=None) -> str:
    if isinstance(e, Num):
        v = e.value
        if v == math.floor(v) and abs(v) < 1e16:
            s = repr(int(v))
        else:
            s = repr(v)
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({_print(e.arg, 0)})"
    if isinstance(e, Neg):
        inner = _print(e.arg, _PREC["neg"])
        s = f"-{inner}"
        if parent_prec > _PREC["neg"] or (parent_prec == _PREC["neg"] and rhs_of in ("*", "/")):
            # a * -b would re-tokenize but prints poorly; parenthesize
            return f"({s})"
        return s
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        if e.op == "^":
            # right associative: exponent reparses at unary level
            lhs = _print(e.lhs, prec + 1)
            rhs = _print(e.rhs, _PREC["neg"])
        else:
            lhs = _print(e.lhs, prec)
            rhs = _print(e.rhs, prec + 1, rhs_of=e.op)
        s = f"{lhs} {e.op} {rhs}" if e.op in "+-" else f"{lhs}{e.op}{rhs}"
        if prec < parent_prec:
            return f"({s})"
        return s
    raise TypeError(f"not an Expr: {e!r}")


def to_string(e: Expr) -> str:
    """Render ``e`` so that parse_expr(to_string(e)) == e."""
    return _print(e, 0)
