"""Small closed expression language used for charts, metrics, and maps.

Grammar (whitespace-insensitive)::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' exponent)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Exponents are integer literals (optionally signed, right-associative chains
of integer literals are folded at parse time, so ``x^2^3 == x^8``).  The
function set is closed: sin, cos, tan, exp, log, sqrt, sinh, cosh.
Variables are arbitrary identifiers; the conventional dialect elsewhere in
the package is t1..tp, x1..xn and jet variables x{i}_{a} such as ``x2_1``.

Evaluation accepts float or numpy-array bindings and is exact about domain
errors (division by zero, log of a nonpositive value, sqrt of a negative
value, 0 raised to a negative power).  Differentiation and substitution are
symbolic and apply only conservative simplifications (constant folding,
0*e -> 0, 1*e -> e, e+0 -> e and the like), so results stay exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

import numpy as np

Value = Union[float, np.ndarray]

__all__ = [
    "Expr", "Num", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "ExprError", "parse", "to_str", "evaluate", "diff", "subst", "free_vars",
    "num", "var", "neg", "add", "sub", "mul", "div", "pow_", "call",
    "FUNCTIONS",
]

MAX_EXPONENT = 1000


class ExprError(ValueError):
    """Parse, evaluation, or domain error; ``offset`` is set for parse errors."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


def _any(mask) -> bool:
    return bool(mask.any()) if isinstance(mask, np.ndarray) else bool(mask)


class Expr:
    """Base class for expression nodes.  Nodes are immutable and comparable."""

    def eval(self, env: Mapping[str, Value]) -> Value:
        raise NotImplementedError

    def diff(self, name: str) -> "Expr":
        raise NotImplementedError

    def subst(self, mapping: Mapping[str, "Expr"]) -> "Expr":
        raise NotImplementedError

    def _collect_vars(self, acc: set[str]) -> None:
        raise NotImplementedError

    def _fmt(self) -> str:
        raise NotImplementedError

    # precedence level used by the printer; atoms are 5
    _LEVEL = 5

    def __str__(self) -> str:
        return self._fmt()


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def eval(self, env):
        return self.value

    def diff(self, name):
        return Num(0.0)

    def subst(self, mapping):
        return self

    def _collect_vars(self, acc):
        pass

    def _fmt(self):
        if self.value < 0:
            return "-" + repr(-self.value)
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise ExprError(f"unbound variable '{self.name}'") from None

    def diff(self, name):
        return Num(1.0 if self.name == name else 0.0)

    def subst(self, mapping):
        return mapping.get(self.name, self)

    def _collect_vars(self, acc):
        acc.add(self.name)

    def _fmt(self):
        return self.name


def _child(e: Expr, min_level: int) -> str:
    s = e._fmt()
    level = e._LEVEL
    if s.startswith("-"):
        # a negative literal binds like a unary minus when re-parsed
        level = min(level, 3)
    return "(" + s + ")" if level < min_level else s


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr
    _LEVEL = 3

    def eval(self, env):
        return -self.a.eval(env)

    def diff(self, name):
        return neg(self.a.diff(name))

    def subst(self, mapping):
        return neg(self.a.subst(mapping))

    def _collect_vars(self, acc):
        self.a._collect_vars(acc)

    def _fmt(self):
        return "-" + _child(self.a, 3)


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr
    _LEVEL = 1

    def eval(self, env):
        return self.a.eval(env) + self.b.eval(env)

    def diff(self, name):
        return add(self.a.diff(name), self.b.diff(name))

    def subst(self, mapping):
        return add(self.a.subst(mapping), self.b.subst(mapping))

    def _collect_vars(self, acc):
        self.a._collect_vars(acc)
        self.b._collect_vars(acc)

    def _fmt(self):
        return _child(self.a, 1) + " + " + _child(self.b, 2)


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr
    _LEVEL = 1

    def eval(self, env):
        return self.a.eval(env) - self.b.eval(env)

    def diff(self, name):
        return sub(self.a.diff(name), self.b.diff(name))

    def subst(self, mapping):
        return sub(self.a.subst(mapping), self.b.subst(mapping))

    def _collect_vars(self, acc):
        self.a._collect_vars(acc)
        self.b._collect_vars(acc)

    def _fmt(self):
        return _child(self.a, 1) + " - " + _child(self.b, 2)


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr
    _LEVEL = 2

    def eval(self, env):
        return self.a.eval(env) * self.b.eval(env)

    def diff(self, name):
        return add(mul(self.a.diff(name), self.b), mul(self.a, self.b.diff(name)))

    def subst(self, mapping):
        return mul(self.a.subst(mapping), self.b.subst(mapping))

    def _collect_vars(self, acc):
        self.a._collect_vars(acc)
        self.b._collect_vars(acc)

    def _fmt(self):
        return _child(self.a, 2) + "*" + _child(self.b, 3)


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr
    _LEVEL = 2

    def eval(self, env):
        den = self.b.eval(env)
        if _any(den == 0):
            raise ExprError("domain error: division by zero")
        return self.a.eval(env) / den

    def diff(self, name):
        # (a/b)' = a'/b - a*b'/b^2
        da, db = self.a.diff(name), self.b.diff(name)
        return sub(div(da, self.b), div(mul(self.a, db), pow_(self.b, 2)))

    def subst(self, mapping):
        return div(self.a.subst(mapping), self.b.subst(mapping))

    def _collect_vars(self, acc):
        self.a._collect_vars(acc)
        self.b._collect_vars(acc)

    def _fmt(self):
        return _child(self.a, 2) + "/" + _child(self.b, 3)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int
    _LEVEL = 4

    def eval(self, env):
        b = self.base.eval(env)
        if self.exponent < 0 and _any(b == 0):
            raise ExprError("domain error: 0 raised to a negative power")
        if isinstance(b, np.ndarray):
            return np.power(b, self.exponent)
        return b ** self.exponent

    def diff(self, name):
        k = self.exponent
        if k == 0:
            return Num(0.0)
        return mul(mul(Num(float(k)), pow_(self.base, k - 1)), self.base.diff(name))

    def subst(self, mapping):
        return pow_(self.base.subst(mapping), self.exponent)

    def _collect_vars(self, acc):
        self.base._collect_vars(acc)

    def _fmt(self):
        return _child(self.base, 5) + "^" + str(self.exponent)


def _check_log(x):
    if _any(x <= 0):
        raise ExprError("domain error: log of a nonpositive value")
    return x


def _check_sqrt(x):
    if _any(x < 0):
        raise ExprError("domain error: sqrt of a negative value")
    return x


# name -> (scalar fn, array fn, domain guard or None)
FUNCTIONS: dict[str, tuple[Callable, Callable, Callable | None]] = {
    "sin": (math.sin, np.sin, None),
    "cos": (math.cos, np.cos, None),
    "tan": (math.tan, np.tan, None),
    "exp": (math.exp, np.exp, None),
    "log": (math.log, np.log, _check_log),
    "sqrt": (math.sqrt, np.sqrt, _check_sqrt),
    "sinh": (math.sinh, np.sinh, None),
    "cosh": (math.cosh, np.cosh, None),
}


def _fn_derivative(name: str, u: Expr) -> Expr:
    if name == "sin":
        return call("cos", u)
    if name == "cos":
        return neg(call("sin", u))
    if name == "tan":
        return div(Num(1.0), pow_(call("cos", u), 2))
    if name == "exp":
        return call("exp", u)
    if name == "log":
        return div(Num(1.0), u)
    if name == "sqrt":
        return div(Num(1.0), mul(Num(2.0), call("sqrt", u)))
    if name == "sinh":
        return call("cosh", u)
    if name == "cosh":
        return call("sinh", u)
    raise ExprError(f"unknown function '{name}'")


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr

    def eval(self, env):
        x = self.arg.eval(env)
        scalar_fn, array_fn, guard = FUNCTIONS[self.fn]
        if guard is not None:
            guard(x)
        if isinstance(x, np.ndarray):
            return array_fn(x)
        return scalar_fn(x)

    def diff(self, name):
        return mul(_fn_derivative(self.fn, self.arg), self.arg.diff(name))

    def subst(self, mapping):
        return call(self.fn, self.arg.subst(mapping))

    def _collect_vars(self, acc):
        self.arg._collect_vars(acc)

    def _fmt(self):
        return self.fn + "(" + self.arg._fmt() + ")"


# ---------------------------------------------------------------------------
# smart constructors: conservative simplification for derivative/substituted
# trees.  parse() builds raw nodes and never simplifies.

def num(v: float) -> Num:
    return Num(float(v))


def var(name: str) -> Var:
    return Var(name)


def _is_const(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Num(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return Num(a.value / b.value)
    return Div(a, b)


def pow_(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return Num(1.0)
    if exponent == 1:
        return base
    if isinstance(base, Num):
        try:
            return Num(float(base.value ** exponent))
        except (OverflowError, ZeroDivisionError):
            pass
    return Pow(base, exponent)


def call(fn: str, arg: Expr) -> Expr:
    if fn not in FUNCTIONS:
        raise ExprError(f"unknown function '{fn}'")
    if isinstance(arg, Num):
        scalar_fn, _, guard = FUNCTIONS[fn]
        try:
            if guard is not None:
                guard(arg.value)
            return Num(scalar_fn(arg.value))
        except (ExprError, ValueError, OverflowError):
            pass
    return Call(fn, arg)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            off = len(text) - len(stripped)
            raise ExprError(f"unexpected character '{text[off]}' at offset {off}", off)
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
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, offset: int | None = None):
        off = self.peek()[2] if offset is None else offset
        raise ExprError(f"{message} at offset {off}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            self.fail(f"unexpected token '{text}'")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.advance()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.advance()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            operand = self.unary()
            # fold a negated literal so printed negative numbers round-trip
            if isinstance(operand, Num):
                return Num(-operand.value)
            return Neg(operand)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            k = self.exponent()
            if abs(k) > MAX_EXPONENT:
                self.fail("exponent too large")
            return Pow(base, k)
        return base

    def exponent(self) -> int:
        """Right-associative chain of optionally signed integer literals."""
        sign = 1
        while self.peek()[:2] == ("op", "-"):
            self.advance()
            sign = -sign
        kind, text, off = self.peek()
        if kind != "num" or ("." in text or "e" in text or "E" in text):
            self.fail("exponent must be an integer literal")
        self.advance()
        value = int(text)
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            k = self.exponent()
            if k < 0:
                self.fail("exponent must be an integer literal", off)
            if k > 64 or value ** k > 10 ** 300:
                self.fail("exponent too large", off)
            value = value ** k
        return sign * value

    def atom(self) -> Expr:
        kind, text, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "name":
            self.advance()
            if self.peek()[:2] == ("op", "("):
                if text not in FUNCTIONS:
                    raise ExprError(f"unknown function '{text}' at offset {off}", off)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            return Var(text)
        if (kind, text) == ("op", "("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.fail("expected operand")

    def expect(self, op: str):
        kind, text, off = self.peek()
        if (kind, text) == ("op", op):
            self.advance()
            return
        self.fail(f"expected '{op}'")


def parse(text: str) -> Expr:
    """Parse source text to an AST.  Raises ExprError with a byte offset."""
    return _Parser(text).parse()


def to_str(e: Expr) -> str:
    """Render an AST back to source; parse(to_str(e)) == e."""
    return str(e)


def evaluate(e: Expr, env: Mapping[str, Value]) -> Value:
    return e.eval(env)


def diff(e: Expr, name: str) -> Expr:
    """Exact symbolic partial derivative with conservative simplification."""
    return e.diff(name)


def subst(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Substitute expressions for variables (used to compose chart changes)."""
    return e.subst(mapping)


def free_vars(e: Expr) -> set[str]:
    acc: set[str] = set()
    e._collect_vars(acc)
    return acc


def parse_all(texts: Iterable[str]) -> list[Expr]:
    return [parse(t) for t in texts]
