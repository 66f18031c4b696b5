"""Immutable expression trees for right-hand sides.

Nodes are frozen dataclasses, so ``==`` is structural equality.  Arithmetic
operators build new nodes; the only rewriting performed at construction is
constant folding (both operands constant).

Evaluation goes through a small "library" object supplying the elementary
operations, which lets the same tree walk run on floats (:data:`FLOAT`) and on
truncated power series (``alphaode.jet.JET``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .errors import DomainError, MalformedExpression, UnboundParameter

UNARY_OPS = ("neg", "exp", "log", "sin", "cos", "tan", "tanh", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, other):
        return pow_(self, other)

    def __rpow__(self, other):
        return pow_(other, self)

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_prefix(self)


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, slots=True)
class X(Expr):
    """The independent variable."""


@dataclass(frozen=True, slots=True)
class Y(Expr):
    """State variable; ``index`` is 0-based (``Y(0)`` prints as ``y1``)."""

    index: int


@dataclass(frozen=True, slots=True)
class Param(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Unary(Expr):
    op: str
    arg: Expr


@dataclass(frozen=True, slots=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


x = X()


def ys(n: int) -> tuple[Y, ...]:
    return tuple(Y(i) for i in range(n))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedExpression(f"cannot use {value!r} as an expression")
    return Const(float(value))


def _fold_binary(op, a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        try:
            return Const(FLOAT.binary(op, a.value, b.value))
        except DomainError:
            pass
    return Binary(op, a, b)


def _fold_unary(op, a):
    if isinstance(a, Const):
        try:
            return Const(FLOAT.unary(op, a.value))
        except DomainError:
            pass
    return Unary(op, a)


def add(a, b) -> Expr:
    return _fold_binary("add", as_expr(a), as_expr(b))


def sub(a, b) -> Expr:
    return _fold_binary("sub", as_expr(a), as_expr(b))


def mul(a, b) -> Expr:
    return _fold_binary("mul", as_expr(a), as_expr(b))


def div(a, b) -> Expr:
    return _fold_binary("div", as_expr(a), as_expr(b))


def pow_(a, b) -> Expr:
    return _fold_binary("pow", as_expr(a), as_expr(b))


def neg(a) -> Expr:
    return _fold_unary("neg", as_expr(a))


def exp(a) -> Expr:
    return _fold_unary("exp", as_expr(a))


def log(a) -> Expr:
    return _fold_unary("log", as_expr(a))


def sin(a) -> Expr:
    return _fold_unary("sin", as_expr(a))


def cos(a) -> Expr:
    return _fold_unary("cos", as_expr(a))


def tan(a) -> Expr:
    return _fold_unary("tan", as_expr(a))


def tanh(a) -> Expr:
    return _fold_unary("tanh", as_expr(a))


def sqrt(a) -> Expr:
    return _fold_unary("sqrt", as_expr(a))


FUNCTIONS = {
    "neg": neg, "exp": exp, "log": log, "sin": sin, "cos": cos,
    "tan": tan, "tanh": tanh, "sqrt": sqrt,
    "add": add, "sub": sub, "mul": mul, "div": div, "pow": pow_,
}


# --------------------------------------------------------------------------
# structure queries


def walk(expr: Expr):
    """Yield every node once (shared subtrees are visited once)."""
    seen = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        if isinstance(node, Unary):
            stack.append(node.arg)
        elif isinstance(node, Binary):
            stack.append(node.right)
            stack.append(node.left)


def validate(expr) -> None:
    for node in walk(expr):
        if not isinstance(node, Expr):
            raise MalformedExpression(f"not an expression node: {node!r}")
        if isinstance(node, Unary) and node.op not in UNARY_OPS:
            raise MalformedExpression(f"unknown unary op {node.op!r}")
        if isinstance(node, Binary) and node.op not in BINARY_OPS:
            raise MalformedExpression(f"unknown binary op {node.op!r}")
        if isinstance(node, Y) and (not isinstance(node.index, int) or node.index < 0):
            raise MalformedExpression(f"bad state index {node.index!r}")
        if isinstance(node, Const) and not math.isfinite(node.value):
            raise MalformedExpression(f"non-finite constant {node.value!r}")


def state_indices(expr: Expr) -> set[int]:
    return {node.index for node in walk(expr) if isinstance(node, Y)}


def parameter_names(expr: Expr) -> set[str]:
    return {node.name for node in walk(expr) if isinstance(node, Param)}


def depends_on(expr: Expr, var: Expr) -> bool:
    return any(node == var for node in walk(expr) if isinstance(node, (X, Y, Param)))


def _is_static(expr: Expr) -> bool:
    """True when the value cannot vary with x or the state."""
    return not any(isinstance(node, (X, Y)) for node in walk(expr))


# --------------------------------------------------------------------------
# evaluation


def _ipow(a, n: int, one=1.0):
    """Integer power by repeated squaring; works for any base type with ``*``."""
    if n < 0:
        return FLOAT.div(one, _ipow(a, -n, one)) if isinstance(a, float) else one / _ipow(a, -n, one)
    if n == 0:
        return one
    result = None
    base = a
    while True:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if not n:
            return result
        base = base * base


MAX_SQUARING_EXPONENT = 1024


class FloatLib:
    """Elementary operations on Python floats with domain checking."""

    @staticmethod
    def unary(op, a):
        try:
            if op == "neg":
                return -a
            if op == "exp":
                return math.exp(a)
            if op == "log":
                if a <= 0.0:
                    raise DomainError(f"log of non-positive value {a!r}")
                return math.log(a)
            if op == "sin":
                return math.sin(a)
            if op == "cos":
                return math.cos(a)
            if op == "tan":
                return math.tan(a)
            if op == "tanh":
                return math.tanh(a)
            if op == "sqrt":
                if a < 0.0:
                    raise DomainError(f"sqrt of negative value {a!r}")
                return math.sqrt(a)
        except (OverflowError, ValueError) as err:
            raise DomainError(f"{op}({a!r}): {err}") from None
        raise MalformedExpression(f"unknown unary op {op!r}")

    @staticmethod
    def div(a, b):
        if b == 0.0:
            raise DomainError("division by zero")
        return a / b

    @staticmethod
    def pow(a, p):
        """``a ** p`` for a constant exponent ``p``."""
        if float(p).is_integer() and abs(p) <= MAX_SQUARING_EXPONENT:
            try:
                return _ipow(a, int(p))
            except OverflowError as err:
                raise DomainError(f"pow overflow: {err}") from None
        if a <= 0.0 and not float(p).is_integer():
            raise DomainError(f"real power of non-positive base {a!r}")
        try:
            return math.pow(a, p)
        except (OverflowError, ValueError) as err:
            raise DomainError(f"pow({a!r}, {p!r}): {err}") from None

    @classmethod
    def binary(cls, op, a, b):
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        if op == "div":
            return cls.div(a, b)
        if op == "pow":
            return cls.pow(a, b)
        raise MalformedExpression(f"unknown binary op {op!r}")


FLOAT = FloatLib()


def evaluate(expr: Expr, xval, yvals: Sequence, params: Mapping[str, float] | None = None,
             lib=FLOAT, checked: bool = True):
    """Evaluate ``expr`` by walking the tree.

    ``xval`` and ``yvals`` may be floats or any type ``lib`` understands.
    With ``checked`` (float mode) every intermediate result must be finite.
    Errors are re-raised as :class:`DomainError` naming the failing node.
    """
    params = {} if params is None else params
    memo: dict[int, object] = {}
    check = checked and lib is FLOAT

    def rec(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            val = node.value
        elif isinstance(node, X):
            val = xval
        elif isinstance(node, Y):
            try:
                val = yvals[node.index]
            except IndexError:
                raise MalformedExpression(f"state index {node.index} out of range") from None
        elif isinstance(node, Param):
            try:
                val = float(params[node.name])
            except KeyError:
                raise UnboundParameter(node.name) from None
        elif isinstance(node, Unary):
            a = rec(node.arg)
            try:
                val = lib.unary(node.op, a)
            except DomainError as err:
                raise DomainError(str(err), node) from None
        elif isinstance(node, Binary):
            a = rec(node.left)
            if node.op == "pow" and not _is_static(node.right):
                b = rec(node.right)
                try:
                    val = lib.unary("exp", b * lib.unary("log", a))
                except DomainError as err:
                    raise DomainError(str(err), node) from None
            else:
                b = rec(node.right)
                try:
                    val = lib.binary(node.op, a, b)
                except (DomainError, OverflowError, ZeroDivisionError) as err:
                    raise DomainError(str(err), node) from None
        else:
            raise MalformedExpression(f"not an expression node: {node!r}")
        if check and not math.isfinite(val):
            raise DomainError("non-finite intermediate value", node)
        memo[key] = val
        return val

    return rec(expr)


def _source(node: Expr, params: Mapping[str, float]) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, X):
        return "x"
    if isinstance(node, Y):
        return f"y[{node.index}]"
    if isinstance(node, Param):
        return repr(float(params[node.name]))
    if isinstance(node, Unary):
        a = _source(node.arg, params)
        return f"(-{a})" if node.op == "neg" else f"_L.unary({node.op!r}, {a})"
    a, b = _source(node.left, params), _source(node.right, params)
    if node.op == "add":
        return f"({a} + {b})"
    if node.op == "sub":
        return f"({a} - {b})"
    if node.op == "mul":
        return f"({a} * {b})"
    if node.op == "div":
        return f"_L.div({a}, {b})"
    if _is_static(node.right):
        return f"_L.pow({a}, {b})"
    return f"_L.unary('exp', ({b}) * _L.unary('log', {a}))"


def compile_rhs(exprs: Sequence[Expr], params: Mapping[str, float]) -> Callable | None:
    """Return ``f(x, y) -> tuple`` for float evaluation, or None if the trees
    are too deep to compile.

    The generated code performs the same float operations in the same order
    as :func:`evaluate`, so both paths agree bit for bit.  It does not locate
    errors; callers fall back to :func:`evaluate` for that.
    """
    body = ", ".join(_source(e, params) for e in exprs)
    src = f"def _f(x, y):\n    return ({body},)\n"
    namespace = {"_L": FLOAT}
    try:
        exec(compile(src, "<alphaode-rhs>", "exec"), namespace)
    except (RecursionError, SyntaxError, MemoryError):
        return None
    return namespace["_f"]


# --------------------------------------------------------------------------
# differentiation


def _d_add(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return add(a, b)


def _d_mul(a: Expr, b: Expr) -> Expr:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return mul(a, b)


ZERO = Const(0.0)
ONE = Const(1.0)


def diff_expr(e: Expr, wrt: Expr) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to ``wrt``.

    ``wrt`` is ``x``, a ``Y(i)`` or a ``Param``.  Zero terms produced by the
    rules are dropped; nothing else is simplified.
    """
    if not isinstance(wrt, (X, Y, Param)):
        raise MalformedExpression(f"can only differentiate with respect to a variable, got {wrt!r}")
    validate(e)
    memo: dict[int, Expr] = {}

    def d(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, (Const, X, Y, Param)):
            out = ONE if node == wrt else ZERO
        elif isinstance(node, Unary):
            u = node.arg
            du = d(u)
            if du == ZERO:
                out = ZERO
            elif node.op == "neg":
                out = neg(du)
            elif node.op == "exp":
                out = _d_mul(node, du)
            elif node.op == "log":
                out = div(du, u)
            elif node.op == "sin":
                out = _d_mul(cos(u), du)
            elif node.op == "cos":
                out = _d_mul(neg(sin(u)), du)
            elif node.op == "tan":
                out = _d_mul(add(ONE, mul(node, node)), du)
            elif node.op == "tanh":
                out = _d_mul(sub(ONE, mul(node, node)), du)
            elif node.op == "sqrt":
                out = div(du, mul(Const(2.0), node))
            else:
                raise MalformedExpression(f"unknown unary op {node.op!r}")
        elif isinstance(node, Binary):
            u, v = node.left, node.right
            du, dv = d(u), d(v)
            if node.op == "add":
                out = _d_add(du, dv)
            elif node.op == "sub":
                out = du if dv == ZERO else (neg(dv) if du == ZERO else sub(du, dv))
            elif node.op == "mul":
                out = _d_add(_d_mul(du, v), _d_mul(u, dv))
            elif node.op == "div":
                if dv == ZERO:
                    out = ZERO if du == ZERO else div(du, v)
                else:
                    num = sub(_d_mul(du, v), _d_mul(u, dv)) if du != ZERO else neg(_d_mul(u, dv))
                    out = div(num, mul(v, v))
            elif node.op == "pow":
                if not depends_on(v, wrt):
                    # d(u^p) = p u^(p-1) u'
                    if du == ZERO:
                        out = ZERO
                    else:
                        out = _d_mul(mul(v, pow_(u, sub(v, ONE))), du)
                else:
                    # d(u^v) = u^v (v' log u + v u'/u)
                    inner = _d_mul(dv, log(u))
                    if du != ZERO:
                        inner = _d_add(inner, div(_d_mul(v, du), u))
                    out = _d_mul(node, inner)
            else:
                raise MalformedExpression(f"unknown binary op {node.op!r}")
        else:
            raise MalformedExpression(f"not an expression node: {node!r}")
        memo[key] = out
        return out

    return d(e)


# --------------------------------------------------------------------------
# prefix text form

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_STATE = re.compile(r"y(\d+)\Z")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_ALIASES = {"+": "add", "-": "sub", "*": "mul", "/": "div", "^": "pow"}


def parse(text: str) -> Expr:
    """Parse prefix notation such as ``(mul 2 (pow y1 2))``.

    The outer parentheses may be omitted (``pow y1 2``).  ``x`` is the
    independent variable, ``y1 .. yn`` are state variables, numbers are
    constants and any other identifier is a parameter.  ``add`` and ``mul``
    accept two or more arguments; ``sub`` with one argument negates.
    """
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise MalformedExpression("empty expression")
    if tokens[0] != "(" and len(tokens) > 1:
        tokens = ["(", *tokens, ")"]
    pos = 0

    def atom(tok):
        try:
            return Const(float(tok))
        except ValueError:
            pass
        if tok == "x":
            return x
        m = _STATE.match(tok)
        if m:
            k = int(m.group(1))
            if k < 1:
                raise MalformedExpression("state variables are numbered from y1")
            return Y(k - 1)
        if _IDENT.match(tok) and tok not in FUNCTIONS:
            return Param(tok)
        raise MalformedExpression(f"unexpected token {tok!r}")

    def expr():
        nonlocal pos
        if pos >= len(tokens):
            raise MalformedExpression("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise MalformedExpression("unexpected ')'")
        if tok != "(":
            return atom(tok)
        if pos >= len(tokens):
            raise MalformedExpression("unexpected end of input")
        head = _ALIASES.get(tokens[pos], tokens[pos])
        pos += 1
        if head not in FUNCTIONS:
            raise MalformedExpression(f"unknown operator {head!r}")
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            args.append(expr())
        if pos >= len(tokens):
            raise MalformedExpression("missing ')'")
        pos += 1
        return _apply(head, args)

    result = expr()
    if pos != len(tokens):
        raise MalformedExpression(f"trailing input after expression: {' '.join(tokens[pos:])!r}")
    return result


def _apply(head, args):
    if head in ("add", "mul") and len(args) >= 2:
        out = args[0]
        for a in args[1:]:
            out = FUNCTIONS[head](out, a)
        return out
    if head == "sub" and len(args) == 1:
        return neg(args[0])
    arity = 1 if head in UNARY_OPS else 2
    if len(args) != arity:
        raise MalformedExpression(f"{head} takes {arity} argument(s), got {len(args)}")
    return FUNCTIONS[head](*args)


def to_prefix(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, X):
        return "x"
    if isinstance(e, Y):
        return f"y{e.index + 1}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Unary):
        return f"({e.op} {to_prefix(e.arg)})"
    if isinstance(e, Binary):
        return f"({e.op} {to_prefix(e.left)} {to_prefix(e.right)})"
    raise MalformedExpression(f"not an expression node: {e!r}")
