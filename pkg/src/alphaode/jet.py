"""Truncated power series ("jets") and Taylor coefficients of ODE solutions.

A :class:`Jet` of order M holds a_0..a_M, the coefficients of
a(x0 + t) = sum a_m t^m.  Products and the elementary functions use the usual
convolution recurrences; every coefficient sum goes through ``math.fsum`` so
results do not depend on summation order, and jet products are correctly
rounded coefficient by coefficient.

:func:`ode_taylor_coeffs` evaluates the right-hand side trees in jet
arithmetic and reads off one new solution coefficient per pass, the standard
Taylor-method recursion.  For y' = f this yields c_{k,m} = y_k^(m)(x0)/m!,
so the m-th power of the total derivative operator applied to f_k is
(m+1)! c_{k,m+1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum

import numpy as np

from . import expr as ex
from .errors import DomainError
from .system import OdeSystem, State

MAX_ORDER = 64


_SPLITTER = 134217729.0  # 2**27 + 1
_SPLIT_LIMIT = 2.0**995


def _split(v: float) -> tuple[float, float] | None:
    """Veltkamp split v = hi + lo with 26-bit halves; None when it would overflow."""
    if not abs(v) < _SPLIT_LIMIT:
        return None
    t = _SPLITTER * v
    hi = t - (t - v)
    return hi, v - hi


def _cauchy(a, b) -> list[float]:
    """Cauchy product with each coefficient correctly rounded.

    Every a_i b_j is expanded exactly into p + e (Dekker's two-product) and
    the pieces are summed with fsum, so each coefficient is the exact
    convolution rounded once (barring under/overflow).
    """
    sa = [_split(v) for v in a]
    sb = [_split(v) for v in b]
    out = []
    for k in range(len(a)):
        parts = []
        for i in range(k + 1):
            x, y = a[i], b[k - i]
            p = x * y
            parts.append(p)
            u, w = sa[i], sb[k - i]
            if u is not None and w is not None and p != 0.0 and math.isfinite(p):
                xh, xl = u
                yh, yl = w
                parts.append(((xh * yh - p) + xh * yl + xl * yh) + xl * yl)
        out.append(fsum(parts))
    return out


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = tuple(float(v) for v in coeffs)
        if not self.c:
            raise ValueError("a jet needs at least one coefficient")

    @classmethod
    def variable(cls, x0: float, order: int) -> "Jet":
        """Series of the identity map around ``x0``: (x0, 1, 0, ...)."""
        return cls([x0, 1.0] + [0.0] * (order - 1)) if order >= 1 else cls([x0])

    @classmethod
    def constant(cls, value: float, order: int) -> "Jet":
        return cls([value] + [0.0] * order)

    @property
    def order(self) -> int:
        return len(self.c) - 1

    def __len__(self):
        return len(self.c)

    def __getitem__(self, k):
        return self.c[k]

    def __repr__(self):
        return f"Jet({list(self.c)!r})"

    def __eq__(self, other):
        return isinstance(other, Jet) and self.c == other.c

    __hash__ = None

    def _check(self, other):
        if len(other.c) != len(self.c):
            raise ValueError(f"jet orders differ: {self.order} vs {other.order}")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet([a + b for a, b in zip(self.c, other.c)])
        return Jet((self.c[0] + other,) + self.c[1:])

    def __radd__(self, other):
        return Jet((other + self.c[0],) + self.c[1:])

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet([a - b for a, b in zip(self.c, other.c)])
        return Jet((self.c[0] - other,) + self.c[1:])

    def __rsub__(self, other):
        return Jet((other - self.c[0],) + tuple(-a for a in self.c[1:]))

    def __neg__(self):
        return Jet([-a for a in self.c])

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet(_cauchy(self.c, other.c))
        return Jet([a * other for a in self.c])

    def __rmul__(self, other):
        return Jet([other * a for a in self.c])

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jdiv(self, other)
        if other == 0.0:
            raise DomainError("division by zero")
        return Jet([a / other for a in self.c])

    def __rtruediv__(self, other):
        return jdiv(Jet.constant(other, self.order), self)


def jdiv(a: Jet, b: Jet) -> Jet:
    a._check(b)
    if b.c[0] == 0.0:
        raise DomainError("series division by a jet with zero leading coefficient")
    b0 = b.c[0]
    q: list[float] = []
    for k in range(len(a.c)):
        s = fsum(b.c[j] * q[k - j] for j in range(1, k + 1)) if k else 0.0
        q.append((a.c[k] - s) / b0 if k else a.c[0] / b0)
    return Jet(q)


def jexp(a: Jet) -> Jet:
    try:
        b = [math.exp(a.c[0])]
    except OverflowError:
        raise DomainError(f"exp overflow at {a.c[0]!r}") from None
    for k in range(1, len(a.c)):
        b.append(fsum(j * a.c[j] * b[k - j] for j in range(1, k + 1)) / k)
    return Jet(b)


def jlog(a: Jet) -> Jet:
    a0 = a.c[0]
    if a0 <= 0.0:
        raise DomainError(f"log of non-positive value {a0!r}")
    b = [math.log(a0)]
    for k in range(1, len(a.c)):
        s = fsum(j * b[j] * a.c[k - j] for j in range(1, k)) / k
        b.append((a.c[k] - s) / a0)
    return Jet(b)


def jsincos(a: Jet) -> tuple[Jet, Jet]:
    s = [math.sin(a.c[0])]
    c = [math.cos(a.c[0])]
    for k in range(1, len(a.c)):
        s.append(fsum(j * a.c[j] * c[k - j] for j in range(1, k + 1)) / k)
        c.append(-fsum(j * a.c[j] * s[k - j] for j in range(1, k + 1)) / k)
    return Jet(s), Jet(c)


def _riccati_like(a: Jet, t0: float, sign: float) -> Jet:
    # t' = (1 + sign t^2) a'  (tan: sign=+1, tanh: sign=-1)
    t = [t0]
    w = [1.0 + sign * t0 * t0]
    for k in range(1, len(a.c)):
        t.append(fsum(j * a.c[j] * w[k - j] for j in range(1, k + 1)) / k)
        w.append(sign * fsum(t[i] * t[k - i] for i in range(k + 1)))
    return Jet(t)


def jtan(a: Jet) -> Jet:
    return _riccati_like(a, math.tan(a.c[0]), 1.0)


def jtanh(a: Jet) -> Jet:
    return _riccati_like(a, math.tanh(a.c[0]), -1.0)


def jsqrt(a: Jet) -> Jet:
    a0 = a.c[0]
    if a0 < 0.0 or (a0 == 0.0 and len(a.c) > 1):
        raise DomainError(f"sqrt series undefined at {a0!r}")
    r = [math.sqrt(a0)]
    for k in range(1, len(a.c)):
        s = fsum(r[j] * r[k - j] for j in range(1, k))
        r.append((a.c[k] - s) / (2.0 * r[0]))
    return Jet(r)


def jpow(a: Jet, p: float) -> Jet:
    """``a ** p`` for a constant exponent."""
    if float(p).is_integer() and abs(p) <= ex.MAX_SQUARING_EXPONENT:
        return ex._ipow(a, int(p), 1.0)
    a0 = a.c[0]
    if a0 <= 0.0:
        raise DomainError(f"real power of non-positive base {a0!r}")
    try:
        b = [math.pow(a0, p)]
    except OverflowError:
        raise DomainError(f"pow overflow at {a0!r}") from None
    for k in range(1, len(a.c)):
        s = fsum((p * j - (k - j)) * a.c[j] * b[k - j] for j in range(1, k + 1))
        b.append(s / (k * a0))
    return Jet(b)


_UNARY = {
    "exp": jexp,
    "log": jlog,
    "sin": lambda a: jsincos(a)[0],
    "cos": lambda a: jsincos(a)[1],
    "tan": jtan,
    "tanh": jtanh,
    "sqrt": jsqrt,
    "neg": lambda a: -a,
}


class JetLib:
    """Evaluation library that lets :func:`alphaode.expr.evaluate` run on jets.

    Float operands (constants, parameters) stay floats until they meet a jet.
    """

    @staticmethod
    def unary(op, a):
        if not isinstance(a, Jet):
            return ex.FLOAT.unary(op, a)
        return _UNARY[op](a)

    @staticmethod
    def binary(op, a, b):
        if not isinstance(a, Jet) and not isinstance(b, Jet):
            return ex.FLOAT.binary(op, a, b)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        if op == "div":
            return a / b
        if op == "pow":
            if isinstance(b, Jet):
                # only reached for exponents that are jets yet constant in value
                return jexp(b * jlog(a if isinstance(a, Jet) else Jet.constant(a, b.order)))
            return jpow(a, b)
        raise ValueError(f"unknown binary op {op!r}")


JET = JetLib()


# --------------------------------------------------------------------------
# solution Taylor coefficients


@dataclass(frozen=True)
class TaylorExpansion:
    """Taylor coefficients c[k, m] = y_k^(m)(x0) / m! for m = 0..order."""

    x0: float
    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    def d_f(self, k: int, j: int) -> float:
        """D^j f_k at the expansion point (D the total derivative along the flow)."""
        return math.factorial(j + 1) * float(self.coeffs[k, j + 1])

    def terms(self, dx: float) -> np.ndarray:
        """Array of c[k, m] dx^m."""
        return self.coeffs * dx ** np.arange(self.order + 1)

    def evaluate(self, dx: float, order: int | None = None) -> tuple[float, ...]:
        """Truncated series sum_{m<=order} c[k, m] dx^m by Horner's rule."""
        top = self.order if order is None else order
        out = []
        for row in self.coeffs:
            acc = 0.0
            for c in row[top::-1]:
                acc = acc * dx + float(c)
            out.append(acc)
        return tuple(out)


def ode_taylor_coeffs(sys: OdeSystem, s0: State, order: int) -> TaylorExpansion:
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
    if s0.n != sys.n:
        from .errors import DimensionMismatch
        raise DimensionMismatch(f"state has {s0.n} components, system has {sys.n}")
    rows = [[v] for v in s0.y]
    for m in range(order):
        xj = Jet.variable(s0.x, m)
        yj = [Jet(row) for row in rows]
        for k, e in enumerate(sys.rhs):
            v = ex.evaluate(e, xj, yj, sys.params, lib=JET)
            cm = v.c[m] if isinstance(v, Jet) else (float(v) if m == 0 else 0.0)
            if not math.isfinite(cm):
                raise DomainError(f"non-finite Taylor coefficient c[{k}, {m + 1}]")
            rows[k].append(cm / (m + 1))
    coeffs = np.array(rows, dtype=float)
    coeffs.setflags(write=False)
    return TaylorExpansion(s0.x, coeffs)


@dataclass(frozen=True)
class TailEstimate:
    tail: tuple[float, ...]
    divergent: tuple[bool, ...]

    @property
    def max_tail(self) -> float:
        return max(self.tail)

    @property
    def any_divergent(self) -> bool:
        return any(self.divergent)


def series_tail_estimate(t: TaylorExpansion, dx: float) -> TailEstimate:
    """Heuristic size of the neglected terms when summing to ``t.order``.

    The tail is the larger of the last two retained terms |c_m dx^m|.  A
    variable is flagged divergent when those magnitudes are non-decreasing
    over the top three orders and not all zero.  Orders below 3 give a tail
    but never a flag.
    """
    mag = np.abs(t.terms(dx))
    M = t.order
    lo = max(M - 1, 1) if M >= 1 else 0
    tail = tuple(float(v) for v in mag[:, lo:M + 1].max(axis=1))
    if M < 3:
        return TailEstimate(tail, (False,) * t.n)
    a, b, c = mag[:, M - 2], mag[:, M - 1], mag[:, M]
    flags = tuple(bool(v) for v in (a <= b) & (b <= c) & (c > 0.0))
    return TailEstimate(tail, flags)
