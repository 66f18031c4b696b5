"""ODE systems y' = f(x; y) assembled from expression trees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import expr as ex
from .errors import DimensionMismatch, DomainError, MalformedExpression, UnboundParameter


@dataclass(frozen=True)
class State:
    x: float
    y: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if not math.isfinite(self.x) or not all(math.isfinite(v) for v in self.y):
            raise DomainError(f"non-finite state at x={self.x!r}: {self.y!r}")

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class OdeSystem:
    """First-order system; ``rhs[k]`` is f_k(x; y_1..y_n).

    Parameters are bound by name at evaluation time, so :meth:`with_params`
    can sweep them without touching the trees.
    """

    rhs: tuple[ex.Expr, ...]
    params: Mapping[str, float] = field(default_factory=dict)
    _compiled: object = field(default=None, init=False, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.rhs)

    def with_params(self, **values: float) -> "OdeSystem":
        return build_system(self.rhs, self.n, {**self.params, **values})

    def compiled(self):
        """Fast float evaluator ``f(x, y) -> tuple`` (built once, cached)."""
        fn = self._compiled
        if fn is None:
            fn = ex.compile_rhs(self.rhs, self.params) or False
            object.__setattr__(self, "_compiled", fn)
        return fn or None


def build_system(rhs_exprs: Sequence, dimension: int | None = None,
                 parameters: Mapping[str, float] | None = None) -> OdeSystem:
    """Validate and assemble an :class:`OdeSystem`.

    Strings in ``rhs_exprs`` are parsed as prefix notation.
    """
    exprs = []
    for e in rhs_exprs:
        if isinstance(e, str):
            e = ex.parse(e)
        elif isinstance(e, (int, float)) and not isinstance(e, bool):
            e = ex.Const(float(e))
        if not isinstance(e, ex.Expr):
            raise MalformedExpression(f"not an expression: {e!r}")
        ex.validate(e)
        exprs.append(e)
    n = len(exprs) if dimension is None else dimension
    if n < 1:
        raise DimensionMismatch("a system needs at least one equation")
    if len(exprs) != n:
        raise DimensionMismatch(f"expected {n} right-hand sides, got {len(exprs)}")
    params = {} if parameters is None else dict(parameters)
    for name, value in params.items():
        if not math.isfinite(float(value)):
            raise MalformedExpression(f"parameter {name!r} is not finite")
        params[name] = float(value)
    for k, e in enumerate(exprs):
        bad = [i for i in ex.state_indices(e) if i >= n]
        if bad:
            raise DimensionMismatch(f"f_{k + 1} refers to y{max(bad) + 1} but the system has n={n}")
        for name in sorted(ex.parameter_names(e)):
            if name not in params:
                raise UnboundParameter(name)
    return OdeSystem(tuple(exprs), params)


def eval_rhs(sys: OdeSystem, s: State) -> tuple[float, ...]:
    if s.n != sys.n:
        raise DimensionMismatch(f"state has {s.n} components, system has {sys.n}")
    fn = sys.compiled()
    if fn is not None:
        try:
            out = fn(s.x, s.y)
        except (ArithmeticError, ValueError):
            out = None
        if out is not None and all(math.isfinite(v) for v in out):
            return out
    # slow path: locates the failing node
    return tuple(ex.evaluate(e, s.x, s.y, sys.params) for e in sys.rhs)


def phase_index(unknown: int, level: int, order: int) -> int:
    """Index of the phase variable holding ``level``-th derivative of ``unknown``."""
    return unknown * order + level


def reduce_order(g, order: int, parameters: Mapping[str, float] | None = None) -> OdeSystem:
    """Rewrite ``d^m u/dx^m = g(x; u, u', ..., u^(m-1))`` as a first-order system.

    ``g`` is one expression (scalar unknown) or a sequence of them (vector
    unknown).  Inside ``g`` the derivative ``u_i^(d)`` is the state variable
    ``Y(phase_index(i, d, order))``; for a scalar unknown that is
    y1 = u, y2 = u', ..., ym = u^(m-1).
    """
    if isinstance(g, (ex.Expr, str, int, float)):
        g = [g]
    g = [ex.parse(e) if isinstance(e, str) else ex.as_expr(e) for e in g]
    if not isinstance(order, int) or order < 2:
        raise MalformedExpression(f"order must be an integer >= 2, got {order!r}")
    rhs: list[ex.Expr] = []
    for i, gi in enumerate(g):
        for level in range(order - 1):
            rhs.append(ex.Y(phase_index(i, level + 1, order)))
        rhs.append(gi)
    return build_system(rhs, len(rhs), parameters)
