"""The alpha-weighted two-stage step and its trajectory loop.

One step from (x0, y0) with size dx is

    z_k   = y_k0 + dx f_k(x0; y0)                          (Euler predictor)
    y_k   = y_k0 + dx [a_k f_k(x0; y0) + (1 - a_k) f_k(x0 + dx; z)]
    a_k   = 1 - N_k / d_k
    N_k   = sum_{m=2..M} c_{k,m} dx^(m-1)
    d_k   = f_k(x0 + dx; z) - f_k(x0; y0)

with c_{k,m} the solution's Taylor coefficients at x0.  Since
a f0 + (1 - a) fz = f0 + N, the step equals the order-M Taylor update; with
a = 1/2 it is Heun's method.  When d_k is too small for the quotient to be
trusted, variable k takes the Taylor update directly (the "fallback").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import AlphaODEError, DivergentSeries, MaxStepsExceeded
from .jet import MAX_ORDER, TailEstimate, TaylorExpansion, ode_taylor_coeffs, series_tail_estimate
from .system import OdeSystem, State, eval_rhs

DivergencePolicy = Literal["error", "halve-step-hint"]
DIVERGENCE_POLICIES = ("error", "halve-step-hint")


@dataclass(frozen=True)
class SolverConfig:
    order: int = 8
    h: float = 0.1
    eps_den: float = 1e-8
    divergence: DivergencePolicy = "error"
    max_steps: int = 1_000_000
    grid: tuple[float, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.order, int) or not 2 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must be an integer in 2..{MAX_ORDER}, got {self.order!r}")
        if not math.isfinite(self.h) or self.h == 0.0:
            raise ValueError(f"step h must be finite and non-zero, got {self.h!r}")
        if not self.eps_den >= 0.0:
            raise ValueError("eps_den must be non-negative")
        if self.divergence not in DIVERGENCE_POLICIES:
            raise ValueError(f"divergence policy must be one of {DIVERGENCE_POLICIES}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.grid is not None:
            object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))


@dataclass(frozen=True)
class AlphaWeights:
    alpha: tuple[float, ...]        # nan where the guard fired
    numerator: tuple[float, ...]
    denominator: tuple[float, ...]
    fallback: tuple[bool, ...]
    z: tuple[float, ...]
    f0: tuple[float, ...]
    fz: tuple[float, ...]
    expansion: TaylorExpansion
    tail: TailEstimate


@dataclass(frozen=True)
class StepDiagnostics:
    z: tuple[float, ...]
    alpha: tuple[float, ...]
    fallback: tuple[bool, ...]
    den_abs: tuple[float, ...]
    tail: tuple[float, ...]
    divergent: tuple[bool, ...]
    suggested_step: float | None = None


@dataclass(frozen=True)
class Trajectory:
    states: tuple[State, ...]
    diagnostics: tuple[StepDiagnostics, ...]
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def xs(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    @property
    def ys(self) -> np.ndarray:
        return np.array([s.y for s in self.states])

    @property
    def final(self) -> State:
        return self.states[-1]


def predictor(sys: OdeSystem, s0: State, dx: float, f0: Sequence[float] | None = None) -> tuple[float, ...]:
    if f0 is None:
        f0 = eval_rhs(sys, s0)
    return tuple(y + dx * f for y, f in zip(s0.y, f0))


def _truncate(t: TaylorExpansion, order: int) -> TaylorExpansion:
    if t.order < order:
        raise ValueError(f"expansion has order {t.order}, need {order}")
    if t.order == order:
        return t
    return TaylorExpansion(t.x0, t.coeffs[:, :order + 1])


def _check_divergence(tail: TailEstimate, dx: float, policy: str) -> float | None:
    if not tail.any_divergent:
        return None
    if policy == "error":
        bad = [k for k, flag in enumerate(tail.divergent) if flag]
        names = ", ".join(f"y{k + 1}" for k in bad)
        raise DivergentSeries(f"Taylor terms not decreasing for {names} at dx={dx:g}",
                              variables=bad, suggested_step=dx / 2)
    return dx / 2


def alpha_weights(sys: OdeSystem, s0: State, dx: float, order: int = 8, *,
                  eps_den: float = 1e-8, divergence: DivergencePolicy = "error",
                  expansion: TaylorExpansion | None = None) -> AlphaWeights:
    """Weights a_k for a step of size ``dx`` using Taylor coefficients up to ``order``.

    The guard fires for variable k when
    |d_k| <= eps_den * max(|f_k(x; z)|, |f_k(x0; y0)|, 1); a_k is then nan.
    Raises :class:`DivergentSeries` under the "error" policy when the series
    terms stop decreasing.
    """
    if order < 2:
        raise ValueError("the alpha weights need order >= 2")
    f0 = eval_rhs(sys, s0)
    z = predictor(sys, s0, dx, f0)
    fz = eval_rhs(sys, State(s0.x + dx, z))
    t = ode_taylor_coeffs(sys, s0, order) if expansion is None else _truncate(expansion, order)
    tail = series_tail_estimate(t, dx)
    _check_divergence(tail, dx, divergence)

    alpha, num, den, fallback = [], [], [], []
    for k in range(sys.n):
        acc = 0.0
        for c in t.coeffs[k, order:1:-1]:
            acc = acc * dx + float(c)
        n_k = acc * dx
        d_k = fz[k] - f0[k]
        guard = abs(d_k) <= eps_den * max(abs(fz[k]), abs(f0[k]), 1.0)
        num.append(n_k)
        den.append(d_k)
        fallback.append(guard)
        alpha.append(math.nan if guard else 1.0 - n_k / d_k)
    return AlphaWeights(tuple(alpha), tuple(num), tuple(den), tuple(fallback),
                        z, f0, fz, t, tail)


def weighted_step(sys: OdeSystem, s0: State, dx: float, alpha: Sequence[float]) -> State:
    """The two-stage update with caller-supplied weights (a = 1/2 is Heun)."""
    f0 = eval_rhs(sys, s0)
    z = predictor(sys, s0, dx, f0)
    fz = eval_rhs(sys, State(s0.x + dx, z))
    y = tuple(y0 + dx * (a * fa + (1.0 - a) * fb) for y0, a, fa, fb in zip(s0.y, alpha, f0, fz))
    return State(s0.x + dx, y)


def alpha_step(sys: OdeSystem, s0: State, dx: float,
               config: SolverConfig | None = None) -> tuple[State, StepDiagnostics]:
    config = SolverConfig() if config is None else config
    w = alpha_weights(sys, s0, dx, config.order, eps_den=config.eps_den,
                      divergence=config.divergence)
    taylor = None
    y = []
    for k in range(sys.n):
        if w.fallback[k]:
            if taylor is None:
                taylor = w.expansion.evaluate(dx)
            y.append(taylor[k])
        else:
            a = w.alpha[k]
            y.append(s0.y[k] + dx * (a * w.f0[k] + (1.0 - a) * w.fz[k]))
    suggested = dx / 2 if w.tail.any_divergent else None
    diag = StepDiagnostics(
        z=w.z,
        alpha=w.alpha,
        fallback=w.fallback,
        den_abs=tuple(abs(d) for d in w.denominator),
        tail=w.tail.tail,
        divergent=w.tail.divergent,
        suggested_step=suggested,
    )
    return State(s0.x + dx, y), diag


def taylor_fallback_step(sys: OdeSystem, s0: State, dx: float, order: int = 8, *,
                         divergence: DivergencePolicy = "error") -> State:
    """Truncated Taylor update y_k = sum_{m<=order} c_{k,m} dx^m."""
    if order < 1:
        raise ValueError("order must be >= 1")
    t = ode_taylor_coeffs(sys, s0, order)
    _check_divergence(series_tail_estimate(t, dx), dx, divergence)
    return State(s0.x + dx, t.evaluate(dx))


def step_grid(x0: float, x_end: float, h: float, max_steps: int) -> list[float]:
    """Grid x0, x0 + h, ..., x_end; (x_end - x0) must be a whole number of steps."""
    span = x_end - x0
    count = round(span / h)
    if count < 1 or abs(count * h - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f"(x_end - x0)/h = {span / h!r} is not a positive whole number of steps")
    if count > max_steps:
        raise MaxStepsExceeded(f"{count} steps requested, limit is {max_steps}")
    grid = [x0 + i * h for i in range(count)]
    grid.append(x_end)
    return grid


def integrate(sys: OdeSystem, s0: State, x_end: float | None = None,
              config: SolverConfig | None = None) -> Trajectory:
    """Repeated :func:`alpha_step` over a fixed grid.

    The grid is ``config.grid`` when given (it must start at ``s0.x``),
    otherwise x0, x0 + h, ..., x_end.  Coefficients are recomputed at every
    grid point.  Errors carry the failing step in ``step_index``.
    """
    config = SolverConfig() if config is None else config
    if config.grid is not None:
        grid = list(config.grid)
        if grid[0] != s0.x:
            grid.insert(0, s0.x)
        if len(grid) - 1 > config.max_steps:
            raise MaxStepsExceeded(f"{len(grid) - 1} steps requested, limit is {config.max_steps}")
    else:
        if x_end is None:
            raise ValueError("x_end is required when no grid is configured")
        h = math.copysign(abs(config.h), x_end - s0.x)
        grid = step_grid(s0.x, x_end, h, config.max_steps)
    states = [s0]
    diags = []
    s = s0
    for i in range(len(grid) - 1):
        try:
            s, d = alpha_step(sys, s, grid[i + 1] - grid[i], config)
        except AlphaODEError as err:
            err.step_index = i
            if err.args:
                err.args = (f"step {i} from x={grid[i]:.17g}: {err.args[0]}",) + err.args[1:]
            raise
        s = State(grid[i + 1], s.y)
        states.append(s)
        diags.append(d)
    return Trajectory(tuple(states), tuple(diags), config)
