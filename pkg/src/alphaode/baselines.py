"""Classical fixed-step Runge-Kutta integrators used as comparisons and oracles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, MaxStepsExceeded
from .system import OdeSystem, State, eval_rhs


def heun_step(sys: OdeSystem, s0: State, h: float) -> State:
    f0 = eval_rhs(sys, s0)
    z = tuple(y + h * f for y, f in zip(s0.y, f0))
    f1 = eval_rhs(sys, State(s0.x + h, z))
    return State(s0.x + h, tuple(y + h * (0.5 * a + 0.5 * b) for y, a, b in zip(s0.y, f0, f1)))


def rk4_step(sys: OdeSystem, s0: State, h: float) -> State:
    x, y = s0.x, s0.y
    k1 = eval_rhs(sys, s0)
    k2 = eval_rhs(sys, State(x + h / 2, [v + h / 2 * k for v, k in zip(y, k1)]))
    k3 = eval_rhs(sys, State(x + h / 2, [v + h / 2 * k for v, k in zip(y, k2)]))
    k4 = eval_rhs(sys, State(x + h, [v + h * k for v, k in zip(y, k3)]))
    return State(x + h, [v + h / 6 * (a + 2 * b + 2 * c + d)
                         for v, a, b, c, d in zip(y, k1, k2, k3, k4)])


STEPPERS: dict[str, Callable[[OdeSystem, State, float], State]] = {
    "heun": heun_step,
    "rk4": rk4_step,
}


def fixed_step_solve(sys: OdeSystem, s0: State, x_end: float, h: float,
                     method: str = "rk4") -> list[State]:
    """Every grid state from x0 to x_end with one of the steppers above."""
    from .scheme import step_grid

    step = STEPPERS[method]
    grid = step_grid(s0.x, x_end, h, 10**8)
    out = [s0]
    s = s0
    for x_next in grid[1:]:
        s = step(sys, s, x_next - s.x)
        s = State(x_next, s.y)
        out.append(s)
    return out


def _rk4_march(sys: OdeSystem, s0: State, h: float, record: Sequence[int]) -> list[tuple[float, ...]]:
    """RK4 with n uniform steps of size h, returning y at the step indices in
    ``record``.  Uses the compiled evaluator directly for speed."""
    f = sys.compiled()
    if f is None:
        def f(x, y):
            return eval_rhs(sys, State(x, y))
    wanted = set(record)
    last = max(record)
    x0 = s0.x
    y = list(s0.y)
    n = len(y)
    rng = range(n)
    h2 = h / 2
    h6 = h / 6
    out = {}
    if 0 in wanted:
        out[0] = tuple(y)
    x = x0
    try:
        for i in range(last):
            x = x0 + i * h
            k1 = f(x, y)
            k2 = f(x + h2, [y[j] + h2 * k1[j] for j in rng])
            k3 = f(x + h2, [y[j] + h2 * k2[j] for j in rng])
            k4 = f(x + h, [y[j] + h * k3[j] for j in rng])
            y = [y[j] + h6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]) for j in rng]
            if i + 1 in wanted:
                out[i + 1] = tuple(y)
    except (ArithmeticError, ValueError) as err:
        raise DomainError(f"RK4 reference run failed near x={x!r}: {err}") from err
    # State() rejects non-finite results
    return [State(x0 + r * h, out[r]).y for r in record]


@dataclass(frozen=True)
class ReferenceRun:
    method: str
    h_ref: float
    xs: tuple[float, ...]
    ys: np.ndarray               # shape (len(xs), n)
    error_estimate: float | None  # max |y(h_ref) - y(h_ref/2)|, None if skipped


def reference_solve(sys: OdeSystem, s0: State, x_end: float, h_ref: float,
                    outputs: Sequence[float] | None = None, *, estimate_error: bool = True,
                    max_steps: int = 50_000_000) -> ReferenceRun:
    """RK4 reference trajectory at ``outputs`` (default: x_end only).

    Every output must sit on the h_ref grid.  The error estimate reruns with
    h_ref/2 and takes the max-norm difference at the outputs.
    """
    outputs = [x_end] if outputs is None else list(outputs)
    span = x_end - s0.x
    total = round(span / h_ref)
    if total < 1 or abs(total * h_ref - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError("x_end - x0 must be a positive whole number of reference steps")
    if total * (3 if estimate_error else 1) > max_steps:
        raise MaxStepsExceeded(f"reference run needs {total} steps, limit {max_steps}")
    idx = []
    for xo in outputs:
        r = round((xo - s0.x) / h_ref)
        if r < 0 or r > total or abs(s0.x + r * h_ref - xo) > 1e-9 * max(1.0, abs(span)):
            raise ValueError(f"output point {xo!r} is not on the reference grid")
        idx.append(r)
    ys = np.array(_rk4_march(sys, s0, h_ref, idx))
    err = None
    if estimate_error:
        fine = np.array(_rk4_march(sys, s0, h_ref / 2, [2 * r for r in idx]))
        err = float(np.max(np.abs(fine - ys)))
    return ReferenceRun("rk4", h_ref, tuple(float(v) for v in outputs), ys, err)
