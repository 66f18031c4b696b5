import math

import numpy as np
import pytest

from alphaode import expr as ex
from alphaode.baselines import fixed_step_solve, heun_step, reference_solve, rk4_step
from alphaode.errors import DomainError, MaxStepsExceeded
from alphaode.problems import example1, example2, example3, example4, example5
from alphaode.scheme import weighted_step
from alphaode.system import State, build_system

GROWTH = build_system([ex.Y(0)])


def test_heun_growth_step():
    assert heun_step(GROWTH, State(0.0, (1.0,)), 0.1).y[0] == pytest.approx(1.105, abs=1e-15)


def test_rk4_growth_step():
    assert rk4_step(GROWTH, State(0.0, (1.0,)), 0.1).y[0] == pytest.approx(1.1051708333333334, abs=1e-15)


def test_heun_equals_half_weights_example2():
    fx = example2()
    assert heun_step(fx.system, fx.initial, 0.1) == weighted_step(fx.system, fx.initial, 0.1, [0.5])


def _order_exponents(method):
    hs = (0.1, 0.05, 0.025)
    errs = [abs(fixed_step_solve(GROWTH, State(0.0, (1.0,)), 1.0, h, method)[-1].y[0] - math.e) for h in hs]
    return [math.log2(errs[i] / errs[i + 1]) for i in range(2)]


def test_heun_is_second_order():
    for p in _order_exponents("heun"):
        assert 1.8 <= p <= 2.2


def test_rk4_is_fourth_order():
    for p in _order_exponents("rk4"):
        assert 3.8 <= p <= 4.2


@pytest.mark.parametrize("fx, x_end", [(example1(), 1.0), (example2(), 0.5), (example3(), 1.0),
                                       (example4(), 1.0), (example5(), 1.0)], ids=lambda v: getattr(v, "name", str(v)))
def test_rk4_reference_is_converged(fx, x_end):
    # example 2 stops at its fixture end; its solution has a pole at x = 1
    a = reference_solve(fx.system, fx.initial, x_end, 1e-4, estimate_error=False)
    b = reference_solve(fx.system, fx.initial, x_end, 2e-4, estimate_error=False)
    assert np.max(np.abs(a.ys - b.ys)) <= 1e-10
    if fx.exact is not None:
        assert np.max(np.abs(a.ys[-1] - fx.exact(x_end))) <= 1e-10


def test_reference_outputs_and_error_estimate():
    fx = example1()
    run = reference_solve(fx.system, fx.initial, 1.0, 1e-3, [0.25, 0.5, 1.0])
    assert run.xs == (0.25, 0.5, 1.0)
    assert run.ys.shape == (3, 1)
    assert run.ys[:, 0] == pytest.approx([math.exp(0.25), math.exp(0.5), math.e], abs=1e-12)
    assert run.error_estimate is not None and run.error_estimate < 1e-12


def test_fast_march_matches_stepper():
    fx = example5()
    run = reference_solve(fx.system, fx.initial, 1.0, 0.01, estimate_error=False)
    slow = fixed_step_solve(fx.system, fx.initial, 1.0, 0.01, "rk4")[-1]
    assert np.max(np.abs(run.ys[-1] - slow.y)) <= 1e-13


def test_reference_rejects_off_grid_output():
    with pytest.raises(ValueError):
        reference_solve(GROWTH, State(0.0, (1.0,)), 1.0, 0.1, [0.25])
    with pytest.raises(ValueError):
        reference_solve(GROWTH, State(0.0, (1.0,)), 1.0, 0.3)


def test_reference_step_budget():
    with pytest.raises(MaxStepsExceeded):
        reference_solve(GROWTH, State(0.0, (1.0,)), 1.0, 1e-3, max_steps=100)


def test_reference_blowup_is_domain_error():
    fx = example2()
    with pytest.raises(DomainError):
        reference_solve(fx.system, fx.initial, 2.0, 0.01, estimate_error=False)
