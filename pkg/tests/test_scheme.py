import math

import numpy as np
import pytest

from alphaode import expr as ex
from alphaode.baselines import heun_step
from alphaode.errors import DivergentSeries, DomainError, MaxStepsExceeded
from alphaode.problems import closed_alpha, example1, example2, example3, example4, example5, fixture_catalog
from alphaode.scheme import (SolverConfig, alpha_step, alpha_weights, integrate, predictor,
                             step_grid, taylor_fallback_step, weighted_step)
from alphaode.system import State, build_system

from conftest import random_polynomial_system, rel_close

HINT = SolverConfig(divergence="halve-step-hint")


# ---------------------------------------------------------------- predictor

def test_predictor_example1():
    fx = example1()
    assert predictor(fx.system, fx.initial, 0.1) == (1.1,)


def test_predictor_example2():
    fx = example2()
    assert predictor(fx.system, fx.initial, 0.5) == (1.5,)


def test_predictor_van_der_pol():
    fx = example5()
    z = predictor(fx.system, fx.initial, 0.1)
    assert z[0] == pytest.approx(1.98, abs=1e-15)
    assert z[1] == pytest.approx(1.8 - 0.26064, abs=1e-15)


# ---------------------------------------------------------------- weights

def test_alpha_example1_unit_step():
    fx = example1()
    w = alpha_weights(fx.system, fx.initial, 1.0, 20)
    assert w.alpha[0] == pytest.approx(0.581976706869326, abs=1e-12)
    assert w.alpha[0] == pytest.approx(closed_alpha(fx, 1.0)[0], abs=1e-12)


def test_alpha_example2_half_step():
    fx = example2()
    w = alpha_weights(fx.system, fx.initial, 0.5, 60)
    assert w.alpha[0] == pytest.approx(0.2, abs=1e-12)


@pytest.mark.parametrize("dx", [0.05, 0.1, 0.2, 0.3, 0.4])
def test_alpha_example2_closed_form(dx):
    fx = example2()
    w = alpha_weights(fx.system, fx.initial, dx, 60)
    assert w.alpha[0] == pytest.approx(closed_alpha(fx, dx)[0], abs=1e-12)


@pytest.mark.parametrize("dx", [0.1, 0.3, 0.75])
def test_alpha_oscillator_closed_form(dx):
    # generic start so both weights are defined
    fx = example4(2.0, 1.0)
    s0 = State(0.0, (1.0, 0.5))
    w = alpha_weights(fx.system, s0, dx, 40)
    want = closed_alpha(fx, dx, s0)
    for a, b in zip(w.alpha, want):
        assert a == pytest.approx(b, abs=1e-10)


def test_oscillator_fixture_start_needs_fallback_for_y2():
    # from (phi0, 0) the second weight has a zero denominator
    fx = example4()
    w = alpha_weights(fx.system, fx.initial, 0.1, 8)
    assert w.fallback == (False, True)
    assert math.isnan(w.alpha[1]) and math.isnan(closed_alpha(fx, 0.1)[1])
    assert w.alpha[0] == pytest.approx(closed_alpha(fx, 0.1)[0], abs=1e-8)


# ---------------------------------------------------------------- steps

def test_single_step_example2():
    fx = example2()
    s, d = alpha_step(fx.system, fx.initial, 0.5, SolverConfig(order=60))
    assert s.x == 0.5
    assert s.y[0] == pytest.approx(2.0, abs=1e-12)
    assert d.fallback == (False,)


def test_single_step_example1():
    fx = example1()
    s, _ = alpha_step(fx.system, fx.initial, 1.0, SolverConfig(order=20))
    assert s.y[0] == pytest.approx(math.e, abs=1e-12)


def test_constant_field_falls_back_exactly():
    sys = build_system([ex.Const(3.0)])
    s, d = alpha_step(sys, State(0.0, (1.0,)), 0.5)
    assert d.fallback == (True,) and math.isnan(d.alpha[0])
    assert s.y == (2.5,)


def test_taylor_fallback_examples():
    fx = example2()
    assert taylor_fallback_step(fx.system, fx.initial, 0.5, 60).y[0] == pytest.approx(2.0, abs=1e-12)
    fx = example1()
    assert taylor_fallback_step(fx.system, fx.initial, 1.0, 20).y[0] == pytest.approx(math.e, abs=1e-14)


def test_divergence_policies():
    fx = example2()
    with pytest.raises(DivergentSeries) as info:
        alpha_step(fx.system, fx.initial, 1.2)
    assert info.value.suggested_step == pytest.approx(0.6)
    assert "halving" in str(info.value)
    s, d = alpha_step(fx.system, fx.initial, 1.2, HINT)
    assert d.suggested_step == pytest.approx(0.6) and d.divergent == (True,)
    with pytest.raises(DivergentSeries):
        taylor_fallback_step(fx.system, fx.initial, 1.2)


def test_alpha_step_equals_taylor_update(rng):
    worst = 0.0
    for _ in range(500):
        sys, n = random_polynomial_system(rng)
        s0 = State(float(rng.uniform(-1, 1)), rng.uniform(-1, 1, n))
        dx = float(rng.uniform(0.0, 0.2)) or 0.1
        a, _ = alpha_step(sys, s0, dx, HINT)
        b = taylor_fallback_step(sys, s0, dx, 8, divergence="halve-step-hint")
        for u, v in zip(a.y, b.y):
            worst = max(worst, abs(u - v) / max(abs(v), 1.0))
    assert worst <= 1e-12


def test_half_weights_are_heun():
    for fx in fixture_catalog():
        s0 = fx.initial
        for dx in (0.1, 0.01, 0.37):
            a = weighted_step(fx.system, s0, dx, [0.5] * fx.system.n)
            b = heun_step(fx.system, s0, dx)
            for u, v in zip(a.y, b.y):
                assert abs(u - v) <= 2 * np.spacing(abs(v))


def _limit_cases():
    # (fixture, start, variable) with D f_k != 0 at the start
    f4 = example4()
    return [
        (example1(), example1().initial, 0),
        (example2(), example2().initial, 0),
        (f4, f4.initial, 0),
        (f4, State(0.0, (1.0, 0.5)), 1),
        (example5(), example5().initial, 0),
        (example5(), example5().initial, 1),
    ]


@pytest.mark.parametrize("case", [0, 1, 3, 4, 5])
def test_alpha_tends_to_half(case):
    fx, s0, k = _limit_cases()[case]
    ratios = []
    for dx in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        a = alpha_weights(fx.system, s0, dx, 8).alpha[k]
        ratios.append(abs(a - 0.5) / dx)
    assert max(ratios) / min(ratios) < 10.0
    assert abs(alpha_weights(fx.system, s0, 1e-6, 8).alpha[k] - 0.5) < 1e-5


def test_oscillator_alpha_limit_is_quadratic():
    # from (phi0, 0): alpha_1 - 1/2 = omega^2 dx^2 / 24 + O(dx^4), the linear term vanishes
    fx = example4(2.0, 1.0)
    for dx in (1e-1, 1e-2, 1e-3):
        a = alpha_weights(fx.system, fx.initial, dx, 12).alpha[0]
        assert (a - 0.5) / dx**2 == pytest.approx(4.0 / 24.0, rel=1e-2)


def test_guard_fires_on_constant_fields():
    sys = build_system([ex.Const(0.0), ex.Const(-2.0), ex.Const(1e9)], 3)
    for dx in np.linspace(0.01, 1.0, 100):
        w = alpha_weights(sys, State(0.0, (1.0, 2.0, 3.0)), float(dx), 8)
        assert all(w.fallback)


def test_guard_silent_on_generic_fixtures():
    cases = [(fx, fx.initial) for fx in fixture_catalog() if fx.name != "example4"]
    cases.append((example4(), State(0.0, (1.0, 0.5))))
    for fx, s0 in cases:
        for dx in np.linspace(0.01, 1.0, 100):
            w = alpha_weights(fx.system, s0, float(dx), 8, divergence="halve-step-hint")
            assert not any(w.fallback), (fx.name, dx)


def test_energy_conserved_for_oscillator():
    omega = 2.0
    fx = example4(omega, 1.0)
    T = 10.0
    traj = integrate(fx.system, fx.initial, T, SolverConfig(order=12, h=0.1))
    e = omega**2 * traj.ys[:, 0] ** 2 + traj.ys[:, 1] ** 2
    drift = np.max(np.abs(e - e[0])) / e[0]
    assert drift / T <= 1e-10


# ---------------------------------------------------------------- integrate

def test_integrate_matches_example2_exact():
    fx = example2()
    traj = integrate(fx.system, fx.initial, 0.5, SolverConfig(order=8, h=0.1))
    assert len(traj.states) == 6
    assert traj.final.x == 0.5
    for s in traj.states:
        assert rel_close(s.y[0], 1.0 / (1.0 - s.x), 1e-6)


def test_integrate_backwards():
    fx = example1()
    traj = integrate(fx.system, State(1.0, (math.e,)), 0.0, SolverConfig(order=12, h=0.1))
    assert traj.final.y[0] == pytest.approx(1.0, abs=1e-13)


def test_integrate_custom_grid():
    fx = example1()
    traj = integrate(fx.system, fx.initial, config=SolverConfig(order=12, grid=(0.0, 0.25, 0.3, 1.0)))
    assert list(traj.xs) == [0.0, 0.25, 0.3, 1.0]
    assert traj.final.y[0] == pytest.approx(math.e, abs=1e-9)


def test_integrate_reports_failing_step():
    fx = example2()
    with pytest.raises(DivergentSeries) as info:
        integrate(fx.system, fx.initial, 1.5, SolverConfig(h=0.25))
    # the step leaving x = 1, where the solution has its pole
    assert info.value.step_index == 4
    assert "step 4 from x=1" in str(info.value)


def test_integrate_domain_error_index():
    sys = build_system([ex.log(ex.x - 0.35)])
    with pytest.raises(DomainError) as info:
        integrate(sys, State(0.5, (0.0,)), 0.0, SolverConfig(h=0.1))
    assert info.value.step_index == 1


def test_step_limits():
    with pytest.raises(MaxStepsExceeded):
        integrate(example1().system, example1().initial, 1.0, SolverConfig(h=0.01, max_steps=10))
    with pytest.raises(ValueError):
        step_grid(0.0, 1.0, 0.3, 100)


@pytest.mark.parametrize("kw", [dict(order=1), dict(order=65), dict(h=0.0), dict(h=math.nan),
                                dict(divergence="ignore"), dict(eps_den=-1.0), dict(max_steps=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_example3_step_count_and_first_weight():
    fx = example3()
    traj = integrate(fx.system, fx.initial, 1.0, SolverConfig())
    assert len(traj.diagnostics) == 10
    # from z = 0 the weight tends to 2/3, not 1/2 (D f vanishes there)
    assert traj.diagnostics[0].alpha[0] == pytest.approx(2 / 3, abs=1e-3)
