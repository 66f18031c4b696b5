import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphaode import expr as ex
from alphaode.errors import DomainError
from alphaode.jet import (Jet, jdiv, jexp, jlog, jpow, jsincos, jsqrt, jtan, jtanh,
                          ode_taylor_coeffs, series_tail_estimate, TaylorExpansion)
from alphaode.problems import example1, example2, example3, example4, example5, vdp_hand_derivatives
from alphaode.system import State, build_system

ORDER = 10


def mp_series(fn, coeffs, order):
    """Taylor coefficients of fn(sum c_k t^k) at t = 0, to 40 digits."""
    with mpmath.workdps(40):
        poly = lambda t: sum(mpmath.mpf(c) * t**k for k, c in enumerate(coeffs))
        return [float(v) for v in mpmath.taylor(lambda t: fn(poly(t)), 0, order)]


def assert_series_close(got, want, rtol=1e-11):
    scale = max(1.0, max(abs(v) for v in want))
    for k, (a, b) in enumerate(zip(got, want)):
        assert abs(a - b) <= rtol * scale, (k, a, b)


# ---------------------------------------------------------------- examples

def test_variable_and_constant():
    assert Jet.variable(0.5, 3).c == (0.5, 1.0, 0.0, 0.0)
    assert Jet.constant(2.0, 2).c == (2.0, 0.0, 0.0)


def test_exp_of_identity():
    e = jexp(Jet.variable(0.0, 6))
    assert e.c == pytest.approx([1 / math.factorial(k) for k in range(7)], rel=1e-15)


def test_square_of_one_plus_t():
    a = Jet([1.0, 1.0, 0.0, 0.0])
    assert (a * a).c == (1.0, 2.0, 1.0, 0.0)


def test_sine_of_scaled_identity():
    w = 2.0
    s, c = jsincos(w * Jet.variable(0.0, 7))
    want_s = [0.0, w, 0.0, -w**3 / 6, 0.0, w**5 / 120, 0.0, -w**7 / 5040]
    assert s.c == pytest.approx(want_s, rel=1e-14, abs=1e-15)
    assert c.c[:3] == pytest.approx([1.0, 0.0, -w**2 / 2])


def test_geometric_series_from_division():
    q = jdiv(Jet.constant(1.0, 8), Jet([1.0, -1.0] + [0.0] * 7))
    assert q.c == (1.0,) * 9


def test_order_mismatch_rejected():
    with pytest.raises(ValueError):
        Jet([1.0, 2.0]) + Jet([1.0])


def test_domain_failures():
    with pytest.raises(DomainError):
        jlog(Jet([0.0, 1.0]))
    with pytest.raises(DomainError):
        jsqrt(Jet([-1.0, 1.0]))
    with pytest.raises(DomainError):
        jdiv(Jet([1.0, 0.0]), Jet([0.0, 1.0]))
    with pytest.raises(DomainError):
        jpow(Jet([-1.0, 1.0]), 0.5)


# ---------------------------------------------------------------- against mpmath

coeff_lists = st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=ORDER + 1, max_size=ORDER + 1)


def _positive(c):
    return [1.0 + abs(c[0])] + list(c[1:])


def _away_from_pole(c):
    return [0.5 * c[0]] + list(c[1:])


UNARY_CASES = [
    ("exp", jexp, mpmath.exp, lambda c: c),
    ("log", jlog, mpmath.log, _positive),
    ("sin", lambda a: jsincos(a)[0], mpmath.sin, lambda c: c),
    ("cos", lambda a: jsincos(a)[1], mpmath.cos, lambda c: c),
    ("tan", jtan, mpmath.tan, _away_from_pole),
    ("tanh", jtanh, mpmath.tanh, lambda c: c),
    ("sqrt", jsqrt, mpmath.sqrt, _positive),
    ("pow1.5", lambda a: jpow(a, 1.5), lambda u: u**1.5, _positive),
    ("pow-2.5", lambda a: jpow(a, -2.5), lambda u: u**-2.5, _positive),
    ("pow3", lambda a: jpow(a, 3), lambda u: u**3, lambda c: c),
    ("pow-2", lambda a: jpow(a, -2), lambda u: u**-2, _positive),
    ("recip", lambda a: 1.0 / a, lambda u: 1 / u, _positive),
]


@pytest.mark.parametrize("name, jfn, mfn, prep", UNARY_CASES, ids=[c[0] for c in UNARY_CASES])
@settings(max_examples=25, deadline=None)
@given(c=coeff_lists)
def test_unary_recurrences_match_mpmath(name, jfn, mfn, prep, c):
    c = prep(c)
    assert_series_close(jfn(Jet(c)).c, mp_series(mfn, c, ORDER))


@settings(max_examples=40, deadline=None)
@given(a=coeff_lists, b=coeff_lists)
def test_product_and_quotient_match_mpmath(a, b):
    b = _positive(b)
    with mpmath.workdps(40):
        pa = lambda t: sum(mpmath.mpf(v) * t**k for k, v in enumerate(a))
        pb = lambda t: sum(mpmath.mpf(v) * t**k for k, v in enumerate(b))
        prod = [float(v) for v in mpmath.taylor(lambda t: pa(t) * pb(t), 0, ORDER)]
        quot = [float(v) for v in mpmath.taylor(lambda t: pa(t) / pb(t), 0, ORDER)]
    assert_series_close((Jet(a) * Jet(b)).c, prod, 1e-14)
    assert_series_close(jdiv(Jet(a), Jet(b)).c, quot)


# ---------------------------------------------------------------- algebraic properties

@settings(max_examples=200, deadline=None)
@given(a=coeff_lists, b=coeff_lists)
def test_product_commutes_exactly(a, b):
    assert (Jet(a) * Jet(b)).c == (Jet(b) * Jet(a)).c


@settings(max_examples=300, deadline=None)
@given(a=coeff_lists, b=coeff_lists, c=coeff_lists)
def test_product_associates_to_two_ulp(a, b, c):
    # ulp measured at the scale of the coefficient-wise |a| |b| |c| product,
    # the natural magnitude of each convolution sum
    A, B, C = Jet(a), Jet(b), Jet(c)
    left, right = ((A * B) * C).c, (A * (B * C)).c
    scale = (Jet(np.abs(a)) * Jet(np.abs(b)) * Jet(np.abs(c))).c
    for l, r, s in zip(left, right, scale):
        assert abs(l - r) <= 2 * np.spacing(max(s, np.finfo(float).tiny))


def test_leading_coefficient_is_float_evaluation(rng):
    e = ex.sin(ex.Y(0) * ex.x) / (1.5 + ex.Y(1) ** 2) + ex.exp(-ex.Y(0)) * ex.Y(1) ** 3
    from alphaode.jet import JET
    for _ in range(100):
        xv = float(rng.uniform(-2, 2))
        yv = [float(v) for v in rng.uniform(-2, 2, 2)]
        jet_val = ex.evaluate(e, Jet.variable(xv, 6), [Jet.constant(v, 6) for v in yv], lib=JET)
        assert jet_val.c[0] == ex.evaluate(e, xv, yv)


# ---------------------------------------------------------------- ODE coefficients

def test_example1_coefficients():
    t = ode_taylor_coeffs(example1().system, State(0.0, (1.0,)), 12)
    want = [1.0] + [1 / math.factorial(m) for m in range(1, 13)]
    assert np.allclose(t.coeffs[0], want, rtol=1e-13, atol=0)


def test_example2_coefficients():
    t = ode_taylor_coeffs(example2().system, State(0.0, (1.0,)), 12)
    assert np.allclose(t.coeffs[0], np.ones(13), rtol=1e-13, atol=0)
    # D^j f = (j+1)! y^(j+2)
    for j in range(0, 11):
        assert t.d_f(0, j) == pytest.approx(math.factorial(j + 1), rel=1e-13)


def test_example3_coefficients():
    # z = tanh(x/2)/2 = x/4 - x^3/48 + x^5/480 - 17 x^7/80640 + ...
    t = ode_taylor_coeffs(example3().system, State(0.0, (0.0,)), 7)
    want = [0.0, 0.25, 0.0, -1 / 48, 0.0, 1 / 480, 0.0, -17 / 80640]
    assert np.allclose(t.coeffs[0], want, rtol=1e-13, atol=1e-17)


@pytest.mark.parametrize("omega", [0.5, 2.0, 3.0])
def test_oscillator_derivative_pattern(omega):
    phi0 = 1.0
    t = ode_taylor_coeffs(example4(omega, phi0).system, State(0.0, (phi0, 0.0)), 12)
    # D^{2j-1} f_1 = (-1)^j w^{2j} phi0 ; odd applications of D to f_2 vanish
    for j in range(1, 6):
        assert t.d_f(0, 2 * j - 1) == pytest.approx((-1) ** j * omega ** (2 * j) * phi0, rel=1e-13)
        assert t.d_f(0, 2 * j) == 0.0
        assert t.d_f(1, 2 * j) == pytest.approx((-1) ** (j + 1) * omega ** (2 * j + 2) * phi0, rel=1e-13)
        assert t.d_f(1, 2 * j - 1) == 0.0


def test_coefficient_invariants(rng):
    sys = example5().system
    for _ in range(20):
        s = State(float(rng.uniform(-1, 1)), rng.uniform(-2, 2, 2))
        t = ode_taylor_coeffs(sys, s, 8)
        assert tuple(t.coeffs[:, 0]) == tuple(s.y)
        from alphaode.system import eval_rhs
        assert tuple(t.coeffs[:, 1]) == eval_rhs(sys, s)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_van_der_pol_printed_ladder(k):
    t = ode_taylor_coeffs(example5().system, State(0.0, (1.8, 1.8)), 9)
    assert t.d_f(0, k) == pytest.approx(vdp_hand_derivatives(1.8, 1.8, 0.1, k), rel=1e-12)


@pytest.mark.parametrize("k", range(1, 8))
def test_van_der_pol_corrected_ladder(k, rng):
    sys = example5().system
    for _ in range(5):
        a, b = rng.uniform(-2, 2, 2)
        mu = float(rng.uniform(0.05, 1.0))
        t = ode_taylor_coeffs(sys.with_params(mu=mu), State(0.0, (a, b)), 9)
        want = vdp_hand_derivatives(a, b, mu, k, corrected=True)
        assert abs(t.d_f(0, k) - want) <= 1e-11 * max(1.0, abs(want))


def test_coefficients_reject_bad_order():
    with pytest.raises(ValueError):
        ode_taylor_coeffs(example1().system, State(0.0, (1.0,)), 0)
    with pytest.raises(ValueError):
        ode_taylor_coeffs(example1().system, State(0.0, (1.0,)), 65)


def test_expansion_is_read_only():
    t = ode_taylor_coeffs(example1().system, State(0.0, (1.0,)), 4)
    with pytest.raises(ValueError):
        t.coeffs[0, 0] = 2.0


def test_shift_consistency_against_reference():
    from alphaode.baselines import reference_solve
    for fx, dx in [(example5(), 0.1), (example5(), 0.2), (example3(), 0.5), (example4(), 0.3)]:
        t = ode_taylor_coeffs(fx.system, fx.initial, 10)
        ref = reference_solve(fx.system, fx.initial, dx, 1e-4)
        tail = series_tail_estimate(t, dx)
        got = t.evaluate(dx)
        for k in range(fx.system.n):
            assert abs(got[k] - ref.ys[-1, k]) <= tail.tail[k] + ref.error_estimate + 1e-15


# ---------------------------------------------------------------- tail estimate

def test_tail_example2_converging():
    t = ode_taylor_coeffs(example2().system, State(0.0, (1.0,)), 8)
    est = series_tail_estimate(t, 0.5)
    assert est.tail[0] == pytest.approx(0.5**7, rel=1e-13)
    assert not est.any_divergent


def test_tail_example2_diverging():
    t = ode_taylor_coeffs(example2().system, State(0.0, (1.0,)), 8)
    est = series_tail_estimate(t, 1.2)
    assert est.divergent == (True,)


def test_tail_constant_field():
    t = ode_taylor_coeffs(build_system([ex.Const(3.0)]), State(0.0, (1.0,)), 8)
    est = series_tail_estimate(t, 0.7)
    assert est.tail == (0.0,) and not est.any_divergent


def test_tail_low_order_never_flags():
    t = TaylorExpansion(0.0, np.array([[1.0, 1.0, 1.0]]))
    assert series_tail_estimate(t, 5.0).divergent == (False,)
