"""Worked example problems with exact solutions, closed-form weights and tables.

Fixtures
--------
example1  y' = e^x, y(0) = 1                      exact e^x
example2  y' = y^2, y(0) = 1                      exact 1/(1 - x)
example3  z' = 1/4 - z^2, z(0) = 0                the normalised form of the
          Riccati equation y' = P + Qy + Ry^2 with P = e^x - e^{3x},
          Q = 2e^{2x}, R = -e^x; y(0) = 1.5 maps to z(0) = 0 and the
          observed quantity is y recovered through the inverse map.
example4  phi'' + omega^2 phi = 0, phi(0) = phi0, phi'(0) = 0
example5  van der Pol x'' + 2 mu (x^2 - 1) x' + x = 0, x(0) = x'(0) = 1.8

Reference table values are stored digit for digit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import expr as ex
from .baselines import reference_solve
from .errors import DomainError, MuUnidentified, UnsupportedFixture
from .system import OdeSystem, State, build_system, reduce_order

# (x, present method h=0.1, exact solution)
TABLE1 = (
    (0.1, 1.58019173059671, 1.58019173059671),
    (0.2, 1.67156876084769, 1.67156876084769),
    (0.3, 1.77541629076434, 1.77541629076434),
    (0.4, 1.89313703752882, 1.89313703752882),
    (0.5, 2.02626193949827, 2.02626193949827),
    (0.6, 2.17646249416471, 2.17646249416471),
    (0.7, 2.34556493530231, 2.34556493530231),
    (0.8, 2.53556644736486, 2.53556644736486),
    (0.9, 2.74865360853195, 2.74865360853195),
    (1.0, 2.98722324982904, 2.98722324982904),
)

# (x, present method h=0.1, RK4 h=1e-5, RK4 h=1e-7)
TABLE2 = (
    (0.1, 1.96652400267220, 1.96652401307289, 1.96652400271259),
    (0.2, 2.10473374763406, 2.10473378177567, 2.10473374807376),
    (0.3, 2.21351635642977, 2.21351641534912, 2.21351635650173),
    (0.4, 2.29291198605060, 2.29291206256096, 2.29291198590522),
    (0.5, 2.34390221872474, 2.34390229889988, 2.34390221783419),
    (0.6, 2.36813285441244, 2.36813292036275, 2.36813285115724),
    (0.7, 2.36763255340805, 2.36763258982445, 2.36763254899136),
    (0.8, 2.34457029918107, 2.34457029110568, 2.34457029362396),
    (0.9, 2.30107218816106, 2.30107212257853, 2.30107218096084),
    (1.0, 2.23909995816732, 2.23909982596943, 2.23909994999267),
)

# reference single step 0 -> 1 on example3
EXAMPLE3_SINGLE_STEP = 2.98722397263779
EXAMPLE3_SINGLE_STEP_REL_ERR = 2.95e-7

MU_CANDIDATES = (0.05, 0.1, 0.2, 0.25, 0.5, 1.0)


@dataclass(frozen=True)
class RiccatiCoefficients:
    """y' = P + Q y + R y^2 and its normal form z' = S(x) - z^2.

    ``forward`` and ``inverse`` are expressions in x and ``Y(0)`` (standing
    for y and z respectively).
    """

    P: ex.Expr
    Q: ex.Expr
    R: ex.Expr
    invariant: ex.Expr        # S(x)
    rhs: ex.Expr              # S(x) - z^2
    original_rhs: ex.Expr     # P + Q y + R y^2
    forward: ex.Expr          # z(x, y)
    inverse: ex.Expr          # y(x, z)

    def to_z(self, x: float, y: float) -> float:
        return ex.evaluate(self.forward, x, (y,))

    def to_y(self, x: float, z: float) -> float:
        return ex.evaluate(self.inverse, x, (z,))


def riccati_transform(P, Q, R, interval: tuple[float, float] = (0.0, 1.0),
                      samples: int = 101) -> RiccatiCoefficients:
    """Normal form of a Riccati equation via z = -R y - (R'/R + Q)/2.

    R must not vanish on ``interval``; it is checked at ``samples`` points.
    """
    P, Q, R = (ex.parse(v) if isinstance(v, str) else ex.as_expr(v) for v in (P, Q, R))
    for e in (P, Q, R):
        if ex.state_indices(e):
            raise ValueError("P, Q and R must depend on x only")
    a, b = interval
    sign = None
    for i in range(samples):
        xi = a + (b - a) * i / (samples - 1)
        r = ex.evaluate(R, xi, ())
        if r == 0.0 or (sign is not None and (r > 0) != sign):
            raise DomainError(f"R vanishes on [{a}, {b}] (near x={xi:g})")
        sign = r > 0
    dR = ex.diff_expr(R, ex.x)
    d2R = ex.diff_expr(dR, ex.x)
    dQ = ex.diff_expr(Q, ex.x)
    shift = dR / R + Q
    S = 0.25 * shift**2 - 0.5 * (d2R / R - dR**2 / R**2 + dQ) - P * R
    y = z = ex.Y(0)
    return RiccatiCoefficients(
        P=P, Q=Q, R=R,
        invariant=S,
        rhs=S - z**2,
        original_rhs=P + Q * y + R * y**2,
        forward=-R * y - 0.5 * shift,
        inverse=-(z + 0.5 * shift) / R,
    )


def example3_riccati() -> RiccatiCoefficients:
    x = ex.x
    return riccati_transform(ex.exp(x) - ex.exp(3 * x), 2 * ex.exp(2 * x), -ex.exp(x))


def example3_exact_y(x: float) -> float:
    """Solution of the example-3 Riccati equation with y(0) = 1.5."""
    return math.exp(x) + 1.0 / (1.0 + math.exp(x))


def example3_printed_solution(x: float) -> float:
    """The closed form as printed, e^x + e^-x.  It solves the equation but
    through y(0) = 2, not 1.5, so it misses the tabulated values."""
    return math.exp(x) + math.exp(-x)


@dataclass(frozen=True)
class Fixture:
    name: str
    system: OdeSystem
    initial: State
    x_end: float
    h: float
    description: str = ""
    exact: Callable[[float], tuple[float, ...]] | None = None
    closed_alpha: Callable[[float, State, dict], tuple[float, ...]] | None = None
    observe: Callable[[float, Sequence[float]], float] | None = None
    observe_exact: Callable[[float], float] | None = None
    table: tuple | None = None
    riccati: RiccatiCoefficients | None = field(default=None, repr=False)

    def with_params(self, **values) -> "Fixture":
        from dataclasses import replace
        return replace(self, system=self.system.with_params(**values))


def _alpha_example1(x, s0, params):
    return (1.0 - 1.0 / x + 1.0 / math.expm1(x),)


def _alpha_example2(x, s0, params):
    return (1.0 - 1.0 / ((1.0 - x) * (2.0 + x)),)


def _alpha_oscillator(x, s0, params):
    w = params["omega"]
    y1, y2 = s0.y
    c, s = math.cos(x * w), math.sin(x * w)
    a1 = 1.0 + (w * (c - 1.0) * y1 + (s - x * w) * y2) / (x**2 * w**3 * y1) if y1 != 0.0 else math.nan
    a2 = 1.0 + ((c - 1.0) * y2 - w * (s - x * w) * y1) / (x**2 * w**2 * y2) if y2 != 0.0 else math.nan
    return (a1, a2)


def oscillator_exact(omega: float, phi0: float, v0: float = 0.0):
    def exact(x):
        c, s = math.cos(omega * x), math.sin(omega * x)
        return (phi0 * c + v0 / omega * s, -phi0 * omega * s + v0 * c)
    return exact


def example1() -> Fixture:
    return Fixture(
        name="example1",
        system=build_system([ex.exp(ex.x)], 1),
        initial=State(0.0, (1.0,)),
        x_end=1.0, h=0.1,
        description="y' = exp(x), y(0) = 1",
        exact=lambda x: (math.exp(x),),
        closed_alpha=_alpha_example1,
    )


def example2() -> Fixture:
    y = ex.Y(0)
    return Fixture(
        name="example2",
        system=build_system([y**2], 1),
        initial=State(0.0, (1.0,)),
        x_end=0.5, h=0.1,
        description="y' = y^2, y(0) = 1 (pole at x = 1)",
        exact=lambda x: (1.0 / (1.0 - x),),
        closed_alpha=_alpha_example2,
    )


def example3() -> Fixture:
    ric = example3_riccati()
    z = ex.Y(0)
    inverse = ric.inverse
    return Fixture(
        name="example3",
        system=build_system([0.25 - z**2], 1),
        initial=State(0.0, (ric.to_z(0.0, 1.5),)),
        x_end=1.0, h=0.1,
        description="Riccati normal form z' = 1/4 - z^2, z(0) = 0; observed y = inverse map",
        exact=lambda x: (0.5 * math.tanh(0.5 * x),),
        observe=lambda x, y: ex.evaluate(inverse, x, tuple(y)),
        observe_exact=example3_exact_y,
        table=TABLE1,
        riccati=ric,
    )


def example4(omega: float = 2.0, phi0: float = 1.0) -> Fixture:
    y1 = ex.Y(0)
    w = ex.Param("omega")
    sys = reduce_order(-(w**2) * y1, 2, {"omega": omega})
    return Fixture(
        name="example4",
        system=sys,
        initial=State(0.0, (phi0, 0.0)),
        x_end=1.0, h=0.1,
        description="phi'' + omega^2 phi = 0 as y1' = y2, y2' = -omega^2 y1",
        exact=oscillator_exact(omega, phi0),
        closed_alpha=_alpha_oscillator,
    )


def van_der_pol_system(mu: float = 0.1) -> OdeSystem:
    y1, y2 = ex.ys(2)
    m = ex.Param("mu")
    return reduce_order(2 * m * (1 - y1**2) * y2 - y1, 2, {"mu": mu})


def example5(mu: float = 0.1) -> Fixture:
    return Fixture(
        name="example5",
        system=van_der_pol_system(mu),
        initial=State(0.0, (1.8, 1.8)),
        x_end=1.0, h=0.1,
        description="van der Pol y1' = y2, y2' = 2 mu (1 - y1^2) y2 - y1",
        table=TABLE2,
    )


_BUILDERS = {
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "example4": example4,
    "example5": example5,
}


def fixture_catalog() -> tuple[Fixture, ...]:
    return tuple(build() for build in _BUILDERS.values())


def get_fixture(name: str) -> Fixture:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise UnsupportedFixture(f"unknown fixture {name!r}; choose from {sorted(_BUILDERS)}") from None


def closed_alpha(fixture: Fixture, x: float, state: State | None = None) -> tuple[float, ...]:
    """Closed-form weights for a single step of size ``x`` from the initial state."""
    if fixture.closed_alpha is None:
        raise UnsupportedFixture(f"no closed-form weights for {fixture.name}")
    s0 = fixture.initial if state is None else state
    return fixture.closed_alpha(x, s0, dict(fixture.system.params))


# --------------------------------------------------------------------------
# van der Pol derivative ladder, written out by hand


def vdp_hand_derivatives(y1: float, y2: float, mu: float, k: int, *, corrected: bool = False) -> float:
    """D^k f_1 for the van der Pol system, k = 1..7, from the printed formulas.

    p = 2 mu (1 - y1^2), p1 = -4 mu y1, p2 = -4 mu.  The printed k = 1 entry
    reads ``p y1 - y1``; since D f_1 = f_2 it is used as ``p y2 - y1``.

    With ``corrected`` the k = 6 and k = 7 entries get the fixes found by
    symbolic expansion: k = 6 lacks a ``-y2`` term; k = 7 lacks the
    ``-p y2 + y1`` that follows from it, and its ``p^2 p1^2 y1 y2^2``
    coefficient should be -1278 rather than -1398.
    """
    p = 2.0 * mu * (1.0 - y1**2)
    p1 = -4.0 * mu * y1
    p2 = -4.0 * mu
    if k == 1:
        return p * y2 - y1
    if k == 2:
        return p1 * y2**2 - y2 + p**2 * y2 - p * y1
    if k == 3:
        return (p2 * y2**3 + 4 * p * p1 * y2**2 + (-2 * p + p**3 - 3 * p1 * y1) * y2
                + (1 - p**2) * y1)
    if k == 4:
        return ((4 * p1**2 + 7 * p * p2) * y2**3
                + (-5 * p1 + 11 * p**2 * p1 - 6 * p2 * y1) * y2**2
                + (-13 * p * p1 * y1 + 1 - 3 * p**2 + p**4) * y2
                + 2 * p * y1 - p**3 * y1 + 3 * p1 * y1**2)
    if k == 5:
        return (15 * p1 * p2 * y2**4
                + (-11 * p2 + 34 * p * p1**2 + 32 * p**2 * p2) * y2**3
                + (-25 * p1**2 * y1 - 46 * p * p2 * y1 - 29 * p * p1 + 26 * p**3 * p1) * y2**2
                + (18 * p1 * y1 + 3 * p - 38 * p**2 * p1 * y1 - 4 * p**3 + 15 * p2 * y1**2 + p**5) * y2
                + 13 * p * p1 * y1**2 - y1 + 3 * p**2 * y1 - p**4 * y1)
    if k == 6:
        val = (15 * p2**2 * y2**5
               + (34 * p1**3 + 192 * p * p1 * p2) * y2**4
               + (-156 * p1 * p2 * y1 - 54 * p1**2 - 108 * p * p2 + 180 * p**2 * p1**2
                  + 122 * p**3 * p2) * y2**3
               + (81 * p2 * y1 + 21 * p1 - 228 * p * p1**2 * y1 - 226 * p**2 * p2 * y1
                  - 108 * p**2 * p1 + 57 * p**4 * p1) * y2**2
               + (63 * p1**2 * y1**2 + 120 * p * p2 * y1**2 + 108 * p * p1 * y1 + 6 * p**2
                  - 94 * p**3 * p1 * y1 - 5 * p**4 + p**6) * y2
               - 18 * p1 * y1**2 - 3 * p * y1 + 38 * p**2 * p1 * y1**2 + 4 * p**3 * y1
               - 15 * p2 * y1**3 - p**5 * y1)
        return val - y2 if corrected else val
    if k == 7:
        c = -1278 if corrected else -1398
        val = ((294 * p1**2 * p2 + 267 * p * p2**2) * y2**5
               + (-231 * p2**2 * y1 - 372 * p1 * p2 + 496 * p * p1**3 + 1494 * p**2 * p1 * p2) * y2**4
               + (102 * p2 - 364 * p1**3 * y1 - 2144 * p * p1 * p2 * y1 - 658 * p**2 * p2
                  + 768 * p**3 * p1**2 - 606 * p * p1**2 + 423 * p**4 * p2) * y2**3
               + (714 * p1 * p2 * y1**2 + 396 * p1**2 * y1 + 834 * p * p2 * y1 + 162 * p * p1
                  + c * p**2 * p1**2 * y1 - 912 * p**3 * p2 * y1 - 330 * p**3 * p1
                  + 120 * p**5 * p1) * y2**2
               + (-225 * p2 * y1**2 - 81 * p1 * y1 - 3 * p + 595 * p * p1**2 * y1**2
                  + 610 * p**2 * p2 * y1**2 + 412 * p**2 * p1 * y1 + 10 * p**3
                  - 213 * p**4 * p1 * y1 - 6 * p**5 + p**7) * y2
               - 63 * p1**2 * y1**3 - 120 * p * p2 * y1**3 - 108 * p * p1 * y1**2 - 6 * p**2 * y1
               + 94 * p**3 * p1 * y1**2 + 5 * p**4 * y1 - p**6 * y1)
        return val - p * y2 + y1 if corrected else val
    raise ValueError(f"ladder covers k = 1..7, got {k}")


# --------------------------------------------------------------------------
# identification of mu for the van der Pol table


@dataclass(frozen=True)
class MuIdentification:
    mu: float
    deviations: dict           # candidate -> max |rk4 - table| at x = 0.1..1.0
    error_estimate: float | None


def identify_mu(candidates: Sequence[float] = MU_CANDIDATES, h_ref: float = 1e-4,
                tol: float = 1e-6, column: int = 3) -> MuIdentification:
    """Pick the mu whose RK4 reference run reproduces a table-2 RK4 column.

    ``column`` 3 is the h = 1e-7 column, 2 the h = 1e-5 one.  Raises
    :class:`MuUnidentified` when no candidate is within ``tol``.
    """
    fx = example5()
    xs = [row[0] for row in TABLE2]
    target = [row[column] for row in TABLE2]
    deviations = {}
    best = None
    for mu in candidates:
        run = reference_solve(fx.system.with_params(mu=mu), fx.initial, 1.0, h_ref, xs,
                              estimate_error=False)
        dev = max(abs(a - b) for a, b in zip(run.ys[:, 0], target))
        deviations[mu] = dev
        if best is None or dev < deviations[best]:
            best = mu
    if best is None or deviations[best] > tol:
        raise MuUnidentified(
            "no candidate mu reproduces the table within "
            f"{tol:g}: " + ", ".join(f"mu={m:g}: {d:.3g}" for m, d in deviations.items()))
    check = reference_solve(fx.system.with_params(mu=best), fx.initial, 1.0, h_ref, xs)
    return MuIdentification(best, deviations, check.error_estimate)
