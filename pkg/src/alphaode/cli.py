"""Command-line interface.

    alphaode solve --sys "pow y1 2" --y0 1 --xend 0.5 --h 0.5 --order 24
    alphaode solve --fixture example3 --h 0.1 --order 8
    alphaode table 1
    alphaode table 2 [--param mu=0.1]
    alphaode convergence --fixture example1
    alphaode compare --fixture example5 --methods alpha,heun,rk4

Exit codes: 0 success, 2 usage, 3 domain error, 4 divergent series,
5 table-2 mu identification failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from datetime import datetime, timezone
from itertools import combinations

from . import problems
from .baselines import STEPPERS, fixed_step_solve, reference_solve
from .errors import AlphaODEError, DivergentSeries, DomainError, MuUnidentified
from .report import RunReport, error_summary, to_csv, to_json
from .scheme import SolverConfig, integrate, step_grid, taylor_fallback_step
from .system import State, build_system

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_DIVERGENCE = 4
EXIT_TABLE = 5

METHODS = ("alpha", "taylor", "heun", "rk4")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _params(items) -> dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"--param expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--param {name}: {value!r} is not a number") from None
    return out


class Problem:
    """What to integrate, resolved from either --fixture or --sys."""

    def __init__(self, name, system, initial, x_end, h, fixture=None):
        self.name = name
        self.system = system
        self.initial = initial
        self.x_end = x_end
        self.h = h
        self.fixture = fixture

    @property
    def exact(self):
        return self.fixture.exact if self.fixture else None

    @property
    def observe(self):
        return self.fixture.observe if self.fixture else None

    @property
    def observe_exact(self):
        return self.fixture.observe_exact if self.fixture else None


def resolve_problem(args) -> Problem:
    params = _params(args.param)
    if args.fixture:
        if args.sys:
            raise UsageError("give either --fixture or --sys, not both")
        fx = problems.get_fixture(args.fixture)
        if params:
            fx = fx.with_params(**params)
        initial = fx.initial
        changed_ic = args.y0 is not None or args.x0 is not None
        if changed_ic:
            y0 = _floats(args.y0) if args.y0 is not None else list(initial.y)
            x0 = args.x0 if args.x0 is not None else initial.x
            initial = State(x0, y0)
            from dataclasses import replace
            # closed forms assume the fixture initial condition
            fx = replace(fx, initial=initial, exact=None, observe_exact=None, closed_alpha=None)
        x_end = fx.x_end if args.xend is None else args.xend
        h = fx.h if args.h is None else args.h
        return Problem(fx.name, fx.system, initial, x_end, h, fx)
    if not args.sys:
        raise UsageError("one of --fixture or --sys is required")
    exprs = []
    for text in args.sys:
        exprs.extend(part for part in text.split(";") if part.strip())
    system = build_system(exprs, len(exprs), params)
    if args.y0 is None:
        raise UsageError("--y0 is required with --sys")
    if args.xend is None:
        raise UsageError("--xend is required with --sys")
    x0 = 0.0 if args.x0 is None else args.x0
    h = (args.xend - x0) if args.h is None else args.h
    return Problem("custom", system, State(x0, _floats(args.y0)), args.xend, h)


def _config(args, h) -> SolverConfig:
    try:
        return SolverConfig(order=args.order, h=h, eps_den=args.eps_den, divergence=args.divergence)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _config_echo(cfg: SolverConfig, method: str) -> dict:
    echo = {"h": cfg.h}
    if method in ("alpha", "taylor"):
        echo.update(order=cfg.order)
    if method == "alpha":
        echo.update(eps_den=cfg.eps_den, divergence=cfg.divergence)
    return echo


def run_method(prob: Problem, method: str, cfg: SolverConfig):
    """Grid states (including the initial one) and alpha diagnostics (or None)."""
    if method == "alpha":
        tr = integrate(prob.system, prob.initial, prob.x_end, cfg)
        return list(tr.states), list(tr.diagnostics)
    if method == "taylor":
        h = math.copysign(abs(cfg.h), prob.x_end - prob.initial.x)
        grid = step_grid(prob.initial.x, prob.x_end, h, cfg.max_steps)
        states = [prob.initial]
        for x_next in grid[1:]:
            s = taylor_fallback_step(prob.system, states[-1], x_next - states[-1].x, cfg.order,
                                     divergence=cfg.divergence)
            states.append(State(x_next, s.y))
        return states, None
    if method in STEPPERS:
        h = math.copysign(abs(cfg.h), prob.x_end - prob.initial.x)
        return fixed_step_solve(prob.system, prob.initial, prob.x_end, h, method), None
    raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def solve_report(prob: Problem, method: str, cfg: SolverConfig) -> RunReport:
    states, diags = run_method(prob, method, cfg)
    n = prob.system.n
    cols = ["x"] + [f"y{k + 1}" for k in range(n)]
    if diags is not None:
        cols += [f"alpha{k + 1}" for k in range(n)] + [f"fallback{k + 1}" for k in range(n)] + ["tail"]
    if prob.observe:
        cols.append("obs")
    if prob.exact:
        cols += [f"exact{k + 1}" for k in range(n)] + [f"abserr{k + 1}" for k in range(n)]
    if prob.observe and prob.observe_exact:
        cols += ["obs_exact", "obs_abserr"]
    rows = []
    approx, ref, obs_pairs = [], [], []
    for i, s in enumerate(states[1:]):
        row = [s.x, *s.y]
        if diags is not None:
            d = diags[i]
            row += list(d.alpha) + [int(f) for f in d.fallback] + [max(d.tail)]
        if prob.observe:
            ob = prob.observe(s.x, s.y)
            row.append(ob)
        if prob.exact:
            ex_y = prob.exact(s.x)
            row += list(ex_y) + [abs(a - b) for a, b in zip(s.y, ex_y)]
            approx.append(s.y)
            ref.append(ex_y)
        if prob.observe and prob.observe_exact:
            oe = prob.observe_exact(s.x)
            row += [oe, abs(ob - oe)]
            obs_pairs.append((ob, oe))
        rows.append(row)
    summary = {"final_x": states[-1].x, "final_y": list(states[-1].y), "steps": len(states) - 1}
    if ref:
        summary.update(error_summary(approx, ref))
    if obs_pairs:
        summary["obs_" + "max_abs_err"] = max(abs(a - b) for a, b in obs_pairs)
    if diags is not None:
        summary["fallback_steps"] = sum(any(d.fallback) for d in diags)
        summary["max_tail"] = max(max(d.tail) for d in diags)
    return RunReport(prob.name, method, _config_echo(cfg, method), cols, rows, summary)


# --------------------------------------------------------------------------
# tables


def table1_report(order: int = 8, h: float = 0.1) -> RunReport:
    fx = problems.example3()
    tr = integrate(fx.system, fx.initial, fx.x_end, SolverConfig(order=order, h=h))
    by_x = {round(s.x, 12): s for s in tr.states}
    cols = ["x", "present", "exact", "table_present", "table_exact", "dev_present", "dev_exact"]
    rows = []
    for x, table_present, table_exact in problems.TABLE1:
        s = by_x.get(round(x, 12))
        if s is None:
            raise UsageError(f"h={h} does not land on table point x={x}")
        present = fx.observe(s.x, s.y)
        exact = problems.example3_exact_y(x)
        rows.append([x, present, exact, table_present, table_exact,
                     abs(present - table_present), abs(exact - table_exact)])
    summary = {
        "max_dev_present": max(r[5] for r in rows),
        "max_dev_exact": max(r[6] for r in rows),
        "max_present_vs_exact": max(abs(r[1] - r[2]) for r in rows),
    }
    return RunReport("example3", "alpha", {"order": order, "h": h}, cols, rows, summary)


def table2_report(order: int = 8, h: float = 0.1, mu: float | None = None,
                  rk4_h: float = 1e-5, identify_h: float = 1e-4) -> RunReport:
    summary = {}
    if mu is None:
        ident = problems.identify_mu(h_ref=identify_h)
        mu = ident.mu
        summary["mu_identified"] = True
        summary["mu_deviations"] = {format(k, "g"): v for k, v in ident.deviations.items()}
    else:
        summary["mu_identified"] = False
    fx = problems.example5(mu)
    tr = integrate(fx.system, fx.initial, fx.x_end, SolverConfig(order=order, h=h))
    xs = [row[0] for row in problems.TABLE2]
    ref = reference_solve(fx.system, fx.initial, fx.x_end, rk4_h, xs)
    by_x = {round(s.x, 12): s for s in tr.states}
    cols = ["x", "present", "rk4", "table_present", "table_rk4_h1e-5", "table_rk4_h1e-7",
            "dev_present", "dev_rk4", "present_minus_rk4"]
    rows = []
    for i, (x, pp, pr5, pr7) in enumerate(problems.TABLE2):
        s = by_x.get(round(x, 12))
        if s is None:
            raise UsageError(f"h={h} does not land on table point x={x}")
        present = s.y[0]
        rk = float(ref.ys[i, 0])
        rows.append([x, present, rk, pp, pr5, pr7, abs(present - pp), abs(rk - pr7), present - rk])
    summary.update({
        "mu": mu,
        "rk4_h": rk4_h,
        "rk4_error_estimate": ref.error_estimate,
        "max_dev_present": max(r[6] for r in rows),
        "max_dev_rk4": max(r[7] for r in rows),
        "max_present_vs_rk4": max(abs(r[8]) for r in rows),
    })
    return RunReport("example5", "alpha", {"order": order, "h": h, "mu": mu}, cols, rows, summary)


# --------------------------------------------------------------------------
# convergence and comparison studies


def _oracle(prob: Problem, xs):
    """Exact values at ``xs`` or, failing that, an RK4 reference."""
    if prob.exact:
        return [prob.exact(x) for x in xs], "exact"
    h_ref = 1e-4
    ref = reference_solve(prob.system, prob.initial, prob.x_end, h_ref, xs, estimate_error=False)
    return [tuple(row) for row in ref.ys], f"rk4 h={h_ref:g}"


def convergence_report(prob: Problem, orders, steps, order_for_steps: int, h_for_orders: float,
                       divergence: str = "error", eps_den: float = 1e-8) -> RunReport:
    cols = ["sweep", "order", "h", "steps", "max_abs_err", "max_rel_err", "rate", "diverged"]
    rows = []
    oracle_name = None

    def one(order, h):
        nonlocal oracle_name
        cfg = SolverConfig(order=order, h=h, eps_den=eps_den, divergence=divergence)
        try:
            states, _ = run_method(prob, "alpha", cfg)
        except DivergentSeries:
            return math.nan, math.nan, 0, True
        xs = [s.x for s in states[1:]]
        ref, oracle_name = _oracle(prob, xs)
        errs = error_summary([s.y for s in states[1:]], ref)
        return errs["max_abs_err"], errs["max_rel_err"], len(xs), False

    for order in orders:
        e, r, nsteps, div = one(order, h_for_orders)
        rows.append([0, order, h_for_orders, nsteps, e, r, math.nan, int(div)])
    prev = None
    for h in steps:
        e, r, nsteps, div = one(order_for_steps, h)
        rate = math.nan
        if prev is not None and e > 0 and prev[1] > 0 and math.isfinite(e):
            rate = math.log(prev[1] / e) / math.log(prev[0] / h)
        rows.append([1, order_for_steps, h, nsteps, e, r, rate, int(div)])
        prev = (h, e)
    summary = {"oracle": oracle_name, "sweep_codes": {"0": "order", "1": "step"}}
    config = {"h_for_orders": h_for_orders, "order_for_steps": order_for_steps}
    return RunReport(prob.name, "alpha", config, cols, rows, summary)


def compare_report(prob: Problem, methods, cfg: SolverConfig) -> RunReport:
    runs = {}
    for m in methods:
        states, _ = run_method(prob, m, cfg)
        runs[m] = states[1:]
    n = prob.system.n
    first = runs[methods[0]]
    xs = [s.x for s in first]
    cols = ["x"] + [f"{m}_y{k + 1}" for m in methods for k in range(n)]
    pairs = list(combinations(methods, 2))
    cols += [f"dev_{a}_{b}" for a, b in pairs]
    if prob.exact:
        cols += [f"exact_y{k + 1}" for k in range(n)] + [f"err_{m}" for m in methods]
    rows = []
    for i, x in enumerate(xs):
        row = [x]
        for m in methods:
            row += list(runs[m][i].y)
        for a, b in pairs:
            row.append(max(abs(u - v) for u, v in zip(runs[a][i].y, runs[b][i].y)))
        if prob.exact:
            ex_y = prob.exact(x)
            row += list(ex_y)
            row += [max(abs(u - v) for u, v in zip(runs[m][i].y, ex_y)) for m in methods]
        rows.append(row)
    summary = {f"max_dev_{a}_{b}": max(r[cols.index(f"dev_{a}_{b}")] for r in rows) for a, b in pairs}
    if prob.exact:
        for m in methods:
            summary[f"max_err_{m}"] = max(r[cols.index(f"err_{m}")] for r in rows)
    config = {"methods": ",".join(methods), "h": cfg.h, "order": cfg.order}
    return RunReport(prob.name, "compare", config, cols, rows, summary)


# --------------------------------------------------------------------------
# argument parsing


def _add_problem_args(p):
    p.add_argument("--sys", action="append", help="right-hand side in prefix notation; "
                   "repeat or separate with ';' for systems")
    p.add_argument("--fixture", choices=sorted(problems._BUILDERS))
    p.add_argument("--y0", help="initial state, comma separated")
    p.add_argument("--x0", type=float)
    p.add_argument("--xend", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--param", action="append", metavar="NAME=VALUE")


def _add_solver_args(p, order=8):
    p.add_argument("--order", type=int, default=order, help="truncation order M")
    p.add_argument("--eps-den", type=float, default=1e-8, help="relative denominator guard")
    p.add_argument("--divergence", choices=("error", "halve-step-hint"), default="error")


def _add_output_args(p):
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--timestamp", action="store_true", help="add a generation time to the metadata")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alphaode", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="integrate one problem")
    _add_problem_args(p)
    _add_solver_args(p)
    p.add_argument("--method", choices=METHODS, default="alpha")
    _add_output_args(p)

    p = sub.add_parser("table", help="reproduce a reference table (1: Riccati, 2: van der Pol)")
    p.add_argument("which", type=int, choices=(1, 2))
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="table 2: mu=VALUE skips identification")
    p.add_argument("--rk4-h", type=float, default=1e-5)
    p.add_argument("--identify-h", type=float, default=1e-4)
    _add_output_args(p)

    p = sub.add_parser("convergence", help="error vs truncation order and vs step size")
    _add_problem_args(p)
    _add_solver_args(p)
    p.add_argument("--orders", default="2,3,4,5,6,7,8,9,10,11,12")
    p.add_argument("--steps", default="0.2,0.1,0.05,0.025")
    _add_output_args(p)

    p = sub.add_parser("compare", help="align several methods on one grid")
    _add_problem_args(p)
    _add_solver_args(p)
    p.add_argument("--methods", default="alpha,heun,rk4")
    _add_output_args(p)
    return parser


def _emit(report: RunReport, args, out) -> None:
    meta = None
    if args.timestamp:
        meta = {"generated": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    text = to_json(report, meta) if args.format == "json" else to_csv(report, meta)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)


def _dispatch(args) -> RunReport:
    if args.command == "solve":
        prob = resolve_problem(args)
        return solve_report(prob, args.method, _config(args, prob.h))
    if args.command == "table":
        params = _params(args.param)
        if args.which == 1:
            return table1_report(args.order, args.h)
        return table2_report(args.order, args.h, params.get("mu"), args.rk4_h, args.identify_h)
    if args.command == "convergence":
        prob = resolve_problem(args)
        orders = [int(v) for v in _floats(args.orders)]
        steps = _floats(args.steps)
        return convergence_report(prob, orders, steps, args.order, prob.h, args.divergence, args.eps_den)
    if args.command == "compare":
        prob = resolve_problem(args)
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
        return compare_report(prob, methods, _config(args, prob.h))
    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    try:
        report = _dispatch(args)
    except DivergentSeries as e:
        print(f"alphaode: divergent series: {e}", file=err)
        return EXIT_DIVERGENCE
    except DomainError as e:
        print(f"alphaode: domain error: {e}", file=err)
        return EXIT_DOMAIN
    except MuUnidentified as e:
        print(f"alphaode: {e}", file=err)
        return EXIT_TABLE
    except (UsageError, AlphaODEError, ValueError) as e:
        print(f"alphaode: {e}", file=err)
        return EXIT_USAGE
    _emit(report, args, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
