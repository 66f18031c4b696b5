"""Error against truncation order and step size for every fixture with an oracle.

    python3 scripts/convergence_study.py --outdir results
"""

import argparse
from pathlib import Path

from alphaode.cli import Problem, convergence_report
from alphaode.problems import fixture_catalog
from alphaode.report import to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--orders", default="2,3,4,5,6,7,8,10,12,16")
    ap.add_argument("--steps", default="0.25,0.125,0.0625")
    ap.add_argument("--order", type=int, default=8, help="M for the step sweep")
    args = ap.parse_args()
    orders = [int(v) for v in args.orders.split(",")]
    steps = [float(v) for v in args.steps.split(",")]
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for fx in fixture_catalog():
        prob = Problem(fx.name, fx.system, fx.initial, fx.x_end, fx.h, fx)
        rep = convergence_report(prob, orders, steps, args.order, fx.h, divergence="halve-step-hint")
        (out / f"convergence_{fx.name}.csv").write_text(to_csv(rep))
        by_order = [r for r in rep.rows if r[0] == 0]
        by_step = [r for r in rep.rows if r[0] == 1]
        print(f"{fx.name} ({rep.summary['oracle']})")
        print("    M:   " + "  ".join(f"{int(r[1])}:{r[4]:.1e}" for r in by_order))
        print("    h:   " + "  ".join(f"{r[2]:g}:{r[4]:.1e} (rate {r[6]:.2f})" for r in by_step))


if __name__ == "__main__":
    main()
