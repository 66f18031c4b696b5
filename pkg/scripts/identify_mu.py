"""Which damping parameter reproduces the van der Pol table?

Integrates the system with RK4 for each candidate and reports the largest
deviation from the tabulated h = 1e-7 and h = 1e-5 RK4 columns.
"""

import argparse

from alphaode.errors import MuUnidentified
from alphaode.problems import MU_CANDIDATES, identify_mu


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--candidates", default=",".join(str(m) for m in MU_CANDIDATES))
    ap.add_argument("--h-ref", type=float, default=1e-4)
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args()
    cands = [float(v) for v in args.candidates.split(",")]
    for column, label in ((3, "h=1e-7"), (2, "h=1e-5")):
        try:
            res = identify_mu(cands, args.h_ref, args.tol, column)
            print(f"column {label}: mu = {res.mu:g} (reference error estimate {res.error_estimate:.1e})")
            for mu, dev in res.deviations.items():
                print(f"    mu={mu:<5g} max dev {dev:.3e}")
        except MuUnidentified as err:
            print(f"column {label}: {err}")


if __name__ == "__main__":
    main()
