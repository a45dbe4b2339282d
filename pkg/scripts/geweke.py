"""Joint-distribution check of the Gibbs sampler on a tiny design.

Compares parameter marginals from independent prior draws with those from a
chain that alternates ``y | theta`` and one Gibbs sweep, using two-sample KS.

    python scripts/geweke.py --draws 10000 --thin 60
    python scripts/geweke.py --grid 0.5,1,2,5,10,20,50 --nu 10 --a 3 --b 1 --thin 20
"""

import argparse
import time

from scipy import stats

from htem.sampler import ETA_GRID, Hyperparameters
from htem.streams import make_stream
from htem.validation import GEWEKE_FIELDS, marginal_conditional, successive_conditional


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--draws", type=int, default=10_000)
    ap.add_argument("--thin", type=int, default=60)
    ap.add_argument("--mode", default="htem", choices=("htem", "hem", "tem"))
    ap.add_argument("--grid", default=None, help="comma-separated eta grid (default: the full grid)")
    ap.add_argument("--nu", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=2.1)
    ap.add_argument("--b", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--level", type=float, default=0.001)
    args = ap.parse_args()

    grid = ETA_GRID if args.grid is None else tuple(float(v) for v in args.grid.split(","))
    hyper = Hyperparameters(nu=args.nu, a=args.a, b=args.b, eta_grid=grid, error_mode=args.mode)
    X = make_stream(args.seed).uniform(-2.0, 2.0, (args.n, args.p))
    t0 = time.perf_counter()
    mc = marginal_conditional(X, hyper, args.draws, make_stream(args.seed + 1))
    sc = successive_conditional(X, hyper, args.draws, make_stream(args.seed + 2), thin=args.thin)
    print(f"{'field':9s} {'D':>7s} {'p':>9s} {'mean(prior)':>12s} {'mean(chain)':>12s}")
    for k in GEWEKE_FIELDS:
        r = stats.ks_2samp(mc[k], sc[k])
        flag = "" if r.pvalue >= args.level else "  <-- reject"
        print(f"{k:9s} {r.statistic:7.4f} {r.pvalue:9.3g} {mc[k].mean():12.4g} {sc[k].mean():12.4g}{flag}")
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
