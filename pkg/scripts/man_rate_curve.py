"""Measured centralized rate against the formula on a fine M grid (distinct demands)."""

import argparse
import csv
import sys
from fractions import Fraction

from codedcache import analytics, man
from codedcache.core import DemandVector, FileLibrary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=6)
    ap.add_argument("--K", type=int, default=4)
    ap.add_argument("--steps", type=int, default=4, help="grid points per N/K")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["M", "measured", "r_man", "r_man_ub", "r_dec", "file_size"])
    lib = FileLibrary.random(args.N, 1, seed=args.seed)
    demands = DemandVector.from_files([k % args.N for k in range(args.K)])
    for j in range(args.K * args.steps + 1):
        M = Fraction(j * args.N, args.K * args.steps)
        res = man.simulate(lib, man.ManConfig(args.N, args.K, M), demands)
        assert not res.failures
        out.writerow([M, res.rate, analytics.r_man(args.N, args.K, M),
                      analytics.r_man_ub(args.N, args.K, M), float(analytics.r_dec(args.N, args.K, M)),
                      res.file_size])


if __name__ == "__main__":
    main()
