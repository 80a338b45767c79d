"""Multi-access rate for several window sizes, measured on bytes, with the bound."""

import argparse
import csv
import sys
from fractions import Fraction

from codedcache import analytics, multiaccess
from codedcache.core import DemandVector, FileLibrary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=6)
    ap.add_argument("--windows", default="1,2,3")
    ap.add_argument("--steps", type=int, default=2)
    args = ap.parse_args()

    K = N = args.K
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["d", "M", "regime", "measured", "bound", "file_size"])
    for d in (int(x) for x in args.windows.split(",")):
        acc = multiaccess.CyclicAccess(K, d)
        for j in range(N * args.steps + 1):
            M = Fraction(j, args.steps)
            lib = FileLibrary.random(N, 1, seed=j)
            res = multiaccess.ma_run(lib, acc, M, DemandVector.from_files(range(K)))
            assert not res.failures
            out.writerow([d, M, multiaccess.ma_plan(N, acc, M).regime, res.rate,
                          analytics.r_ma_bound(N, K, d, M), res.file_size])


if __name__ == "__main__":
    main()
