"""Mean decentralized rate over seeds as the file size grows."""

import argparse
import csv
import sys

import numpy as np

from codedcache import analytics, decentralized
from codedcache.core import DemandVector, FileLibrary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=4)
    ap.add_argument("--K", type=int, default=4)
    ap.add_argument("--M", type=float, default=1.0)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--sizes", default="100,1000,10000,100000")
    args = ap.parse_args()

    target = float(analytics.r_dec(args.N, args.K, args.M))
    demands = DemandVector.from_files([k % args.N for k in range(args.K)])
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["file_size", "mean_rate", "std_err", "r_dec", "rel_gap", "decode_failures"])
    for F in (int(x) for x in args.sizes.split(",")):
        lib = FileLibrary.random(args.N, F, seed=F)
        rates, fails = [], 0
        for s in range(args.seeds):
            res = decentralized.simulate(lib, args.K, args.M, demands, seed=s)
            rates.append(float(res.rate))
            fails += len(res.failures)
        mean = float(np.mean(rates))
        se = float(np.std(rates, ddof=1) / np.sqrt(len(rates)))
        out.writerow([F, f"{mean:.6f}", f"{se:.6f}", f"{target:.6f}", f"{(mean - target) / target:.4%}", fails])


if __name__ == "__main__":
    main()
