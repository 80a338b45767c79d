"""Level-merging and memory-sharing rates for every split of the worked examples."""

import itertools

from codedcache import multilevel as ml


def main():
    su = ml.LevelSpec((100, 500, 1000), (100, 50, 5))
    everything = frozenset(range(3))
    print("single user per cache, M = 100")
    for r in range(1, 4):
        for I in itertools.combinations(range(3), r):
            part = ml.LevelPartitionSU(everything - set(I), frozenset(I))
            print(f"  I={list(I)!s:10} rate={ml.su_rate_bound(su, 100, part)}")
    print(f"  threshold rule picks {ml.su_partition(su, 100)}")

    mu = ml.LevelSpec((100, 200, 300), (10, 5, 1))
    print("multiple users per cache, K = 10, M = 100")
    for cand in ml.mu_candidates(mu, 10, 100):
        p = cand.partition
        if not cand.feasible:
            continue
        rate = ml.mu_rate_bound(mu, 10, 100, p)
        print(f"  J={sorted(p.J)} I={sorted(p.I)} H={sorted(p.H)} rate={rate:.3f} valid={cand.valid}")


if __name__ == "__main__":
    main()
