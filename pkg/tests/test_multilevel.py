import math
import random
from fractions import Fraction

import pytest

from codedcache import analytics, multilevel as ml
from codedcache.core import FileLibrary, InvalidArgument


def su_levels():
    return ml.LevelSpec((100, 500, 1000), (100, 50, 5))


def test_single_user_example_values():
    levels = su_levels()
    full = frozenset(range(3))
    rates = [ml.su_rate_bound(levels, 100, ml.LevelPartitionSU(full - I, I)) for I in ({0}, {0, 1, 2}, {0, 1})]
    assert rates == [55, 15, 10]
    part = ml.su_partition(levels, 100)
    assert part.H == {2} and part.I == {0, 1}
    assert ml.su_rate_bound(levels, 100) == 10


def test_smaller_single_user_variant_gives_same_rates():
    levels = ml.LevelSpec((10, 50, 100), (100, 50, 5))
    full = frozenset(range(3))
    rates = [ml.su_rate_bound(levels, 10, ml.LevelPartitionSU(full - I, I)) for I in ({0}, {0, 1, 2}, {0, 1})]
    assert rates == [55, 15, 10]
    with pytest.raises(InvalidArgument):
        levels.check_single_user()


def test_threshold_ties_go_to_merged_set():
    levels = ml.LevelSpec((10, 20), (5, 4))
    part = ml.su_partition(levels, 2)  # 5*2 == 10 is a tie, 4*2 < 20
    assert part.I == {0} and part.H == {1}


def test_single_level_reduces_to_upper_bound():
    for N in range(1, 12):
        for K in range(1, N + 1):
            levels = ml.LevelSpec((N,), (K,))
            for q in range(1, 4 * N + 1):
                M = Fraction(q, 4)
                if N / M > K:
                    continue
                part = ml.LevelPartitionSU(frozenset(), frozenset({0}))
                assert ml.su_rate_bound(levels, M, part) == analytics.r_man_ub(N, K, M)


def spreadsheet_su(Ns, Ks, M, I):
    merged = sum(Ns[i] for i in I)
    coded = max(merged / M - 1, 0) if I else 0
    return coded + sum(Ks[h] for h in range(len(Ns)) if h not in I)


def test_random_su_instances_against_recomputation():
    rng = random.Random(3)
    for _ in range(300):
        L = rng.randint(1, 4)
        Ns = [rng.randint(1, 50) for _ in range(L)]
        Ks = [rng.randint(0, n) for n in Ns]
        M = Fraction(rng.randint(1, 40), rng.randint(1, 3))
        I = frozenset(i for i in range(L) if rng.random() < 0.5)
        part = ml.LevelPartitionSU(frozenset(range(L)) - I, I)
        got = ml.su_rate_bound(ml.LevelSpec(Ns, Ks), M, part)
        assert got == spreadsheet_su(Ns, Ks, M, I)


def test_su_simulation_decodes_and_tracks_bound():
    levels = ml.LevelSpec((10, 50, 100), (10, 5, 1))
    libs = [FileLibrary.random(n, 1, seed=i) for i, n in enumerate(levels.n_files)]
    demands = [(0, j) for j in range(10)] + [(1, j) for j in range(5)] + [(2, 0)]
    res = ml.su_simulate(libs, levels, 10, demands)
    assert not res.failures
    bound = ml.su_rate_bound(levels, 10)
    assert res.rate <= bound + 1
    assert res.rate == Fraction(85, 18)


def mu_levels():
    return ml.LevelSpec((100, 200, 300), (10, 5, 1))


def test_multi_user_example_values():
    levels = mu_levels()
    P = ml.LevelPartitionMU
    assert ml.mu_rate_bound(levels, 10, 100, P({1, 2}, set(), {0})) == 60
    assert abs(ml.mu_rate_bound(levels, 10, 100, P(set(), {0, 1, 2}, set())) - 49) <= 1.0
    assert abs(ml.mu_rate_bound(levels, 10, 100, P({2}, {0, 1}, set())) - 35) <= 0.5
    # independent evaluation of the three-level case
    s = math.sqrt(1000) + math.sqrt(1000) + math.sqrt(300)
    assert ml.mu_rate_bound(levels, 10, 100, P(set(), {0, 1, 2}, set())) == pytest.approx(s * s / 100 - 16)


def test_multi_user_partition_at_example():
    part = ml.mu_partition(mu_levels(), 10, 100)
    assert part.H == {2} and part.I == {0, 1} and not part.J
    assert part.alphas[0] == pytest.approx(0.5) and part.alphas[1] == pytest.approx(0.5)


def test_mu_allocation_uses_all_memory():
    levels = mu_levels()
    for M in (50, 100, 250, 400):
        for cand in ml.mu_candidates(levels, 10, M):
            if cand.feasible and cand.partition.I:
                assert sum(cand.partition.alphas.values()) == pytest.approx(1.0)


def test_mu_best_bound_never_above_forced_choices():
    levels = mu_levels()
    best, _ = ml.mu_best_bound(levels, 10, 100)
    assert best <= 35.0 + 1e-9


def test_mu_simulation_decodes():
    levels = ml.LevelSpec((20, 40), (2, 1))
    K = 4
    libs = [FileLibrary.random(n, 1, seed=i) for i, n in enumerate(levels.n_files)]
    demands = {0: [[0, 1, 2, 3], [4, 5, 6, 7]], 1: [[0, 1, 2, 3]]}
    part = ml.mu_partition(levels, K, 10)
    res = ml.mu_simulate(libs, levels, K, 10, demands, part)
    assert not res.failures
    assert res.rate <= ml.mu_rate_bound(levels, K, 10, part) + sum(levels.users)


def test_quantized_memory_rounds_down():
    m = ml.quantized_memory(10, 4, 3.3, 4)
    assert m <= 3.3 and (m * 4 / 10 * 4).denominator == 1
