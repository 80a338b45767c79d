import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from codedcache import analytics, man
from codedcache.core import DemandVector, FileLibrary, RequiresMemorySharing


def test_two_user_example():
    lib = FileLibrary.random(2, 1024, seed=0)
    res = man.simulate(lib, man.ManConfig(2, 2, 1), DemandVector.from_files([0, 1]))
    (only,) = res.log.entries
    A, B = lib.files
    assert only.payload == bytes(x ^ y for x, y in zip(A[512:], B[:512]))
    assert res.rate == Fraction(1, 2) and not res.failures


def test_memory_sharing_rate_between_grid_points():
    lib = FileLibrary.random(4, 24, seed=1)
    res = man.simulate(lib, man.ManConfig(4, 4, Fraction(3, 2)), DemandVector.from_files(range(4)))
    assert res.rate == Fraction(13, 12) == analytics.r_man(4, 4, Fraction(3, 2))
    assert not res.failures


def test_integral_api_refuses_off_grid_memory():
    lib = FileLibrary.random(4, 24, seed=1)
    cfg = man.ManConfig(4, 4, Fraction(3, 2))
    with pytest.raises(RequiresMemorySharing):
        man.man_delivery(lib, DemandVector.from_files(range(4)), cfg)


def test_grid_rate_and_decode_exhaustive_small():
    for K, N in [(2, 2), (3, 3), (3, 4)]:
        for t in range(K + 1):
            cfg = man.ManConfig.from_t(N, K, t)
            lib = FileLibrary.random(N, math.comb(K, t), seed=t)
            for files in itertools.product(range(N), repeat=K):
                res = man.simulate(lib, cfg, DemandVector.from_files(files))
                assert res.rate == Fraction(K - t, t + 1)
                assert not res.failures


def test_placement_is_demand_oblivious():
    lib = FileLibrary.random(3, 6, seed=2)
    cfg = man.ManConfig.from_t(3, 3, 1)
    base = man.man_placement(lib, cfg)
    for files in itertools.product(range(3), repeat=3):
        res = man.simulate(lib, cfg, DemandVector.from_files(files))
        assert [c.entries == b.entries for c, b in zip(res.caches, base)] == [True] * 3


@given(
    K=st.integers(2, 5),
    num=st.integers(0, 20),
    data=st.data(),
)
def test_partial_demands_count_mode_matches_bytes(K, num, data):
    N = K
    M = Fraction(num * N, 4 * K)
    if M > N:
        M = Fraction(N)
    users = data.draw(st.sets(st.integers(0, K - 1), min_size=0, max_size=K))
    files = data.draw(st.lists(st.integers(0, N - 1), min_size=len(users), max_size=len(users)))
    dv = DemandVector(tuple(zip(sorted(users), files)))
    lib = FileLibrary.random(N, 1, seed=K)
    res = man.simulate(lib, man.ManConfig(N, K, M), dv)
    assert not res.failures
    assert res.rate == man.shared_partial_rate(N, K, M, len(users))


def test_partial_rate_is_full_rate_when_everyone_demands():
    for K in range(1, 8):
        for t in range(K + 1):
            assert man.partial_rate(K, t, K) == Fraction(K - t, t + 1)


def test_granularity_divides_both_segments():
    for K in range(2, 7):
        for q in range(1, 4 * K):
            cfg = man.ManConfig(K, K, Fraction(q, 4))
            split = man.memory_split(cfg)
            F = man.granularity(K, split)
            for _, t, w in split.segments():
                assert (w * F) % math.comb(K, t) == 0


def test_fault_injection_breaks_decode():
    lib = FileLibrary.random(3, 3, seed=4)
    res = man.simulate(lib, man.ManConfig(3, 3, 1), DemandVector.from_files([0, 1, 2]), fault_inject=True)
    assert res.failures
