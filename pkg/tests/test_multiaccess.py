import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from codedcache import analytics, man
from codedcache import multiaccess as ma
from codedcache.core import DemandVector, FileLibrary, InvalidArgument


def rand_bytes(n, seed):
    return np.random.default_rng(seed).integers(0, 256, size=n, dtype=np.uint8).tobytes()


def test_systematic_and_repetition_codes():
    data = rand_bytes(60, 0)
    plain = ma.mds_encode(data, 5, 5)
    assert b"".join(plain.shares) == data
    rep = ma.mds_encode(data, 5, 1)
    assert all(s == data for s in rep.shares)


def test_every_triple_decodes():
    data = rand_bytes(300, 1)
    shares = ma.mds_encode(data, 6, 3).shares
    for ids in itertools.combinations(range(6), 3):
        assert ma.mds_decode({i: shares[i] for i in ids}, 6, 3) == data


@given(K=st.integers(1, 8), data=st.data())
def test_any_d_shares_decode(K, data):
    d = data.draw(st.integers(1, K))
    payload = data.draw(st.binary(min_size=d, max_size=d * 8).filter(lambda b: len(b) % d == 0))
    shares = ma.mds_encode(payload, K, d).shares
    ids = data.draw(st.permutations(range(K)))[:d]
    assert ma.mds_decode([(i, shares[i]) for i in ids], K, d) == payload


def test_share_errors():
    shares = ma.mds_encode(bytes(6), 4, 3).shares
    with pytest.raises(ma.InsufficientShares):
        ma.mds_decode({0: shares[0], 1: shares[1]}, 4, 3)
    with pytest.raises(InvalidArgument):
        ma.mds_decode([(0, shares[0]), (0, shares[0]), (1, shares[1])], 4, 3)
    with pytest.raises(InvalidArgument):
        ma.mds_encode(bytes(6), 256, 3)
    with pytest.raises(InvalidArgument):
        ma.mds_encode(bytes(5), 4, 3)


def test_regimes():
    acc = ma.CyclicAccess(6, 2)
    assert ma.ma_plan(6, acc, Fraction(3, 2)).regime == "A"
    plan = ma.ma_plan(6, acc, 2)
    assert plan.regime == "B" and plan.lam == Fraction(2, 3)
    assert ma.ma_plan(6, acc, 3).regime == "C"


def test_regime_b_example_rate():
    acc = ma.CyclicAccess(6, 2)
    lib = FileLibrary.random(6, 1, seed=0)
    res = ma.ma_run(lib, acc, 2, DemandVector.from_files(range(6)))
    assert not res.failures
    # lam = 2/3 of each file runs the single-cache scheme at N/(2d) = 3/2
    assert res.rate == Fraction(2, 3) * analytics.r_man(6, 6, Fraction(3, 2)) == Fraction(23, 18)
    assert res.rate <= analytics.r_ma_bound(6, 6, 2, 2)


def test_budget_is_exact_in_mds_regime():
    acc = ma.CyclicAccess(5, 2)
    lib = FileLibrary.random(5, 4, seed=1)
    caches = ma.ma_placement(lib, acc, Fraction(5, 2))
    assert all(c.used_bytes == c.budget_bytes for c in caches)


def test_decoder_sees_only_its_window():
    acc = ma.CyclicAccess(4, 2)
    lib = FileLibrary.random(4, 2, seed=2)
    caches = ma.ma_placement(lib, acc, 2)
    log = ma.ma_delivery(lib, acc, 2, DemandVector.from_files(range(4)))
    assert acc.caches_of(3) == (3, 0)
    assert ma.ma_decode(3, 1, {3: caches[3], 0: caches[0]}, log, acc, 2, 4) == lib.files[1]
    with pytest.raises(InvalidArgument):
        ma.ma_decode(3, 1, {3: caches[3], 1: caches[1]}, log, acc, 2, 4)


def test_exhaustive_demands_small():
    for K in (3, 4):
        N = K
        for d in (1, 2, 3):
            acc = ma.CyclicAccess(K, d)
            for M in (Fraction(1, 2), 1, Fraction(3, 2), Fraction(N, d)):
                lib = FileLibrary.random(N, 1, seed=K * d)
                for files in itertools.product(range(N), repeat=K):
                    res = ma.ma_run(lib, acc, M, DemandVector.from_files(files))
                    assert not res.failures


def test_monotone_and_bounded_on_grid():
    for K in (4, 5, 6):
        for d in (1, 2, 3):
            acc = ma.CyclicAccess(K, d)
            rates = []
            for j in range(0, 4 * K + 1):
                M = Fraction(j, 4)
                rates.append(ma.ma_rate(K, acc, M))
                if 0 < d * M < K:
                    assert rates[-1] <= analytics.r_ma_bound(K, K, d, M)
                if d * M >= K:
                    assert rates[-1] == 0
            assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_single_window_matches_centralized_trace():
    acc = ma.CyclicAccess(5, 1)
    for M in (0, Fraction(1, 2), 2, Fraction(7, 2), 5):
        lib = FileLibrary.random(5, 3, seed=3)
        dv = DemandVector.from_files([4, 0, 0, 2, 1])
        a = ma.ma_run(lib, acc, M, dv)
        b = man.simulate(lib, man.ManConfig(5, 5, M), dv)
        assert a.log.fingerprint() == b.log.fingerprint()
