from fractions import Fraction

import numpy as np
import pytest

from codedcache import analytics, decentralized as dec
from codedcache.core import DemandVector, FileLibrary, InvalidArgument


def test_small_run_decodes_and_lands_near_formula():
    lib = FileLibrary.random(4, 20_000, seed=0)
    rates = []
    for seed in range(3):
        res = dec.simulate(lib, 4, 1, DemandVector.from_files(range(4)), seed)
        assert not res.failures
        rates.append(float(res.rate))
    assert np.mean(rates) == pytest.approx(float(analytics.r_dec(4, 4, 1)), rel=0.05)


def test_partial_and_repeated_demands_decode():
    lib = FileLibrary.random(3, 500, seed=1)
    for files in [(0, 0, 0), (2, 2, 1)]:
        res = dec.simulate(lib, 3, Fraction(3, 2), DemandVector.from_files(files), seed=5)
        assert not res.failures
    res = dec.simulate(lib, 4, 1, DemandVector(((1, 2), (3, 0))), seed=2)
    assert not res.failures


def test_extremes():
    lib = FileLibrary.random(2, 64, seed=2)
    full = dec.simulate(lib, 3, 2, DemandVector.from_files([0, 1, 0]), seed=0)
    assert full.rate == 0 and not full.failures
    empty = dec.simulate(lib, 3, 0, DemandVector.from_files([0, 1, 0]), seed=0)
    assert not empty.failures
    assert empty.rate == 3  # nothing cached: one whole file per user


def test_sample_count_respects_budget():
    lib = FileLibrary.random(3, 101, seed=3)
    caches, index = dec.dec_placement(lib, 5, Fraction(7, 5), seed=1)
    for c in caches:
        assert c.used_bytes <= c.budget_bytes
    per_file = index.bits_per_file
    assert per_file == dec.sample_count(3, 101, Fraction(7, 5))
    for k in range(5):
        for f in range(3):
            assert len(index.positions(k, f)) == per_file


def test_placement_seeded():
    lib = FileLibrary.random(2, 50, seed=4)
    a = dec.dec_placement(lib, 3, 1, seed=9)[0]
    b = dec.dec_placement(lib, 3, 1, seed=9)[0]
    assert [x.entries == y.entries for x, y in zip(a, b)] == [True] * 3
    with pytest.raises(InvalidArgument):
        dec.dec_placement(lib, 65, 1, seed=0)
