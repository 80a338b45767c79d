import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from codedcache.core import (
    BudgetExceeded,
    CacheContent,
    DemandVector,
    FileLibrary,
    InvalidArgument,
    SubfileId,
    Transmission,
    TransmissionLog,
    measured_rate,
    padded_size,
    subsets_of_size,
    xor_bytes,
)


def bitmask_subsets(k, t):
    """Independent oracle: scan all 2^k masks."""
    out = [tuple(i for i in range(k) if m >> i & 1) for m in range(1 << k)]
    return sorted(s for s in out if len(s) == t)


def test_subsets_small_cases():
    assert subsets_of_size(3, 2) == [(0, 1), (0, 2), (1, 2)]
    assert subsets_of_size(4, 0) == [()]
    six = subsets_of_size(6, 3)
    assert len(six) == 20 and six[0] == (0, 1, 2)


def test_subset_counts_against_bitmasks():
    for k in range(13):
        for t in range(k + 1):
            got = subsets_of_size(k, t)
            assert len(got) == math.comb(k, t)
            if k <= 8:
                assert got == bitmask_subsets(k, t)


def test_subsets_rejects_t_above_k():
    with pytest.raises(InvalidArgument):
        subsets_of_size(2, 3)


def test_xor_examples():
    assert xor_bytes([b"\xff", b"\x0f"]) == b"\xf0"
    assert xor_bytes([b"abc"]) == b"abc"
    assert xor_bytes([b"\x01\x02", b"\x01"]) == b"\x00\x02"
    with pytest.raises(InvalidArgument):
        xor_bytes([])


@given(st.binary(min_size=1, max_size=64), st.data())
def test_xor_cancels(a, data):
    b = data.draw(st.binary(min_size=len(a), max_size=len(a)))
    assert xor_bytes([a, b, a]) == b


@given(st.lists(st.binary(max_size=20), min_size=1, max_size=5))
def test_xor_length_is_max(parts):
    assert len(xor_bytes(parts)) == max(len(p) for p in parts)


def test_measured_rate():
    log = TransmissionLog((Transmission("x", bytes(512)),))
    assert measured_rate(log, 1024) == Fraction(1, 2)
    assert measured_rate(TransmissionLog(), 10) == 0
    assert log.total_bytes == 512


def test_library_invariants():
    lib = FileLibrary.random(3, 7, seed=1)
    assert lib.n_files == 3 and lib.file_size == 7
    assert FileLibrary.random(3, 7, seed=1) == lib
    with pytest.raises(InvalidArgument):
        FileLibrary((b"ab", b"a"))
    padded = lib.padded(4)
    assert padded.file_size == 8 and padded.files[0][:7] == lib.files[0]
    assert padded_size(8, 4) == 8


def test_cache_budget_enforced():
    sid = SubfileId(0, (1, 0))
    assert sid.subset == (0, 1)
    c = CacheContent(0, Fraction(4), {sid: b"abcd"})
    assert c.used_bytes == 4 and sid in c
    with pytest.raises(BudgetExceeded):
        CacheContent(0, Fraction(3), {sid: b"abcd"})
    assert c.corrupted()[sid] != b"abcd"


def test_demand_vector_checks():
    dv = DemandVector.from_files([1, 0])
    assert dv.as_dict() == {0: 1, 1: 0}
    with pytest.raises(InvalidArgument):
        dv.validate(1)
    with pytest.raises(InvalidArgument):
        DemandVector(((0, 1), (0, 2)))
