import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from codedcache import analytics as an
from codedcache.core import InvalidArgument


def test_r_man_points():
    assert an.r_man(2, 2, 1) == Fraction(1, 2)
    assert an.r_man(5, 3, 5) == 0
    assert an.r_man(4, 4, Fraction(3, 2)) == Fraction(13, 12)
    assert an.r_man(4, 4, 0) == 4


def test_r_man_convex_and_decreasing():
    for N, K in itertools.product(range(1, 7), range(1, 7)):
        xs = [Fraction(j * N, 4 * K) for j in range(4 * K + 1)]
        ys = [an.r_man(N, K, x) for x in xs]
        assert all(a >= b for a, b in zip(ys, ys[1:]))
        assert all(ys[i - 1] + ys[i + 1] >= 2 * ys[i] for i in range(1, len(ys) - 1))


def test_upper_bound_dominates_on_grid():
    # min{2, 2}(1 - 1/2); the achievable rate itself is 1/2
    assert an.r_man_ub(2, 2, 1) == 1
    assert an.r_man_ub(4, 4, 4) == 0
    assert an.r_man_ub(4, 3, 0) == 3
    for N, K in itertools.product(range(1, 9), range(1, 9)):
        if N < K:
            continue
        for M, R in an.man_grid_points(N, K):
            assert an.r_man_ub(N, K, M) >= R


def test_r_dec():
    assert an.r_dec(4, 4, 1) == Fraction(525, 256)
    assert an.r_dec(5, 3, 5) == 0
    assert an.r_dec(6, 1, 2) == 1 - Fraction(2, 6)
    assert an.r_dec(3, 5, 0) == 3


def test_decentralized_never_beats_centralized():
    # the grid rates (K-t)/(t+1) are worst-case rates, which need N >= K
    for N, K in itertools.product(range(1, 11), range(1, 11)):
        if N < K:
            continue
        for M, R in an.man_grid_points(N, K):
            assert an.r_dec(N, K, M) >= R


def test_adaptive_constants():
    assert an.alpha_const(0.25) == pytest.approx(math.log(2) - 0.5)
    assert an.h_const(0.25) == pytest.approx(4 * math.log(4) - 3)
    assert an.excess_bound(1, 0.1) == pytest.approx(1 / math.sqrt(2 * math.pi))
    with pytest.raises(InvalidArgument):
        an.alpha_const(0.5)


def test_pam_bound_regimes():
    assert an.pam_bound(256, 256, 64, 0.25, 3) == 0.25 * 256
    at = an.pam_bound(256, 256, 64, 0.25, 4)
    assert at == pytest.approx(256 * 4 * math.exp(-0.25 * an.h_const(0.25) * 1))


def test_chi_and_hcm_bound():
    assert an.chi(256, 64, 0.25, 0.1) == 1
    with pytest.raises(an.DegenerateColoring):
        an.hcm_bound(256, 256, 4, 0.25, 0.1, 16)
    # with one color HCM and PCD bounds coincide below N
    for M in (16, 32, 64, 128):
        assert an.hcm_bound(256, 256, 64, 0.25, 0.1, M) == pytest.approx(
            an.pcd_bound(256, 256, 64, 0.25, 0.1, M)
        )
    assert an.hcm_bound(256, 256, 64, 0.25, 0.1, 256) == an.excess_bound(256, 0.1)


def test_multiaccess_bound():
    assert an.r_ma_bound(6, 6, 2, 3) == 0
    assert an.r_ma_bound(6, 6, 2, 2) == 4
    for M in (Fraction(1, 2), 1, 2, 3):
        assert an.r_ma_bound(6, 4, 1, M) == 4 * an.r_man_ub(6, 4, M)


def test_dof():
    assert an.dof(10, 2, 2, 0) == Fraction(4, 3)
    assert an.dof(7, 4, 3, 0) == Fraction(12, 6)
    assert an.dof(3, 3, 3, 1) == Fraction(27, 7)
    assert an.dof(3, 3, 3, 3) == math.inf


def brute_lower_hull(points, x):
    best = math.inf
    for (x0, y0), (x1, y1) in itertools.product(points, repeat=2):
        if x0 == x1 == x:
            best = min(best, y0)
        elif x0 < x < x1:
            best = min(best, y0 + (y1 - y0) * (x - x0) / (x1 - x0))
        elif x0 == x:
            best = min(best, y0)
    return best


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 50)), min_size=2, max_size=8,
                unique_by=lambda p: p[0]))
def test_envelope_matches_brute_force(raw):
    points = [(Fraction(x), Fraction(y)) for x, y in raw]
    env = an.convex_envelope(points)
    lo, hi = min(p[0] for p in points), max(p[0] for p in points)
    for q in range(int(lo) * 3, int(hi) * 3 + 1):
        x = Fraction(q, 3)
        assert env(x) == brute_lower_hull(points, x)
    assert env(lo - 5) == env(lo) and env(hi + 5) == env(hi)


def test_envelope_of_man_grid_is_identity():
    env = an.convex_envelope(an.man_grid_points(6, 4))
    for q in range(0, 25):
        M = Fraction(q, 4)
        assert env(M) == an.r_man(6, 4, M)


def test_envelope_rejects_conflicting_duplicates():
    with pytest.raises(InvalidArgument):
        an.convex_envelope([(0, 1), (0, 2), (1, 0)])
    with pytest.raises(InvalidArgument):
        an.convex_envelope([(0, 1)])
