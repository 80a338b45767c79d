from hypothesis import given
from hypothesis import strategies as st

from codedcache.matching import fcfs_match, hopcroft_karp, matching_size


def exhaustive(adj):
    best = 0

    def rec(i, used, size):
        nonlocal best
        if i == len(adj):
            best = max(best, size)
            return
        rec(i + 1, used, size)
        for v in adj[i]:
            if v not in used:
                rec(i + 1, used | {v}, size + 1)

    rec(0, frozenset(), 0)
    return best


graphs = st.integers(1, 7).flatmap(
    lambda r: st.tuples(
        st.just(r),
        st.lists(st.lists(st.integers(0, r - 1), unique=True, max_size=r), max_size=7),
    )
)


@given(graphs)
def test_hopcroft_karp_is_maximum(g):
    n_right, adj = g
    match = hopcroft_karp(adj, n_right)
    used = [v for v in match if v is not None]
    assert len(used) == len(set(used))
    assert all(v is None or v in adj[u] for u, v in enumerate(match))
    assert matching_size(match) == exhaustive(adj)


def test_fcfs_can_be_suboptimal():
    adj = [[0, 1], [0]]
    assert fcfs_match(adj) == [0, None]
    assert matching_size(hopcroft_karp(adj, 2)) == 2


def test_long_augmenting_path():
    n = 200
    adj = [[i, i + 1] if i + 1 < n else [i] for i in range(n)]
    assert matching_size(hopcroft_karp(adj, n)) == n
