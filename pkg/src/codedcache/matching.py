"""Bipartite matching: Hopcroft-Karp for maximum cardinality, plus first-come-first-served."""

from __future__ import annotations

from collections import deque
from typing import Sequence

_INF = float("inf")


def hopcroft_karp(adj: Sequence[Sequence[int]], n_right: int) -> list[int | None]:
    """Maximum matching of left vertices 0..len(adj)-1 onto right vertices 0..n_right-1.

    Returns `match[u]`, the right vertex of left vertex u or None.
    """
    n_left = len(adj)
    match_l: list[int | None] = [None] * n_left
    match_r: list[int | None] = [None] * n_right
    dist = [0.0] * n_left

    def bfs() -> bool:
        queue = deque()
        for u in range(n_left):
            if match_l[u] is None:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = _INF
        found = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w is None:
                    found = True
                elif dist[w] == _INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(u: int) -> bool:
        # iterative DFS along the layered graph
        stack = [(u, iter(adj[u]))]
        path = []
        while stack:
            node, it = stack[-1]
            advanced = False
            for v in it:
                w = match_r[v]
                if w is None:
                    path.append((node, v))
                    for a, b in path:
                        match_l[a] = b
                        match_r[b] = a
                    return True
                if dist[w] == dist[node] + 1:
                    path.append((node, v))
                    stack.append((w, iter(adj[w])))
                    advanced = True
                    break
            if not advanced:
                dist[node] = _INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        for u in range(n_left):
            if match_l[u] is None:
                dfs(u)
    return match_l


def matching_size(match: Sequence[int | None]) -> int:
    return sum(m is not None for m in match)


def fcfs_match(adj: Sequence[Sequence[int]]) -> list[int | None]:
    """Each left vertex in order takes its first free neighbour."""
    taken = set()
    out: list[int | None] = []
    for nbrs in adj:
        pick = next((v for v in nbrs if v not in taken), None)
        if pick is not None:
            taken.add(pick)
        out.append(pick)
    return out
