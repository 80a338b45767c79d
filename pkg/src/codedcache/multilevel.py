"""Multi-level popularity: level merging (one user per cache) and memory sharing
across levels (many users per cache, served row by row).

Levels are indexed from 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import man
from .core import (
    CacheContent,
    CodedCacheError,
    DecodeFailure,
    FileLibrary,
    InvalidArgument,
    RunResult,
    Transmission,
    TransmissionLog,
    lcm_all,
)


class NoValidPartition(CodedCacheError):
    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class AmbiguousPartition(CodedCacheError):
    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


@dataclass(frozen=True)
class LevelSpec:
    """`users[i]` is K_i (total users) in the single-user setup and U_i (users per
    cache) in the multi-user setup."""

    n_files: tuple[int, ...]
    users: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "n_files", tuple(int(n) for n in self.n_files))
        object.__setattr__(self, "users", tuple(int(u) for u in self.users))
        if len(self.n_files) != len(self.users) or not self.n_files:
            raise InvalidArgument("need one (N_i, users_i) pair per level")
        if any(n < 1 for n in self.n_files) or any(u < 0 for u in self.users):
            raise InvalidArgument("N_i must be >= 1 and user counts >= 0")

    @property
    def n_levels(self) -> int:
        return len(self.n_files)

    def check_single_user(self) -> None:
        for i, (n, k) in enumerate(zip(self.n_files, self.users)):
            if n < k:
                raise InvalidArgument(f"level {i}: N_i = {n} < K_i = {k}")

    def check_multi_user(self, n_caches: int) -> None:
        for i, (n, u) in enumerate(zip(self.n_files, self.users)):
            if u < 1:
                raise InvalidArgument(f"level {i}: U_i must be >= 1")
            if n < n_caches * u:
                raise InvalidArgument(f"level {i}: N_i = {n} < K U_i = {n_caches * u}")


@dataclass(frozen=True)
class LevelPartitionSU:
    H: frozenset
    I: frozenset

    def __post_init__(self):
        object.__setattr__(self, "H", frozenset(self.H))
        object.__setattr__(self, "I", frozenset(self.I))


@dataclass(frozen=True)
class LevelPartitionMU:
    H: frozenset
    I: frozenset
    J: frozenset
    tilde_m: Optional[float] = None
    alphas: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("H", "I", "J"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if self.H & self.I or self.H & self.J or self.I & self.J:
            raise InvalidArgument("H, I, J must be disjoint")


# single user per cache -----------------------------------------------------


def su_partition(levels: LevelSpec, M) -> LevelPartitionSU:
    """H = {h : K_h/N_h < 1/M}; ties go to I.  With M = 0 nothing can be stored."""
    M = Fraction(M)
    everything = range(levels.n_levels)
    if M <= 0:
        return LevelPartitionSU(frozenset(everything), frozenset())
    H = {h for h in everything if levels.users[h] * M < levels.n_files[h]}
    return LevelPartitionSU(frozenset(H), frozenset(everything) - H)


def su_rate_bound(levels: LevelSpec, M, partition: Optional[LevelPartitionSU] = None) -> Fraction:
    """max{sum_I N_i / M - 1, 0} + sum_H K_h."""
    M = Fraction(M)
    if partition is None:
        partition = su_partition(levels, M)
    unicast = sum(levels.users[h] for h in partition.H)
    n_merged = sum(levels.n_files[i] for i in partition.I)
    if n_merged == 0:
        return Fraction(unicast)
    if M <= 0:
        raise InvalidArgument("coded part needs M > 0")
    return max(Fraction(n_merged) / M - 1, Fraction(0)) + unicast


def _equal_sizes(libraries: Sequence[FileLibrary]) -> int:
    sizes = {lib.file_size for lib in libraries}
    if len(sizes) != 1:
        raise InvalidArgument("all levels must share one file size")
    return sizes.pop()


def su_simulate(
    libraries: Sequence[FileLibrary],
    levels: LevelSpec,
    M,
    demands: Sequence[tuple[int, int]],
    partition: Optional[LevelPartitionSU] = None,
    fault_inject: bool = False,
) -> RunResult:
    """Run level merging end to end.

    `demands[k] = (level, file)` is the request of the user at cache k; exactly
    K_i users must ask for level i.  Levels in I are merged into one library that
    runs the centralized scheme with memory M over all caches; users asking for
    an H file take part in that delivery with a dummy request (merged file 0) and
    receive their own file uncoded, once per distinct file.
    """
    M = Fraction(M)
    levels.check_single_user()
    if len(libraries) != levels.n_levels:
        raise InvalidArgument("need one library per level")
    for i, lib in enumerate(libraries):
        if lib.n_files != levels.n_files[i]:
            raise InvalidArgument(f"level {i}: library has {lib.n_files} files")
    K = sum(levels.users)
    if len(demands) != K:
        raise InvalidArgument(f"need one demand per cache (K = {K}), got {len(demands)}")
    counts = [0] * levels.n_levels
    for lvl, f in demands:
        if not 0 <= lvl < levels.n_levels or not 0 <= f < levels.n_files[lvl]:
            raise InvalidArgument(f"bad demand ({lvl}, {f})")
        counts[lvl] += 1
    if tuple(counts) != levels.users:
        raise InvalidArgument(f"per-level demand counts {counts} != K_i {levels.users}")

    if partition is None:
        partition = su_partition(levels, M)
    merged_ids = {}
    for lvl in sorted(partition.I):
        for f in range(levels.n_files[lvl]):
            merged_ids[(lvl, f)] = len(merged_ids)
    n_merged = len(merged_ids)

    _equal_sizes(libraries)
    cfg = None
    grain = 1
    if n_merged:
        cfg = man.ManConfig(n_merged, K, min(M, Fraction(n_merged)))
        grain = man.granularity(K, man.memory_split(cfg))
    libs = [lib.padded(grain) for lib in libraries]
    F = libs[0].file_size

    stores: list[dict] = [{} for _ in range(K)]
    entries = []
    if cfg is not None:
        merged = {mid: libs[lvl].files[f] for (lvl, f), mid in merged_ids.items()}
        split = man.memory_split(cfg)
        stores = man.place_split(merged, K, split)
        coded = {k: merged_ids.get(dem, 0) for k, dem in enumerate(demands)}
        entries.extend(man.deliver_split(merged, K, split, coded))
    caches = [CacheContent(k, M * F, s) for k, s in enumerate(stores)]
    if fault_inject:
        caches[0] = caches[0].corrupted()
    sent = set()
    for lvl, f in demands:
        if lvl in partition.H and (lvl, f) not in sent:
            sent.add((lvl, f))
            entries.append(
                Transmission(f"direct L{lvl} f{f}", libs[lvl].files[f], (), ("direct", lvl, f))
            )
    log = TransmissionLog(entries)

    index = log.by_key()
    decoded, expected = {}, {}
    for k, (lvl, f) in enumerate(demands):
        expected[k] = libs[lvl].files[f]
        try:
            if lvl in partition.H:
                decoded[k] = index[("direct", lvl, f)].payload
            else:
                decoded[k] = man.decode_split(
                    k, merged_ids[(lvl, f)], caches[k].entries, index, K, man.memory_split(cfg)
                )
        except (DecodeFailure, KeyError):
            decoded[k] = None
    return RunResult(log, F, caches, decoded, expected)


# many users per cache -------------------------------------------------------


def _popularity_order(levels: LevelSpec) -> list[int]:
    return sorted(
        range(levels.n_levels), key=lambda i: (Fraction(levels.n_files[i], levels.users[i]), i)
    )


def mu_allocation(levels: LevelSpec, M, H, I, J) -> dict[int, float]:
    """alpha_i: 0 on H, N_j/M on J, and (M - T_J) sqrt(N_i U_i) / S_I / M on I."""
    M = float(M)
    if M <= 0:
        return {i: 0.0 for i in range(levels.n_levels)}
    T_J = sum(levels.n_files[j] for j in J)
    S_I = sum(math.sqrt(levels.n_files[i] * levels.users[i]) for i in I)
    alphas = {}
    for i in range(levels.n_levels):
        if i in J:
            alphas[i] = levels.n_files[i] / M
        elif i in I:
            alphas[i] = (M - T_J) * math.sqrt(levels.n_files[i] * levels.users[i]) / S_I / M
        else:
            alphas[i] = 0.0
    return alphas


@dataclass(frozen=True)
class MuCandidate:
    partition: LevelPartitionMU
    valid: bool
    feasible: bool


def mu_candidates(levels: LevelSpec, K: int, M, exact: bool = False) -> list[MuCandidate]:
    """Every contiguous split of the popularity order (J prefix, H suffix).

    `valid` means the three inequality families hold at tilde-M; `feasible`
    means the memory allocation itself is well defined (T_J <= M, and M > T_J
    whenever I is non-empty).  `exact` adds the V_I = sum_I N_i/K correction to
    tilde-M.
    """
    M = float(M)
    order = _popularity_order(levels)
    L = levels.n_levels
    root = [math.sqrt(levels.n_files[i] / levels.users[i]) for i in range(L)]
    out = []
    for a in range(L + 1):
        for b in range(L - a + 1):
            J = order[:a]
            H = order[L - b:] if b else []
            I = order[a:L - b]
            T_J = sum(levels.n_files[j] for j in J)
            feasible = T_J <= M and (not I or M > T_J)
            if I:
                S_I = sum(math.sqrt(levels.n_files[i] * levels.users[i]) for i in I)
                V_I = sum(levels.n_files[i] / K for i in I) if exact else 0.0
                tm = (M - T_J + V_I) / S_I
                valid = (
                    feasible
                    and all(tm < root[h] / K for h in H)
                    and all(root[i] / K <= tm <= (1 + 1 / K) * root[i] for i in I)
                    and all((1 + 1 / K) * root[j] < tm for j in J)
                )
            else:
                tm = None
                lo = max(((1 + 1 / K) * root[j] for j in J), default=-math.inf)
                hi = min((root[h] / K for h in H), default=math.inf)
                exact_fill = M == T_J or not H
                valid = feasible and exact_fill and lo < hi
            alphas = mu_allocation(levels, M, H, I, J) if feasible else {}
            part = LevelPartitionMU(frozenset(H), frozenset(I), frozenset(J), tm, alphas)
            out.append(MuCandidate(part, valid, feasible))
    return out


def mu_partition(levels: LevelSpec, K: int, M, exact: bool = False) -> LevelPartitionMU:
    levels.check_multi_user(K)
    if not 0 <= float(M) <= sum(levels.n_files):
        raise InvalidArgument(f"M = {M} outside [0, {sum(levels.n_files)}]")
    cands = mu_candidates(levels, K, M, exact)
    valid = [c.partition for c in cands if c.valid]
    if not valid:
        raise NoValidPartition(f"no contiguous split satisfies the conditions at M = {M}", cands)
    if len(valid) > 1:
        raise AmbiguousPartition(f"{len(valid)} splits satisfy the conditions at M = {M}", valid)
    return valid[0]


def mu_rate_bound(levels: LevelSpec, K: int, M, partition: LevelPartitionMU) -> float:
    """sum_H K U_h + (sum_I sqrt(N_i U_i))^2 / (M - T_J) - sum_I U_i."""
    unicast = sum(K * levels.users[h] for h in partition.H)
    if not partition.I:
        return float(unicast)
    T_J = sum(levels.n_files[j] for j in partition.J)
    room = float(M) - T_J
    if room <= 0:
        raise InvalidArgument("M - T_J must be positive when I is non-empty")
    S_I = sum(math.sqrt(levels.n_files[i] * levels.users[i]) for i in partition.I)
    return unicast + S_I**2 / room - sum(levels.users[i] for i in partition.I)


def mu_rate_per_level(levels: LevelSpec, K: int, M, alphas: Mapping[int, float]) -> float:
    """sum_i U_i min{K, max{N_i/(alpha_i M) - 1, 0}}."""
    total = 0.0
    for i in range(levels.n_levels):
        mem = alphas.get(i, 0.0) * float(M)
        per_row = K if mem <= 0 else min(K, max(levels.n_files[i] / mem - 1, 0.0))
        total += levels.users[i] * per_row
    return total


def mu_best_bound(levels: LevelSpec, K: int, M, exact: bool = False) -> tuple[float, list]:
    """Bound at the valid split(s); without any, the minimum over feasible splits."""
    cands = mu_candidates(levels, K, M, exact)
    pool = [c for c in cands if c.valid] or [c for c in cands if c.feasible]
    values = [(mu_rate_bound(levels, K, M, c.partition), c.partition) for c in pool]
    best = min(v for v, _ in values)
    return best, values


def quantized_memory(n_files: int, n_caches: int, memory: float, quantum: int) -> Fraction:
    """Round memory down so that t = K m / N is a multiple of 1/quantum."""
    t = memory * n_caches / n_files
    tq = Fraction(math.floor(t * quantum + 1e-9), quantum)
    tq = min(max(tq, Fraction(0)), Fraction(n_caches))
    return tq * n_files / n_caches


def mu_simulate(
    libraries: Sequence[FileLibrary],
    levels: LevelSpec,
    K: int,
    M,
    demands: Mapping[int, Sequence[Sequence[int]]],
    partition: Optional[LevelPartitionMU] = None,
    quantum: int = 4,
    fault_inject: bool = False,
) -> RunResult:
    """Split memory across levels and serve each row of users separately.

    `demands[i]` lists U_i rows for level i; each row holds K file indices (user
    at cache k asks for row[k]).  Memory for a level in I is rounded down so
    that the byte-level memory sharing needs only a small padding granularity.
    Users are keyed (level, row, cache).
    """
    M = Fraction(M)
    levels.check_multi_user(K)
    if len(libraries) != levels.n_levels:
        raise InvalidArgument("need one library per level")
    if partition is None:
        partition = mu_partition(levels, K, M)
    for i in range(levels.n_levels):
        rows = demands.get(i, [])
        if len(rows) != levels.users[i]:
            raise InvalidArgument(f"level {i}: expected {levels.users[i]} rows, got {len(rows)}")
        for row in rows:
            if len(row) != K or not all(0 <= f < levels.n_files[i] for f in row):
                raise InvalidArgument(f"level {i}: bad row {row}")

    level_mem = {}
    for i in range(levels.n_levels):
        if i in partition.J:
            level_mem[i] = Fraction(levels.n_files[i])
        elif i in partition.I:
            alpha = partition.alphas.get(i)
            if alpha is None:
                alpha = mu_allocation(levels, M, partition.H, partition.I, partition.J)[i]
            mem = min(alpha * float(M), levels.n_files[i])
            level_mem[i] = quantized_memory(levels.n_files[i], K, mem, quantum)
    splits = {
        i: man.memory_split(man.ManConfig(levels.n_files[i], K, m)) for i, m in level_mem.items()
    }
    grain = lcm_all(man.granularity(K, s) for s in splits.values())
    libs = [lib.padded(grain) for lib in libraries]
    F = _equal_sizes(libs)

    stores: list[dict] = [{} for _ in range(K)]
    for i, split in splits.items():
        files = dict(enumerate(libs[i].files))
        for k, entries in enumerate(man.place_split(files, K, split, prefix=(i,))):
            stores[k].update(entries)
    caches = [CacheContent(k, M * F, s) for k, s in enumerate(stores)]
    if fault_inject:
        caches[0] = caches[0].corrupted()

    entries = []
    for i in range(levels.n_levels):
        rows = demands[i]
        if i in partition.H:
            sent = set()
            for row in rows:
                for f in row:
                    if f not in sent:
                        sent.add(f)
                        entries.append(
                            Transmission(f"direct L{i} f{f}", libs[i].files[f], (), ("direct", i, f))
                        )
        elif i in partition.I:
            files = dict(enumerate(libs[i].files))
            for r, row in enumerate(rows):
                want = dict(enumerate(row))
                entries.extend(man.deliver_split(files, K, splits[i], want, (i,), group=(i, r)))
    log = TransmissionLog(entries)

    index = log.by_key()
    decoded, expected = {}, {}
    for i in range(levels.n_levels):
        for r, row in enumerate(demands[i]):
            for k, f in enumerate(row):
                user = (i, r, k)
                expected[user] = libs[i].files[f]
                try:
                    if i in partition.H:
                        decoded[user] = index[("direct", i, f)].payload
                    else:
                        decoded[user] = man.decode_split(
                            k, f, caches[k].entries, index, K, splits[i], (i,), group=(i, r)
                        )
                except (DecodeFailure, KeyError):
                    decoded[user] = None
    return RunResult(log, F, caches, decoded, expected)
