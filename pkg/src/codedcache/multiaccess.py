"""Cyclic multi-access: user k reads caches k, k+1, ..., k+d-1 (mod K).

Three regimes, by total window memory dM:
  dM <= N/2      ignore the window, plain centralized scheme on cache k;
  dM >= N        store share i of a (K, d) MDS code of every file at cache i;
  in between     memory sharing between the scheme at dM = N/2 and the MDS one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from . import analytics, gf256, man
from .core import (
    CacheContent,
    CodedCacheError,
    DecodeFailure,
    DemandVector,
    FileLibrary,
    InvalidArgument,
    RunResult,
    TransmissionLog,
)


class InsufficientShares(CodedCacheError):
    pass


@dataclass(frozen=True)
class CyclicAccess:
    n_caches: int
    window: int

    def __post_init__(self):
        if not 1 <= self.window <= self.n_caches:
            raise InvalidArgument(f"window d = {self.window} outside 1..{self.n_caches}")

    def caches_of(self, user: int) -> tuple[int, ...]:
        return tuple((user + j) % self.n_caches for j in range(self.window))


@dataclass(frozen=True)
class MdsShareSet:
    shares: tuple[bytes, ...]
    n_shares: int
    needed: int


@lru_cache(maxsize=None)
def generator(K: int, d: int) -> np.ndarray:
    """Systematic K x d generator: top d rows identity, any d rows invertible."""
    if not 1 <= d <= K <= 255:
        raise InvalidArgument(f"need 1 <= d <= K <= 255, got K={K}, d={d}")
    V = gf256.vandermonde(K, d)
    G = gf256.matmul(V, gf256.invert(V[:d]))
    G.setflags(write=False)
    return G


def mds_encode(data: bytes, K: int, d: int) -> MdsShareSet:
    if len(data) % d:
        raise InvalidArgument(f"length {len(data)} not divisible by d = {d}")
    shards = np.frombuffer(data, dtype=np.uint8).reshape(d, len(data) // d)
    coded = gf256.matmul(generator(K, d), shards)
    return MdsShareSet(tuple(row.tobytes() for row in coded), K, d)


def mds_decode(shares: Mapping[int, bytes] | Iterable[tuple[int, bytes]], K: int, d: int) -> bytes:
    """Rebuild the data from any d shares, given as {id: share} or (id, share) pairs."""
    pairs = list(shares.items()) if isinstance(shares, Mapping) else list(shares)
    ids = [i for i, _ in pairs]
    if len(set(ids)) != len(ids):
        raise InvalidArgument("duplicate share ids")
    shares = dict(pairs)
    if any(not 0 <= i < K for i in ids):
        raise InvalidArgument(f"share id outside 0..{K - 1}")
    if len(ids) < d:
        raise InsufficientShares(f"need {d} shares, got {len(ids)}")
    ids = sorted(ids)[:d]
    rows = np.stack([np.frombuffer(shares[i], dtype=np.uint8) for i in ids])
    sub = generator(K, d)[ids]
    return gf256.matmul(gf256.invert(sub), rows).tobytes()


@dataclass(frozen=True)
class MaPlan:
    """Fraction `lam` of each file runs the single-cache scheme at `memory_a`;
    the remainder is MDS-coded."""

    regime: str
    lam: Fraction
    memory_a: Fraction
    n_files: int
    access: CyclicAccess

    @property
    def split_a(self) -> man.MemorySplit:
        return man.memory_split(man.ManConfig(self.n_files, self.access.n_caches, self.memory_a))

    def granularity(self) -> int:
        d = self.access.window
        if self.lam == 0:
            return d
        ga = man.granularity(self.access.n_caches, self.split_a)
        if self.lam == 1:
            return ga
        p, q = self.lam.numerator, self.lam.denominator
        m = math.lcm(ga // math.gcd(ga, p), d // math.gcd(d, q - p))
        return q * m

    def bounds(self, file_size: int) -> tuple[int, int]:
        cut = self.lam * file_size
        if cut.denominator != 1:
            raise InvalidArgument(f"F = {file_size} does not split at {self.lam}")
        return int(cut), file_size


def ma_plan(n_files: int, access: CyclicAccess, M) -> MaPlan:
    M = Fraction(M)
    N, d = n_files, access.window
    if M < 0:
        raise InvalidArgument("memory must be non-negative")
    if d == 1:
        return MaPlan("A", Fraction(1), min(M, Fraction(N)), N, access)
    if d * M >= N:
        return MaPlan("C", Fraction(0), Fraction(0), N, access)
    if 2 * d * M <= N:
        return MaPlan("A", Fraction(1), M, N, access)
    # lam * N/(2d) + (1 - lam) * N/d = M
    lam = 2 - 2 * d * M / N
    return MaPlan("B", lam, Fraction(N, 2 * d), N, access)


def ma_rate(n_files: int, access: CyclicAccess, M) -> Fraction:
    """Rate of `ma_run` when all K users request distinct files (N >= K)."""
    plan = ma_plan(n_files, access, M)
    if plan.lam == 0:
        return Fraction(0)
    return plan.lam * analytics.r_man(n_files, access.n_caches, plan.memory_a)


def ma_placement(library: FileLibrary, access: CyclicAccess, M) -> list[CacheContent]:
    M = Fraction(M)
    plan = ma_plan(library.n_files, access, M)
    K, d = access.n_caches, access.window
    cut, F = plan.bounds(library.file_size)
    stores: list[dict] = [{} for _ in range(K)]
    if cut:
        prefix = {f: data[:cut] for f, data in enumerate(library.files)}
        stores = man.place_split(prefix, K, plan.split_a)
    if cut < F:
        for f, data in enumerate(library.files):
            for i, share in enumerate(mds_encode(data[cut:], K, d).shares):
                stores[i][("mds", f, i)] = share
    budget = min(M, Fraction(library.n_files)) * library.file_size
    return [CacheContent(i, budget, s) for i, s in enumerate(stores)]


def ma_delivery(library: FileLibrary, access: CyclicAccess, M, demands: DemandVector) -> TransmissionLog:
    demands.validate(library.n_files, access.n_caches)
    plan = ma_plan(library.n_files, access, M)
    cut, _ = plan.bounds(library.file_size)
    if not cut:
        return TransmissionLog()
    want = demands.as_dict()
    prefix = {f: library.files[f][:cut] for f in set(want.values())}
    return TransmissionLog(
        man.deliver_split(prefix, access.n_caches, plan.split_a, want)
    )


def ma_decode(
    user: int,
    demand: int,
    window: Mapping[int, CacheContent],
    log: TransmissionLog,
    access: CyclicAccess,
    M,
    n_files: int,
) -> bytes:
    """Decode from exactly the user's d window caches plus the broadcast."""
    if set(window) != set(access.caches_of(user)):
        raise InvalidArgument(f"user {user} may read only caches {access.caches_of(user)}")
    plan = ma_plan(n_files, access, M)
    out = b""
    if plan.lam > 0:
        out += man.decode_split(
            user, demand, window[user].entries, log.by_key(), access.n_caches, plan.split_a
        )
    if plan.lam < 1:
        shares = {}
        for c, cache in window.items():
            key = ("mds", demand, c)
            if key not in cache:
                raise DecodeFailure(f"cache {c} lacks share {key}", key)
            shares[c] = cache[key]
        out += mds_decode(shares, access.n_caches, access.window)
    return out


def ma_run(
    library: FileLibrary, access: CyclicAccess, M, demands: DemandVector, fault_inject: bool = False
) -> RunResult:
    M = Fraction(M)
    plan = ma_plan(library.n_files, access, M)
    lib = library.padded(plan.granularity())
    caches = ma_placement(lib, access, M)
    if fault_inject:
        caches[0] = caches[0].corrupted()
    log = ma_delivery(lib, access, M, demands)
    decoded = {}
    for user, f in demands.demands:
        window = {c: caches[c] for c in access.caches_of(user)}
        try:
            decoded[user] = ma_decode(user, f, window, log, access, M, lib.n_files)
        except DecodeFailure:
            decoded[user] = None
    expected = {user: lib.files[f] for user, f in demands.demands}
    return RunResult(log, lib.file_size, caches, decoded, expected)
