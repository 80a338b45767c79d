"""Decentralized placement (independent random bit sampling) and its coded delivery."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .core import (
    CacheContent,
    DecodeFailure,
    DemandVector,
    FileLibrary,
    InvalidArgument,
    RunResult,
    SubfileId,
    Transmission,
    TransmissionLog,
)


@dataclass(frozen=True)
class BitOwnershipIndex:
    """masks[f, b] has bit k set iff cache k stores bit b of file f."""

    n_caches: int
    masks: np.ndarray
    bits_per_file: int

    def positions(self, cache: int, file: int) -> np.ndarray:
        return np.flatnonzero(self.masks[file] & np.uint64(1 << cache))


def _bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def sample_count(n_files: int, file_size: int, M) -> int:
    """Bits stored per file per cache, floor(8 floor(MF) / N), so the packed store fits."""
    budget = math.floor(Fraction(M) * file_size)
    return min(8 * budget // n_files, 8 * file_size)


def dec_placement(library: FileLibrary, K: int, M, seed) -> tuple[list[CacheContent], BitOwnershipIndex]:
    M = Fraction(M)
    N, F = library.n_files, library.file_size
    if not 0 <= M <= N:
        raise InvalidArgument(f"M = {M} outside [0, {N}]")
    if not 1 <= K <= 64:
        raise InvalidArgument("K must be in 1..64")
    nbits = 8 * F
    count = nbits if M == N else sample_count(N, F, M)
    rng = np.random.default_rng(seed)
    masks = np.zeros((N, nbits), dtype=np.uint64)
    bits = [_bits(f) for f in library.files]
    caches = []
    for k in range(K):
        flag = np.uint64(1 << k)
        stored = []
        for f in range(N):
            pos = np.sort(rng.choice(nbits, size=count, replace=False))
            masks[f, pos] |= flag
            stored.append(bits[f][pos])
        blob = np.packbits(np.concatenate(stored)).tobytes() if count else b""
        caches.append(CacheContent(k, M * F, {"bits": blob}))
    masks.setflags(write=False)
    return caches, BitOwnershipIndex(K, masks, count)


def _cached_bits(cache: CacheContent, index: BitOwnershipIndex, file: int) -> np.ndarray:
    n = index.bits_per_file
    blob = np.unpackbits(np.frombuffer(cache["bits"], dtype=np.uint8))
    return blob[file * n:(file + 1) * n]


def _group(index: BitOwnershipIndex, file: int, owners: int, demand_mask: int) -> np.ndarray:
    """Positions of `file` whose holders among the demanders are exactly `owners`."""
    return np.flatnonzero((index.masks[file] & np.uint64(demand_mask)) == np.uint64(owners))


def _mask(users) -> int:
    return sum(1 << u for u in users)


def dec_delivery(library: FileLibrary, index: BitOwnershipIndex, demands: DemandVector) -> TransmissionLog:
    """For each user set S (largest first): XOR over k in S of the bits of W_{d_k}
    held by exactly S minus k among the demanders, zero-padded to equal length."""
    demands.validate(library.n_files, index.n_caches)
    want = demands.as_dict()
    users = sorted(want)
    dmask = _mask(users)
    bits = {f: _bits(library.files[f]) for f in set(want.values())}
    out = []
    for size in range(len(users), 0, -1):
        for S in combinations(users, size):
            comps = []
            parts = []
            for k in S:
                rest = tuple(u for u in S if u != k)
                comps.append(bits[want[k]][_group(index, want[k], _mask(rest), dmask)])
                parts.append(SubfileId(want[k], rest, "dec"))
            width = max(len(c) for c in comps)
            if width == 0:
                continue
            acc = np.zeros(width, dtype=np.uint8)
            for c in comps:
                acc[:len(c)] ^= c
            label = f"S={S}: " + " + ".join(f"W{p.file}|{p.subset}" for p in parts)
            out.append(Transmission(label, np.packbits(acc).tobytes(), tuple(parts), ("dec", S)))
    return TransmissionLog(out)


def dec_decode(
    user: int,
    demand: int,
    cache: CacheContent,
    index: BitOwnershipIndex,
    log: TransmissionLog,
    demands: DemandVector,
) -> bytes:
    want = demands.as_dict()
    if want.get(user) != demand:
        raise InvalidArgument(f"user {user} does not request file {demand}")
    users = sorted(want)
    dmask = _mask(users)
    nbits = index.masks.shape[1]
    out = np.zeros(nbits, dtype=np.uint8)
    known = np.zeros(nbits, dtype=bool)
    mine = index.positions(user, demand)
    out[mine] = _cached_bits(cache, index, demand)
    known[mine] = True
    own_files = {}
    entries = log.by_key()
    others = [u for u in users if u != user]
    for size in range(len(others), -1, -1):
        for A in combinations(others, size):
            pos = _group(index, demand, _mask(A), dmask)
            if len(pos) == 0:
                continue
            S = tuple(sorted(A + (user,)))
            tr = entries.get(("dec", S))
            if tr is None:
                raise DecodeFailure(f"no transmission for user set {S}", SubfileId(demand, A, "dec"))
            acc = np.unpackbits(np.frombuffer(tr.payload, dtype=np.uint8)).copy()
            for k in A:
                rest = tuple(u for u in S if u != k)
                f = want[k]
                side_pos = _group(index, f, _mask(rest), dmask)
                if f not in own_files:
                    full = np.zeros(nbits, dtype=np.uint8)
                    full[index.positions(user, f)] = _cached_bits(cache, index, f)
                    own_files[f] = full
                acc[:len(side_pos)] ^= own_files[f][side_pos]
            out[pos] = acc[:len(pos)]
            known[pos] = True
    if not known.all():
        raise DecodeFailure(f"user {user}: {int((~known).sum())} bits unrecovered")
    return np.packbits(out).tobytes()


def simulate(
    library: FileLibrary, K: int, M, demands: DemandVector, seed, fault_inject: bool = False
) -> RunResult:
    caches, index = dec_placement(library, K, M, seed)
    if fault_inject:
        caches[0] = caches[0].corrupted()
    log = dec_delivery(library, index, demands)
    decoded = {}
    for user, f in demands.demands:
        try:
            decoded[user] = dec_decode(user, f, caches[user], index, log, demands)
        except DecodeFailure:
            decoded[user] = None
    expected = {user: library.files[f] for user, f in demands.demands}
    return RunResult(log, library.file_size, caches, decoded, expected)
