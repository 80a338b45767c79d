"""Centralized coded caching: subset placement, XOR delivery, per-user decoding.

Files are cut into C(K, t) pieces W^S (|S| = t) and cache i keeps every piece
with i in S.  Memory values off the grid (N/K){0..K} are handled by memory
sharing: a prefix of each file runs the scheme at t_low, the suffix at t_high.

The piece-level helpers (`place_pieces`, `deliver_pieces`, `decode_pieces`)
work on any mapping of file ids to byte strings, so the other schemes reuse
them on sub-libraries and file segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Mapping

from .core import (
    CacheContent,
    DecodeFailure,
    DemandVector,
    FileLibrary,
    InvalidArgument,
    RequiresMemorySharing,
    RunResult,
    SubfileId,
    Transmission,
    TransmissionLog,
    xor_bytes,
)


@dataclass(frozen=True)
class ManConfig:
    n_files: int
    n_caches: int
    memory: Fraction

    def __post_init__(self):
        object.__setattr__(self, "memory", Fraction(self.memory))
        if self.n_files < 1 or self.n_caches < 1:
            raise InvalidArgument("need N >= 1 and K >= 1")
        if not 0 <= self.memory <= self.n_files:
            raise InvalidArgument(f"memory {self.memory} outside [0, {self.n_files}]")

    @property
    def t_exact(self) -> Fraction:
        return self.memory * self.n_caches / self.n_files

    @property
    def t(self) -> int:
        t = self.t_exact
        if t.denominator != 1:
            raise RequiresMemorySharing(f"t = KM/N = {t} is not an integer")
        return int(t)

    @classmethod
    def from_t(cls, n_files: int, n_caches: int, t: int) -> "ManConfig":
        return cls(n_files, n_caches, Fraction(t * n_files, n_caches))


@dataclass(frozen=True)
class MemorySplit:
    """A fraction `lam` of every file is handled at t_low, the rest at t_high."""

    t_low: int
    t_high: int
    lam: Fraction

    @property
    def integral(self) -> bool:
        return self.lam == 1

    def segments(self):
        """(segment tag, t, weight) for each part with nonzero weight."""
        out = []
        if self.lam > 0:
            out.append((0, self.t_low, self.lam))
        if self.lam < 1:
            out.append((1, self.t_high, 1 - self.lam))
        return out


def memory_split(cfg: ManConfig) -> MemorySplit:
    t = cfg.t_exact
    t_low = math.floor(t)
    if t == t_low:
        return MemorySplit(t_low, t_low, Fraction(1))
    t_high = t_low + 1
    return MemorySplit(t_low, t_high, t_high - t)


def granularity(n_caches: int, split: MemorySplit) -> int:
    """Least F for which every memory-sharing segment splits into whole pieces."""
    if split.integral:
        return math.comb(n_caches, split.t_low)
    p, q = split.lam.numerator, split.lam.denominator
    a = math.comb(n_caches, split.t_low)
    b = math.comb(n_caches, split.t_high)
    # F = q*m with p*m % a == 0 and (q-p)*m % b == 0
    m = math.lcm(a // math.gcd(a, p), b // math.gcd(b, q - p))
    return q * m


def segment_bounds(split: MemorySplit, file_size: int):
    """(tag, t, start, stop) byte ranges of each segment."""
    out = []
    start = 0
    for tag, t, weight in split.segments():
        length = weight * file_size
        if length.denominator != 1:
            raise InvalidArgument(f"file size {file_size} does not split at fraction {weight}")
        stop = start + int(length)
        out.append((tag, t, start, stop))
        start = stop
    return out


def split_pieces(data: bytes, n_caches: int, t: int) -> dict[tuple[int, ...], bytes]:
    count = math.comb(n_caches, t)
    if len(data) % count:
        raise InvalidArgument(f"length {len(data)} is not divisible by C({n_caches},{t}) = {count}")
    size = len(data) // count
    return {
        s: data[i * size:(i + 1) * size]
        for i, s in enumerate(combinations(range(n_caches), t))
    }


def place_pieces(
    files: Mapping[int, bytes], n_caches: int, t: int, segment: Hashable = 0
) -> list[dict[SubfileId, bytes]]:
    """Per-cache entry dicts: cache i gets W_f^S for every f and every S containing i."""
    stores: list[dict[SubfileId, bytes]] = [{} for _ in range(n_caches)]
    for f, data in files.items():
        for s, piece in split_pieces(data, n_caches, t).items():
            sid = SubfileId(f, s, segment)
            for i in s:
                stores[i][sid] = piece
    return stores


def deliver_pieces(
    files: Mapping[int, bytes],
    n_caches: int,
    t: int,
    demands: Mapping[int, int],
    segment: Hashable = 0,
    group: Hashable = None,
) -> list[Transmission]:
    """One XOR per (t+1)-subset T of caches that contains at least one demander.

    Caches without a demander simply drop out of the XOR, so every demander in T
    still sees exactly one unknown piece.  With all K caches demanding this is the
    plain C(K, t+1) transmission schedule.  `group` keeps the lookup keys of
    independent deliveries over the same placement (rows, colors) apart.
    """
    if t >= n_caches or not demands:
        return []
    pieces = {f: split_pieces(files[f], n_caches, t) for f in set(demands.values())}
    tag = "" if group is None else f"{group} "
    out = []
    for T in combinations(range(n_caches), t + 1):
        active = [j for j in T if j in demands]
        if not active:
            continue
        parts = []
        payloads = []
        for j in active:
            rest = tuple(x for x in T if x != j)
            parts.append(SubfileId(demands[j], rest, segment))
            payloads.append(pieces[demands[j]][rest])
        label = f"{tag}[{segment}] T={T}: " + " + ".join(f"W{p.file}^{p.subset}" for p in parts)
        key = ("man", group, segment, T)
        out.append(Transmission(label, xor_bytes(payloads), tuple(parts), key))
    return out


def decode_pieces(
    user: int,
    file_id: int,
    entries: Mapping,
    log_index: Mapping,
    n_caches: int,
    t: int,
    segment: Hashable = 0,
    group: Hashable = None,
) -> bytes:
    """Rebuild one segment of `file_id` at cache `user` from its entries plus the broadcast."""
    out = []
    for s in combinations(range(n_caches), t):
        sid = SubfileId(file_id, s, segment)
        if user in s:
            if sid not in entries:
                raise DecodeFailure(f"cache {user} is missing {sid}", sid)
            out.append(entries[sid])
            continue
        key = ("man", group, segment, tuple(sorted(s + (user,))))
        tr = log_index.get(key)
        if tr is None or sid not in tr.parts:
            raise DecodeFailure(f"no transmission carries {sid} for cache {user}", sid)
        side = []
        for p in tr.parts:
            if p == sid:
                continue
            if p not in entries:
                raise DecodeFailure(f"cache {user} lacks side information {p}", p)
            side.append(entries[p])
        out.append(xor_bytes([tr.payload, *side]))
    return b"".join(out)


def _tag(prefix: tuple, tag: int) -> Hashable:
    return prefix + (tag,) if prefix else tag


def place_split(
    files: Mapping[int, bytes], n_caches: int, split: MemorySplit, prefix: tuple = ()
) -> list[dict[SubfileId, bytes]]:
    """Memory-sharing placement of equal-length `files` (keys are file ids)."""
    stores: list[dict] = [{} for _ in range(n_caches)]
    if not files:
        return stores
    size = len(next(iter(files.values())))
    for tag, t, start, stop in segment_bounds(split, size):
        part = {f: data[start:stop] for f, data in files.items()}
        for i, entries in enumerate(place_pieces(part, n_caches, t, _tag(prefix, tag))):
            stores[i].update(entries)
    return stores


def deliver_split(
    files: Mapping[int, bytes],
    n_caches: int,
    split: MemorySplit,
    demands: Mapping[int, int],
    prefix: tuple = (),
    group: Hashable = None,
) -> list[Transmission]:
    """Coded delivery for `demands` (cache -> file id) under a memory-sharing placement."""
    if not demands:
        return []
    size = len(files[next(iter(demands.values()))])
    out = []
    for tag, t, start, stop in segment_bounds(split, size):
        part = {f: files[f][start:stop] for f in set(demands.values())}
        out.extend(deliver_pieces(part, n_caches, t, demands, _tag(prefix, tag), group))
    return out


def decode_split(
    user: int,
    file_id: int,
    entries: Mapping,
    log_index: Mapping,
    n_caches: int,
    split: MemorySplit,
    prefix: tuple = (),
    group: Hashable = None,
) -> bytes:
    return b"".join(
        decode_pieces(user, file_id, entries, log_index, n_caches, t, _tag(prefix, tag), group)
        for tag, t, _ in split.segments()
    )


def _check_demands(demands: DemandVector, cfg: ManConfig) -> dict[int, int]:
    demands.validate(cfg.n_files, cfg.n_caches)
    return demands.as_dict()


def _check_library(library: FileLibrary, cfg: ManConfig) -> None:
    if library.n_files != cfg.n_files:
        raise InvalidArgument(f"library has {library.n_files} files, config says {cfg.n_files}")


def sharing_placement(library: FileLibrary, cfg: ManConfig) -> list[CacheContent]:
    _check_library(library, cfg)
    stores = place_split(dict(enumerate(library.files)), cfg.n_caches, memory_split(cfg))
    budget = cfg.memory * library.file_size
    return [CacheContent(i, budget, s) for i, s in enumerate(stores)]


def run_with_sharing(library: FileLibrary, cfg: ManConfig, demands: DemandVector) -> TransmissionLog:
    _check_library(library, cfg)
    want = _check_demands(demands, cfg)
    files = dict(enumerate(library.files))
    return TransmissionLog(deliver_split(files, cfg.n_caches, memory_split(cfg), want))


def sharing_decode(
    user: int, demand: int, cache: CacheContent, log: TransmissionLog, cfg: ManConfig
) -> bytes:
    return decode_split(user, demand, cache.entries, log.by_key(), cfg.n_caches, memory_split(cfg))


def man_placement(library: FileLibrary, cfg: ManConfig) -> list[CacheContent]:
    t = cfg.t
    if library.file_size % math.comb(cfg.n_caches, t):
        raise InvalidArgument(
            f"F = {library.file_size} is not divisible by C({cfg.n_caches},{t})"
        )
    return sharing_placement(library, cfg)


def man_delivery(library: FileLibrary, demands: DemandVector, cfg: ManConfig) -> TransmissionLog:
    cfg.t  # off-grid memory raises RequiresMemorySharing
    return run_with_sharing(library, cfg, demands)


def man_decode(
    user: int, demand: int, cache: CacheContent, log: TransmissionLog, cfg: ManConfig
) -> bytes:
    cfg.t  # off-grid memory raises RequiresMemorySharing
    return sharing_decode(user, demand, cache, log, cfg)


def simulate(
    library: FileLibrary, cfg: ManConfig, demands: DemandVector, fault_inject: bool = False
) -> RunResult:
    """Pad, place, deliver and decode every demanding user."""
    lib = library.padded(granularity(cfg.n_caches, memory_split(cfg)))
    caches = sharing_placement(lib, cfg)
    if fault_inject:
        caches[0] = caches[0].corrupted()
    log = run_with_sharing(lib, cfg, demands)
    decoded = {}
    for user, f in demands.demands:
        try:
            decoded[user] = sharing_decode(user, f, caches[user], log, cfg)
        except DecodeFailure:
            decoded[user] = None
    expected = {user: lib.files[f] for user, f in demands.demands}
    return RunResult(log, lib.file_size, caches, decoded, expected)


def partial_rate(n_caches: int, t: int, n_demanders: int) -> Fraction:
    """Rate of `deliver_pieces` with `n_demanders` distinct demanding caches."""
    if t >= n_caches or n_demanders == 0:
        return Fraction(0)
    sent = math.comb(n_caches, t + 1) - math.comb(n_caches - n_demanders, t + 1)
    return Fraction(sent, math.comb(n_caches, t))


def shared_partial_rate(n_files: int, n_caches: int, memory, n_demanders: int) -> Fraction:
    """Exact rate of the memory-sharing run without materializing any bytes."""
    split = memory_split(ManConfig(n_files, n_caches, memory))
    return sum(
        (w * partial_rate(n_caches, t, n_demanders) for _, t, w in split.segments()),
        Fraction(0),
    )
