"""Shared data model: file libraries, cache contents, demands and broadcast logs."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np


class CodedCacheError(Exception):
    pass


class InvalidArgument(CodedCacheError, ValueError):
    pass


class RequiresMemorySharing(InvalidArgument):
    """Raised when t = KM/N is not an integer and a pure scheme was requested."""


class BudgetExceeded(CodedCacheError):
    pass


class DecodeFailure(CodedCacheError):
    def __init__(self, message: str, subfile=None):
        super().__init__(message)
        self.subfile = subfile


@dataclass(frozen=True)
class FileLibrary:
    """N equal-size files; index i is file W_i (0-based)."""

    files: tuple[bytes, ...]

    def __post_init__(self):
        files = tuple(bytes(f) for f in self.files)
        if not files:
            raise InvalidArgument("library needs at least one file")
        size = len(files[0])
        if size < 1 or any(len(f) != size for f in files):
            raise InvalidArgument("all files must have the same length F >= 1")
        object.__setattr__(self, "files", files)

    @property
    def n_files(self) -> int:
        return len(self.files)

    @property
    def file_size(self) -> int:
        return len(self.files[0])

    @classmethod
    def random(cls, n_files: int, file_size: int, seed=0) -> "FileLibrary":
        rng = np.random.default_rng(seed)
        data = rng.integers(0, 256, size=(n_files, file_size), dtype=np.uint8)
        return cls(tuple(row.tobytes() for row in data))

    def padded(self, multiple: int) -> "FileLibrary":
        """Zero-pad every file up to the least multiple of `multiple`."""
        target = padded_size(self.file_size, multiple)
        if target == self.file_size:
            return self
        return FileLibrary(tuple(f + bytes(target - self.file_size) for f in self.files))


def padded_size(size: int, multiple: int) -> int:
    if multiple < 1:
        raise InvalidArgument("padding multiple must be >= 1")
    return -(-size // multiple) * multiple


@dataclass(frozen=True, order=True)
class SubfileId:
    """Piece W_file^subset; `segment` separates memory-sharing parts of a file."""

    file: int
    subset: tuple[int, ...]
    segment: Hashable = 0

    def __post_init__(self):
        subset = tuple(sorted(self.subset))
        if len(set(subset)) != len(subset):
            raise InvalidArgument(f"duplicate cache index in {self.subset}")
        object.__setattr__(self, "subset", subset)


@dataclass(frozen=True)
class CacheContent:
    cache_id: int
    budget_bytes: Fraction
    entries: Mapping[Hashable, bytes] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "budget_bytes", Fraction(self.budget_bytes))
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))
        if self.used_bytes > self.budget_bytes:
            raise BudgetExceeded(
                f"cache {self.cache_id}: {self.used_bytes} bytes stored, "
                f"budget {self.budget_bytes}"
            )

    @property
    def used_bytes(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __getitem__(self, key) -> bytes:
        return self.entries[key]

    def corrupted(self) -> "CacheContent":
        """Copy with the first byte of the first non-empty entry flipped (fault injection)."""
        entries = dict(self.entries)
        for key in sorted(entries, key=repr):
            if entries[key]:
                value = entries[key]
                entries[key] = bytes([value[0] ^ 0xFF]) + value[1:]
                break
        return CacheContent(self.cache_id, self.budget_bytes, entries)


@dataclass(frozen=True)
class DemandVector:
    demands: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple((int(u), int(f)) for u, f in self.demands))
        users = [u for u, _ in self.demands]
        if len(set(users)) != len(users):
            raise InvalidArgument("a user may appear only once in a demand vector")

    @classmethod
    def from_files(cls, files: Iterable[int]) -> "DemandVector":
        """User k requests files[k]."""
        return cls(tuple(enumerate(files)))

    def as_dict(self) -> dict[int, int]:
        return dict(self.demands)

    def validate(self, n_files: int, n_users: int | None = None) -> None:
        for user, f in self.demands:
            if not 0 <= f < n_files:
                raise InvalidArgument(f"user {user} requests file {f}, library has {n_files}")
            if n_users is not None and not 0 <= user < n_users:
                raise InvalidArgument(f"user index {user} out of range 0..{n_users - 1}")


@dataclass(frozen=True)
class Transmission:
    """One broadcast payload.

    `parts` names what was combined and `key` is the lookup handle decoders use;
    both are header metadata (demands are public) and are not counted in the rate.
    """

    label: str
    payload: bytes
    parts: tuple = ()
    key: Hashable = None


@dataclass(frozen=True)
class TransmissionLog:
    entries: tuple[Transmission, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    @property
    def total_bytes(self) -> int:
        return sum(len(e.payload) for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __add__(self, other: "TransmissionLog") -> "TransmissionLog":
        return TransmissionLog(self.entries + other.entries)

    def by_key(self) -> dict:
        return {e.key: e for e in self.entries if e.key is not None}

    def fingerprint(self) -> list[tuple[str, bytes]]:
        return [(e.label, e.payload) for e in self.entries]


def subsets_of_size(k: int, t: int) -> list[tuple[int, ...]]:
    """All t-subsets of range(k), lexicographic on the sorted tuples."""
    if k < 0 or t < 0 or t > k:
        raise InvalidArgument(f"need 0 <= t <= k, got k={k}, t={t}")
    return list(itertools.combinations(range(k), t))


def xor_bytes(parts: Sequence[bytes]) -> bytes:
    """Bytewise XOR; shorter inputs are zero-padded at the end to the longest length."""
    if not parts:
        raise InvalidArgument("xor_bytes needs at least one input")
    width = max(len(p) for p in parts)
    if width == 0:
        return b""
    acc = 0
    for p in parts:
        acc ^= int.from_bytes(p, "big") << (8 * (width - len(p)))
    return acc.to_bytes(width, "big")


def measured_rate(log: TransmissionLog, file_size: int) -> Fraction:
    if file_size < 1:
        raise InvalidArgument("file_size must be >= 1")
    return Fraction(log.total_bytes, file_size)


def lcm_all(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, int(v))
    return out


@dataclass
class RunResult:
    """Outcome of one end-to-end scheme run (placement, delivery, decode of every user)."""

    log: TransmissionLog
    file_size: int
    caches: list
    decoded: dict
    expected: dict

    @property
    def rate(self) -> Fraction:
        return measured_rate(self.log, self.file_size)

    @property
    def failures(self) -> list:
        return [u for u, want in self.expected.items() if self.decoded.get(u) != want]
