"""Byte-level coded caching simulator with closed-form rate oracles."""

from .core import (
    BudgetExceeded,
    CacheContent,
    CodedCacheError,
    DecodeFailure,
    DemandVector,
    FileLibrary,
    InvalidArgument,
    RequiresMemorySharing,
    RunResult,
    SubfileId,
    Transmission,
    TransmissionLog,
    measured_rate,
    subsets_of_size,
    xor_bytes,
)

__version__ = "0.1.0"
