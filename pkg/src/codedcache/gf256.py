"""GF(2^8) arithmetic (primitive polynomial 0x11d) vectorized over numpy byte arrays."""

from __future__ import annotations

import numpy as np

PRIM = 0x11D

EXP = np.zeros(512, dtype=np.uint8)
LOG = np.zeros(256, dtype=np.int64)
_x = 1
for _i in range(255):
    EXP[_i] = _x
    LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= PRIM
EXP[255:510] = EXP[:255]

# MUL[a, b] = a * b in GF(2^8)
MUL = np.zeros((256, 256), dtype=np.uint8)
_nz = np.arange(1, 256)
MUL[1:, 1:] = EXP[(LOG[_nz][:, None] + LOG[_nz][None, :]) % 255]


def mul(a: int, b: int) -> int:
    return int(MUL[a, b])


def inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return int(EXP[(255 - LOG[a]) % 255])


def power(a: int, n: int) -> int:
    if n == 0:
        return 1
    if a == 0:
        return 0
    return int(EXP[(LOG[a] * n) % 255])


def matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """(r x n) @ (n x c) over GF(256); B rows are typically long byte vectors."""
    A = np.asarray(A, dtype=np.uint8)
    B = np.asarray(B, dtype=np.uint8)
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.uint8)
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            c = A[i, j]
            if c:
                out[i] ^= MUL[c][B[j]]
    return out


def invert(A: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse over GF(256); raises ValueError if singular."""
    A = np.array(A, dtype=np.uint8)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    aug = np.concatenate([A, np.eye(n, dtype=np.uint8)], axis=1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r, col]), None)
        if pivot is None:
            raise ValueError("singular matrix")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] = MUL[inv(int(aug[col, col]))][aug[col]]
        for r in range(n):
            if r != col and aug[r, col]:
                aug[r] ^= MUL[aug[r, col]][aug[col]]
    return aug[:, n:]


def vandermonde(rows: int, cols: int) -> np.ndarray:
    """V[i, j] = i^j with evaluation points 0..rows-1 (0^0 = 1)."""
    return np.array([[power(i, j) for j in range(cols)] for i in range(rows)], dtype=np.uint8)
