"""Closed-form rates, achievability bounds and convex-envelope utilities.

Everything here is pure formula evaluation; simulations are checked against it.
Logarithms in the adaptive-matching constants are natural logarithms.
Exact `Fraction` results are returned whenever the inputs allow it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import CodedCacheError, InvalidArgument


class DegenerateColoring(CodedCacheError):
    """The color count works out to zero; fall back to pure coded delivery."""


@dataclass(frozen=True)
class RatePoint:
    memory: Fraction
    formula_rate: object
    scheme_tag: str
    bound_rate: Optional[object] = None
    measured_rate: Optional[object] = None


def _grid_rate(K: int, t: int) -> Fraction:
    return Fraction(K - t, t + 1)


def r_man(N: int, K: int, M) -> Fraction:
    """K(1-M/N)/(1+KM/N) on the grid M in (N/K){0..K}; chord between grid points."""
    M = Fraction(M)
    if not 0 <= M <= N:
        raise InvalidArgument(f"M = {M} outside [0, {N}]")
    t = M * K / N
    lo = math.floor(t)
    if t == lo:
        return _grid_rate(K, lo)
    frac = t - lo
    return (1 - frac) * _grid_rate(K, lo) + frac * _grid_rate(K, lo + 1)


def r_man_smooth(N: int, K: int, M) -> Fraction:
    M = Fraction(M)
    return K * (1 - M / N) / (1 + K * M / N)


def r_man_ub(N: int, K: int, M) -> Fraction:
    """min{K, N/M}(1 - M/N); M = 0 gives K."""
    M = Fraction(M)
    if M == 0:
        return Fraction(K)
    return min(Fraction(K), N / M) * (1 - M / N)


def r_dec(N: int, K: int, M) -> Fraction:
    """Decentralized rate K(1-M/N) min{(N/KM)(1-(1-M/N)^K), N/K}."""
    M = Fraction(M)
    if not 0 <= M <= N:
        raise InvalidArgument(f"M = {M} outside [0, {N}]")
    if M == 0:
        # (N/KM)(1-(1-M/N)^K) -> 1 as M -> 0
        return K * min(Fraction(1), Fraction(N, K))
    q = 1 - M / N
    coded = (N / (K * M)) * (1 - q**K)
    return K * q * min(coded, Fraction(N, K))


def r_uncoded(N: int, M) -> Fraction:
    return Fraction(N) - Fraction(M)


# adaptive matching -------------------------------------------------------


def alpha_const(rho: float) -> float:
    """-ln(2 rho e^(1-2 rho)); positive for rho in (0, 1/2)."""
    if not 0 < rho < 0.5:
        raise InvalidArgument(f"rho = {rho} outside (0, 1/2)")
    return -math.log(2 * rho * math.exp(1 - 2 * rho))


def h_const(rho: float) -> float:
    """(1/rho) ln(1/rho) + 1 - 1/rho."""
    if not 0 < rho < 0.5:
        raise InvalidArgument(f"rho = {rho} outside (0, 1/2)")
    return (1 / rho) * math.log(1 / rho) + 1 - 1 / rho


def excess_bound(K: int, t0: float) -> float:
    """Bound on the expected number of unmatched users, K^(-t0)/sqrt(2 pi)."""
    return K ** (-t0) / math.sqrt(2 * math.pi)


def regularity_threshold(K: int, rho: float, t0: float) -> float:
    return 2 * (1 + t0) / alpha_const(rho) * math.log(K)


def chi(K: int, d: int, rho: float, t: float) -> int:
    """Color count floor(alpha d / (2 (1+t) ln K)), capped at d."""
    if K < 2:
        return 1
    value = math.floor(alpha_const(rho) * d / (2 * (1 + t) * math.log(K)))
    return min(max(value, 0), d)


def pcd_bound(N: int, K: int, d: int, rho: float, t0: float, M) -> float:
    M = float(M)
    cap = rho * d
    if M == 0:
        return cap
    return min(cap, max(N / M - 1, 0.0) + excess_bound(K, t0))


def pam_bound(N: int, K: int, d: int, rho: float, M) -> float:
    M = float(M)
    if M < N / d:
        return rho * K
    return K * M * math.exp(-rho * h_const(rho) * d * M / N)


def hcm_bound(N: int, K: int, d: int, rho: float, t: float, M) -> float:
    colors = chi(K, d, rho, t)
    if colors == 0:
        raise DegenerateColoring(f"chi = 0 for K={K}, d={d}, rho={rho}, t={t}; use PCD")
    M = float(M)
    tail = excess_bound(K, t)
    if M >= math.ceil(N / colors):
        return tail
    # M between floor(N/chi) and ceil(N/chi) falls back to the first branch
    if M == 0:
        return rho * K
    return min(rho * K, N / M - colors + tail)


# multi-access and interference networks ---------------------------------


def r_ma_bound(N: int, K: int, d: int, M) -> Fraction:
    """4 min{K, N/M}(1 - dM/N) on [0, N/d]; zero beyond."""
    M = Fraction(M)
    if d * M >= N:
        return Fraction(0)
    if M == 0:
        return Fraction(4 * K)
    return 4 * min(Fraction(K), N / M) * (1 - d * M / N)


def r_ma_heuristic(N: int, K: int, d: int, M) -> Fraction:
    M = Fraction(M)
    return max(Fraction(0), K * (1 - d * M / N) / (1 + K * M / N))


def dof(N: int, Kt: int, Kr: int, Mr):
    """Approximate DoF of the cache-aided interference network; inf when Mr = N."""
    if Kt < 2 or Kr < 1:
        raise InvalidArgument("need Kt >= 2 and Kr >= 1")
    Mr = Fraction(Mr)
    if not 0 <= Mr <= N:
        raise InvalidArgument(f"Mr = {Mr} outside [0, {N}]")
    if Mr == N:
        return math.inf
    mu = Mr / N
    alignment = Fraction(Kt * Kr, Kt + Kr - 1)
    local = 1 / (1 - mu)
    glob = (Kr * mu + 1) / (mu / (Fraction(1, Kr) + Fraction(1, Kt - 1)) + 1)
    return alignment * local * glob


# convex envelope ----------------------------------------------------------


class PiecewiseLinear:
    """Linear interpolation through sorted vertices; clamps outside the range."""

    def __init__(self, vertices: Sequence[tuple]):
        self.vertices = list(vertices)

    def __call__(self, x):
        v = self.vertices
        if x <= v[0][0]:
            return v[0][1]
        if x >= v[-1][0]:
            return v[-1][1]
        for (x0, y0), (x1, y1) in zip(v, v[1:]):
            if x0 <= x <= x1:
                if x == x0:
                    return y0
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        raise AssertionError("unreachable")


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_envelope(points: Sequence[tuple]) -> PiecewiseLinear:
    """Lower convex hull of (M, R) points (monotone chain)."""
    if len(points) < 2:
        raise InvalidArgument("need at least two points")
    seen = {}
    for x, y in points:
        if x in seen and seen[x] != y:
            raise InvalidArgument(f"duplicate M = {x} with different rates")
        seen[x] = y
    pts = sorted(seen.items())
    if len(pts) < 2:
        raise InvalidArgument("need at least two distinct M values")
    hull = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return PiecewiseLinear(hull)


def man_grid_points(N: int, K: int) -> list[tuple[Fraction, Fraction]]:
    return [(Fraction(t * N, K), _grid_rate(K, t)) for t in range(K + 1)]


from .multilevel import mu_rate_bound as r_mu_bound  # noqa: E402
from .multilevel import su_rate_bound as r_su_bound  # noqa: E402

__all__ = [
    "DegenerateColoring",
    "PiecewiseLinear",
    "RatePoint",
    "alpha_const",
    "chi",
    "convex_envelope",
    "dof",
    "excess_bound",
    "h_const",
    "hcm_bound",
    "man_grid_points",
    "pam_bound",
    "pcd_bound",
    "r_dec",
    "r_ma_bound",
    "r_ma_heuristic",
    "r_man",
    "r_man_smooth",
    "r_man_ub",
    "r_mu_bound",
    "r_su_bound",
    "r_uncoded",
    "regularity_threshold",
]
