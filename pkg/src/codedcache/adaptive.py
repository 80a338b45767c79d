"""Clustered caches with Poisson demands: PCD, PAM and HCM with Monte Carlo rate estimates.

Users arrive in clusters of d caches and must be matched to a cache of their
own cluster, at most one user per cache.  Three schemes:

* PCD: centralized coded placement over all K caches, arbitrary matching
  (first come, first served), coded delivery to the matched caches.
* PAM: whole-file replicas, maximum matching of users to caches that hold
  their file, so matched users need nothing from the server.
* HCM: caches and files split into chi colors; one coded instance per color,
  users matched to a free cache of their file's color.

Users left unmatched are served by broadcasting each distinct requested file once.
Every scheme has a byte-level run (`*_run`) and an exact count-mode rate
(`*_rate`) that never materializes subfiles, which is what makes K = 256 cheap.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import analytics, man
from .core import (
    CacheContent,
    DecodeFailure,
    FileLibrary,
    InvalidArgument,
    RunResult,
    Transmission,
    TransmissionLog,
)
from .matching import fcfs_match, hopcroft_karp

SCHEMES = ("pcd", "pam", "hcm")


@dataclass(frozen=True)
class ClusterModel:
    n_files: int
    n_caches: int
    cluster_size: int
    rho: float
    t0: float

    def __post_init__(self):
        if self.n_files < 1 or self.cluster_size < 1:
            raise InvalidArgument("need N >= 1 and d >= 1")
        if self.n_caches % self.cluster_size:
            raise InvalidArgument(f"d = {self.cluster_size} does not divide K = {self.n_caches}")
        if not 0 < self.rho < 0.5:
            raise InvalidArgument(f"rho = {self.rho} outside (0, 1/2)")
        if self.t0 <= 0:
            raise InvalidArgument("t0 must be positive")

    @property
    def alpha(self) -> float:
        return analytics.alpha_const(self.rho)

    @property
    def n_clusters(self) -> int:
        return self.n_caches // self.cluster_size

    @property
    def regular(self) -> bool:
        """d >= 2(1+t0)/alpha ln K; reported, not enforced."""
        return self.cluster_size >= analytics.regularity_threshold(self.n_caches, self.rho, self.t0)

    def caches_in(self, cluster: int) -> range:
        d = self.cluster_size
        return range(cluster * d, (cluster + 1) * d)


@dataclass(frozen=True)
class DemandProfile:
    """counts[n, c] users in cluster c request file n."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or (counts < 0).any():
            raise InvalidArgument("profile must be a non-negative (files x clusters) matrix")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_users(self) -> int:
        return int(self.counts.sum())

    def users(self) -> list[tuple[int, int]]:
        """(cluster, file) per user, cluster-major then file order; list index is the user id."""
        out = []
        n_files, n_clusters = self.counts.shape
        for c in range(n_clusters):
            for n in range(n_files):
                out.extend([(c, n)] * int(self.counts[n, c]))
        return out


def sample_profile(model: ClusterModel, seed) -> DemandProfile:
    rng = np.random.default_rng(seed)
    lam = model.rho * model.cluster_size / model.n_files
    return DemandProfile(rng.poisson(lam, size=(model.n_files, model.n_clusters)))


@dataclass(frozen=True)
class MatchingResult:
    assignments: tuple[tuple[int, int], ...]  # (user, cache)
    unmatched: tuple[tuple[int, int], ...]  # (user, file)

    def check(self, model: ClusterModel, users: list[tuple[int, int]]) -> None:
        """Load constraint and cluster membership; raises AssertionError."""
        caches = [k for _, k in self.assignments]
        assert len(caches) == len(set(caches)), "two users share a cache"
        for u, k in self.assignments:
            assert k in model.caches_in(users[u][0]), f"user {u} matched outside its cluster"
        seen = {u for u, _ in self.assignments} | {u for u, _ in self.unmatched}
        assert seen == set(range(len(users))), "users missing from the matching"

    def unmatched_files(self) -> list[int]:
        return sorted({f for _, f in self.unmatched})


def _matching(users, local_match, cluster_users, model) -> MatchingResult:
    assigned, unmatched = [], []
    for c, ids in cluster_users.items():
        base = model.caches_in(c).start
        for u, m in zip(ids, local_match[c]):
            if m is None:
                unmatched.append((u, users[u][1]))
            else:
                assigned.append((u, base + m))
    return MatchingResult(tuple(sorted(assigned)), tuple(sorted(unmatched)))


def _by_cluster(users) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for u, (c, _) in enumerate(users):
        out.setdefault(c, []).append(u)
    return out


# coloring -----------------------------------------------------------------


@dataclass(frozen=True)
class ColoringPlan:
    """Block coloring: local cache index i gets color i*chi//d, file n gets n*chi//N."""

    chi: int
    cache_color: tuple[int, ...]
    file_color: tuple[int, ...]

    @classmethod
    def build(cls, model: ClusterModel, chi: int) -> "ColoringPlan":
        d, N = model.cluster_size, model.n_files
        if not 1 <= chi <= min(d, N):
            raise InvalidArgument(f"chi = {chi} outside 1..{min(d, N)}")
        caches = tuple((k % d) * chi // d for k in range(model.n_caches))
        files = tuple(n * chi // N for n in range(N))
        return cls(chi, caches, files)

    def caches_of(self, color: int) -> list[int]:
        return [k for k, x in enumerate(self.cache_color) if x == color]

    def files_of(self, color: int) -> list[int]:
        return [n for n, x in enumerate(self.file_color) if x == color]

    @property
    def padded_files(self) -> int:
        """Per-color library size; smaller classes get zero files."""
        return max(len(self.files_of(x)) for x in range(self.chi))


def colored_match(model: ClusterModel, plan: ColoringPlan, profile: DemandProfile) -> MatchingResult:
    """Each user, in order, takes the first free cache of its file's color in its cluster."""
    users = profile.users()
    groups = _by_cluster(users)
    d = model.cluster_size
    local = {}
    for c, ids in groups.items():
        adj = [
            [i for i in range(d) if plan.cache_color[c * d + i] == plan.file_color[users[u][1]]]
            for u in ids
        ]
        local[c] = fcfs_match(adj)
    return _matching(users, local, groups, model)


def _color_memory(plan: ColoringPlan, M) -> Fraction:
    return min(Fraction(M), Fraction(plan.padded_files))


def colored_rate(model: ClusterModel, plan: ColoringPlan, M, profile: DemandProfile) -> Fraction:
    matching = colored_match(model, plan, profile)
    n_pad = plan.padded_files
    memory = _color_memory(plan, M)
    matched = [0] * plan.chi
    for _, k in matching.assignments:
        matched[plan.cache_color[k]] += 1
    coded = sum(
        (
            man.shared_partial_rate(n_pad, len(plan.caches_of(x)), memory, matched[x])
            for x in range(plan.chi)
        ),
        Fraction(0),
    )
    return coded + len(matching.unmatched_files())


@dataclass
class AdaptiveRun(RunResult):
    matching: Optional[MatchingResult] = None


def _direct(library: FileLibrary, files) -> list[Transmission]:
    return [Transmission(f"direct W{n}", library.files[n], key=("direct", n)) for n in files]


def colored_run(
    library: FileLibrary,
    model: ClusterModel,
    plan: ColoringPlan,
    M,
    profile: DemandProfile,
    fault_inject: bool = False,
) -> AdaptiveRun:
    if library.n_files != model.n_files:
        raise InvalidArgument("library size does not match the model")
    M = Fraction(M)
    n_pad = plan.padded_files
    memory = _color_memory(plan, M)
    splits = {}
    gran = 1
    for x in range(plan.chi):
        kx = len(plan.caches_of(x))
        splits[x] = man.memory_split(man.ManConfig(n_pad, kx, memory))
        gran = math.lcm(gran, man.granularity(kx, splits[x]))
    lib = library.padded(gran)
    F = lib.file_size
    zero = bytes(F)

    stores: list[dict] = [{} for _ in range(model.n_caches)]
    for x in range(plan.chi):
        names = plan.files_of(x)
        files = {j: lib.files[names[j]] if j < len(names) else zero for j in range(n_pad)}
        gl = plan.caches_of(x)
        for i, entries in enumerate(man.place_split(files, len(gl), splits[x])):
            stores[gl[i]] = entries
    caches = [CacheContent(k, M * F, s) for k, s in enumerate(stores)]
    if fault_inject:
        caches[0] = caches[0].corrupted()

    users = profile.users()
    matching = colored_match(model, plan, profile)
    local_file = {n: plan.files_of(plan.file_color[n]).index(n) for n in range(model.n_files)}
    local_cache = {k: plan.caches_of(plan.cache_color[k]).index(k) for k in range(model.n_caches)}
    out = []
    for x in range(plan.chi):
        names = plan.files_of(x)
        want = {
            local_cache[k]: local_file[users[u][1]]
            for u, k in matching.assignments
            if plan.cache_color[k] == x
        }
        files = {j: lib.files[names[j]] for j in set(want.values())}
        out.extend(man.deliver_split(files, len(plan.caches_of(x)), splits[x], want, group=x))
    out.extend(_direct(lib, matching.unmatched_files()))
    log = TransmissionLog(out)

    index = log.by_key()
    decoded = {}
    for u, k in matching.assignments:
        x = plan.cache_color[k]
        try:
            decoded[u] = man.decode_split(
                local_cache[k], local_file[users[u][1]], caches[k].entries, index,
                len(plan.caches_of(x)), splits[x], group=x,
            )
        except DecodeFailure:
            decoded[u] = None
    for u, n in matching.unmatched:
        decoded[u] = index[("direct", n)].payload
    expected = {u: lib.files[n] for u, (_, n) in enumerate(users)}
    return AdaptiveRun(log, F, caches, decoded, expected, matching)


# PCD and HCM ----------------------------------------------------------------


def hcm_plan(model: ClusterModel, t: float) -> ColoringPlan:
    if not 0 <= t <= model.t0:
        raise InvalidArgument(f"t = {t} outside [0, t0 = {model.t0}]")
    colors = analytics.chi(model.n_caches, model.cluster_size, model.rho, t)
    if colors == 0:
        raise analytics.DegenerateColoring(f"chi = 0 at d = {model.cluster_size}; use PCD")
    return ColoringPlan.build(model, min(colors, model.n_files))


def pcd_run(library, model, M, profile, seed=None, fault_inject=False) -> AdaptiveRun:
    """`seed` is accepted for interface symmetry; the FCFS matching is deterministic."""
    return colored_run(library, model, ColoringPlan.build(model, 1), M, profile, fault_inject)


def hcm_run(library, model, M, t, profile, seed=None, fault_inject=False) -> AdaptiveRun:
    return colored_run(library, model, hcm_plan(model, t), M, profile, fault_inject)


def pcd_rate(model: ClusterModel, M, profile: DemandProfile) -> Fraction:
    return colored_rate(model, ColoringPlan.build(model, 1), M, profile)


def hcm_rate(model: ClusterModel, M, t: float, profile: DemandProfile) -> Fraction:
    return colored_rate(model, hcm_plan(model, t), M, profile)


# PAM ----------------------------------------------------------------------


def pam_replicas(model: ClusterModel, M) -> int:
    """Copies of each file per cluster, limited so every cache holds at most floor(M) files."""
    d = model.cluster_size
    return min(d * math.floor(Fraction(M)) // model.n_files, d)


def pam_holders(model: ClusterModel, M, n: int) -> list[int]:
    """Local cache indices holding file n: slots n*r .. n*r+r-1, round-robin over d caches."""
    r = pam_replicas(model, M)
    d = model.cluster_size
    return sorted({(n * r + j) % d for j in range(r)})


def pam_placement(library: FileLibrary, model: ClusterModel, M) -> list[CacheContent]:
    M = Fraction(M)
    if M < 0:
        raise InvalidArgument("memory must be non-negative")
    stores: list[dict] = [{} for _ in range(model.n_caches)]
    for n, data in enumerate(library.files):
        for i in pam_holders(model, M, n):
            for c in range(model.n_clusters):
                stores[c * model.cluster_size + i][("file", n)] = data
    return [CacheContent(k, M * library.file_size, s) for k, s in enumerate(stores)]


def pam_match(model: ClusterModel, M, profile: DemandProfile) -> MatchingResult:
    users = profile.users()
    groups = _by_cluster(users)
    holders = {}
    local = {}
    for c, ids in groups.items():
        adj = []
        for u in ids:
            n = users[u][1]
            if n not in holders:
                holders[n] = pam_holders(model, M, n)
            adj.append(holders[n])
        local[c] = hopcroft_karp(adj, model.cluster_size)
    return _matching(users, local, groups, model)


def pam_rate(model: ClusterModel, M, profile: DemandProfile) -> Fraction:
    return Fraction(len(pam_match(model, M, profile).unmatched_files()))


def pam_run(library, model, M, profile, fault_inject=False) -> AdaptiveRun:
    caches = pam_placement(library, model, M)
    if fault_inject:
        caches[0] = caches[0].corrupted()
    users = profile.users()
    matching = pam_match(model, M, profile)
    log = TransmissionLog(_direct(library, matching.unmatched_files()))
    index = log.by_key()
    decoded = {}
    for u, k in matching.assignments:
        key = ("file", users[u][1])
        decoded[u] = caches[k][key] if key in caches[k] else None
    for u, n in matching.unmatched:
        decoded[u] = index[("direct", n)].payload
    expected = {u: library.files[n] for u, (_, n) in enumerate(users)}
    return AdaptiveRun(log, library.file_size, caches, decoded, expected, matching)


# Monte Carlo --------------------------------------------------------------


def scheme_rate(scheme: str, model: ClusterModel, M, profile: DemandProfile, t=None) -> Fraction:
    if scheme == "pcd":
        return pcd_rate(model, M, profile)
    if scheme == "pam":
        return pam_rate(model, M, profile)
    if scheme == "hcm":
        return hcm_rate(model, M, model.t0 if t is None else t, profile)
    raise InvalidArgument(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def scheme_run(scheme: str, library, model, M, profile, t=None, fault_inject=False) -> AdaptiveRun:
    if scheme == "pcd":
        return pcd_run(library, model, M, profile, fault_inject=fault_inject)
    if scheme == "pam":
        return pam_run(library, model, M, profile, fault_inject=fault_inject)
    if scheme == "hcm":
        return hcm_run(library, model, M, model.t0 if t is None else t, profile, fault_inject=fault_inject)
    raise InvalidArgument(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def trial_seed(master_seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, trial])


@dataclass(frozen=True)
class RateEstimate:
    mean: float
    std_err: float
    rates: tuple[Fraction, ...]
    failures: int = 0


def _trial(args) -> tuple[Fraction, int]:
    scheme, model, M, master_seed, r, t, file_size, fault_inject = args
    profile = sample_profile(model, trial_seed(master_seed, r))
    if file_size is None:
        return scheme_rate(scheme, model, M, profile, t), 0
    lib = FileLibrary.random(model.n_files, file_size, np.random.SeedSequence([master_seed, r, 1]))
    res = scheme_run(scheme, lib, model, M, profile, t, fault_inject)
    return res.rate, len(res.failures)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("CCSIM_THREADS", "1")))
    except ValueError:
        raise InvalidArgument("CCSIM_THREADS must be an integer") from None


def estimate_expected_rate(
    scheme: str,
    model: ClusterModel,
    M,
    n_trials: int,
    master_seed: int,
    workers: Optional[int] = None,
    t: Optional[float] = None,
    file_size: Optional[int] = None,
    fault_inject: bool = False,
) -> RateEstimate:
    """Mean and standard error of the rate over Poisson profiles.

    Trial r draws its profile from SeedSequence([master_seed, r]), so the result
    does not depend on `workers`.  With `file_size` set every trial is a full
    byte-level run and decode failures are counted; otherwise rates are counted exactly.
    """
    if n_trials < 2:
        raise InvalidArgument("need at least two trials")
    if scheme not in SCHEMES:
        raise InvalidArgument(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    workers = default_workers() if workers is None else workers
    jobs = [(scheme, model, M, master_seed, r, t, file_size, fault_inject) for r in range(n_trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial, jobs, chunksize=max(1, n_trials // (4 * workers))))
    else:
        results = [_trial(j) for j in jobs]
    rates = tuple(r for r, _ in results)
    arr = np.array([float(r) for r in rates])
    return RateEstimate(
        mean=float(sum(rates, Fraction(0)) / n_trials),
        std_err=float(arr.std(ddof=1) / math.sqrt(n_trials)),
        rates=rates,
        failures=sum(f for _, f in results),
    )


def rate_bound(scheme: str, model: ClusterModel, M, t=None) -> float:
    N, K, d, rho = model.n_files, model.n_caches, model.cluster_size, model.rho
    if scheme == "pcd":
        return analytics.pcd_bound(N, K, d, rho, model.t0, M)
    if scheme == "pam":
        return analytics.pam_bound(N, K, d, rho, M)
    if scheme == "hcm":
        return analytics.hcm_bound(N, K, d, rho, model.t0 if t is None else t, M)
    raise InvalidArgument(f"unknown scheme {scheme!r}")
