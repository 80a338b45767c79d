"""Acceptance battery at desk scale, shared by `ccsim verify` and the test suite.

Each check returns a `CheckResult`; `fault_inject` corrupts one cache in every
byte-level run, which must make the decode checks fail.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import adaptive, analytics, decentralized, man, multiaccess, multilevel
from .core import CacheContent, DemandVector, FileLibrary, subsets_of_size
from .scenario import Scenario, run_trials, trials_csv


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0
    skipped: bool = False

    def line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.ok else "FAIL")
        return f"[{status}] {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


# 1 -------------------------------------------------------------------------


def man_rate_law(fault_inject: bool = False, n_random: int = 200, seed: int = 0):
    """Measured rate (K-t)/(t+1) and bit-exact decode for every demand vector
    (exhaustive for K <= 4, random vectors above)."""
    rng = random.Random(seed)
    runs = bad_rate = bad_decode = 0
    for K in range(2, 7):
        for N in range(K, 9):
            for t in range(K + 1):
                cfg = man.ManConfig.from_t(N, K, t)
                lib = FileLibrary.random(N, 2 * math.comb(K, t), seed=(N, K, t))
                caches = man.sharing_placement(lib, cfg)
                if fault_inject:
                    caches[0] = caches[0].corrupted()
                if K <= 4:
                    vectors = itertools.product(range(N), repeat=K)
                else:
                    vectors = (tuple(rng.randrange(N) for _ in range(K)) for _ in range(n_random))
                want = Fraction(K - t, t + 1)
                for files in vectors:
                    dv = DemandVector.from_files(files)
                    log = man.run_with_sharing(lib, cfg, dv)
                    runs += 1
                    bad_rate += log.total_bytes != want * lib.file_size
                    for k, f in enumerate(files):
                        try:
                            ok = man.sharing_decode(k, f, caches[k], log, cfg) == lib.files[f]
                        except Exception:
                            ok = False
                        if not ok:
                            bad_decode += 1
    ok = bad_rate == 0 and bad_decode == 0
    return ok, f"{runs} runs, {bad_rate} rate mismatches, {bad_decode} decode failures"


# 2 -------------------------------------------------------------------------


def two_user_example(fault_inject: bool = False):
    lib = FileLibrary.random(2, 1024, seed=2)
    A, B = lib.files
    res = man.simulate(lib, man.ManConfig(2, 2, 1), DemandVector.from_files([0, 1]), fault_inject)
    payloads = [e.payload for e in res.log]
    expected = bytes(a ^ b for a, b in zip(A[512:], B[:512]))
    ok = (
        len(payloads) == 1
        and len(payloads[0]) == 512
        and payloads[0] == expected
        and res.rate == Fraction(1, 2)
        and not res.failures
    )
    label = res.log.entries[0].label if payloads else "-"
    return ok, f"{len(payloads)} payload(s), rate {res.rate}, label '{label}'"


# 3 -------------------------------------------------------------------------


def su_example():
    levels = multilevel.LevelSpec((100, 500, 1000), (100, 50, 5))
    M = 100
    everything = frozenset(range(3))
    values = []
    for I in ({0}, {0, 1, 2}, {0, 1}):
        part = multilevel.LevelPartitionSU(everything - I, I)
        values.append(multilevel.su_rate_bound(levels, M, part))
    part = multilevel.su_partition(levels, M)
    ok = values == [55, 15, 10] and part.H == {2} and part.I == {0, 1}
    shown = ", ".join(str(v) for v in values)
    return ok, f"rates {shown}; threshold H={sorted(part.H)} I={sorted(part.I)} (levels from 0)"


# 4 -------------------------------------------------------------------------


def mu_example():
    levels = multilevel.LevelSpec((100, 200, 300), (10, 5, 1))
    K, M = 10, 100
    P = multilevel.LevelPartitionMU
    a = multilevel.mu_rate_bound(levels, K, M, P({1, 2}, set(), {0}))
    b = multilevel.mu_rate_bound(levels, K, M, P(set(), {0, 1, 2}, set()))
    c = multilevel.mu_rate_bound(levels, K, M, P({2}, {0, 1}, set()))
    ok = a == 60 and abs(b - 49) <= 1.0 and abs(c - 35) <= 0.5
    return ok, f"rates {a:g}, {b:.4f}, {c:.4f}"


# 5 -------------------------------------------------------------------------


def decentralized_convergence(fault_inject: bool = False, n_seeds: int = 20, file_size: int = 100_000):
    N = K = 4
    M = 1
    lib = FileLibrary.random(N, file_size, seed=5)
    dv = DemandVector.from_files(range(K))
    rates, failures = [], 0
    for s in range(n_seeds):
        res = decentralized.simulate(lib, K, M, dv, seed=s, fault_inject=fault_inject)
        rates.append(float(res.rate))
        failures += len(res.failures)
    target = float(analytics.r_dec(N, K, M))
    mean = float(np.mean(rates))
    rel = abs(mean - target) / target
    ok = rel <= 0.10 and failures == 0
    return ok, f"mean {mean:.4f} vs r_dec {target:.4f} (rel {rel:.2%}), {failures} decode failures"


# 6 -------------------------------------------------------------------------

ADAPTIVE_MODEL = dict(n_files=256, n_caches=256, cluster_size=64, rho=0.25, t0=0.1)
ADAPTIVE_MODEL_PARAMS = {"N": "256", "K": "256", "d": "64", "rho": "0.25", "t0": "0.1"}
ADAPTIVE_GRID = (16, 32, 64, 128, 256)


def adaptive_bounds(n_trials: int = 100, master_seed: int = 0, workers: int = 1, model=None):
    """Count-mode Monte Carlo against the three bounds; skipped when d is below
    the regularity threshold."""
    model = model or adaptive.ClusterModel(**ADAPTIVE_MODEL)
    threshold = analytics.regularity_threshold(model.n_caches, model.rho, model.t0)
    if not model.regular:
        return None, f"WARNING: d = {model.cluster_size} < {threshold:.2f}; bound checks skipped"
    problems = []
    notes = []
    for M in ADAPTIVE_GRID:
        est = {
            s: adaptive.estimate_expected_rate(s, model, M, n_trials, master_seed, workers)
            for s in adaptive.SCHEMES
        }
        for s, e in est.items():
            bound = adaptive.rate_bound(s, model, M)
            if e.mean > bound + 3 * e.std_err:
                problems.append(f"{s} M={M}: {e.mean:.4f} > {bound:.4f}")
        if est["hcm"].mean > est["pcd"].mean + 2 * est["pcd"].std_err:
            problems.append(f"hcm above pcd at M={M}")
        notes.append(f"M={M}: " + " ".join(f"{s}={est[s].mean:.3f}" for s in adaptive.SCHEMES))
        if M == 256 and est["pam"].mean >= 1e-3:
            problems.append(f"pam mean {est['pam'].mean} at M=256")
    detail = "; ".join(notes)
    detail += " | note: PCD bound capped at rho*d, PAM at rho*K, as each is stated"
    return not problems, (detail if not problems else "; ".join(problems))


# 7 -------------------------------------------------------------------------


def _brute_max(adj) -> int:
    best = 0

    def rec(i, used, size):
        nonlocal best
        if size + (len(adj) - i) <= best:
            return
        if i == len(adj):
            best = size
            return
        for v in adj[i]:
            if v not in used:
                rec(i + 1, used | {v}, size + 1)
        rec(i + 1, used, size)

    rec(0, frozenset(), 0)
    return best


def pam_matching_oracle(n_instances: int = 500, seed: int = 7):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_instances):
        d = int(rng.integers(1, 7))
        N = int(rng.integers(1, 9))
        M = int(rng.integers(0, N + 1))
        model = adaptive.ClusterModel(N, d, d, 0.25, 0.1)
        counts = rng.poisson(rng.uniform(0.2, 1.5), size=(N, 1))
        profile = adaptive.DemandProfile(counts)
        users = profile.users()
        result = adaptive.pam_match(model, M, profile)
        result.check(model, users)
        adj = [adaptive.pam_holders(model, M, f) for _, f in users]
        bad += len(result.assignments) != _brute_max(adj)
    return bad == 0, f"{n_instances} clusters, {bad} below the exhaustive maximum"


# 8 -------------------------------------------------------------------------


def multiaccess_checks(fault_inject: bool = False):
    problems = []
    checked = 0
    for K in (4, 6):
        N = K
        for d in (1, 2, 3):
            acc = multiaccess.CyclicAccess(K, d)
            top = Fraction(N, d)
            # rate zero at M = N/d; every user decodes every file from its window
            lib = FileLibrary.random(N, 1, seed=(K, d))
            plan = multiaccess.ma_plan(N, acc, top)
            padded = lib.padded(plan.granularity())
            caches = multiaccess.ma_placement(padded, acc, top)
            if fault_inject:
                caches[0] = caches[0].corrupted()
            empty = multiaccess.ma_delivery(padded, acc, top, DemandVector.from_files(range(K)))
            if empty.total_bytes:
                problems.append(f"K={K} d={d}: nonzero rate at M=N/d")
            for k in range(K):
                window = {c: caches[c] for c in acc.caches_of(k)}
                for f in range(N):
                    try:
                        got = multiaccess.ma_decode(k, f, window, empty, acc, top, N)
                    except Exception:
                        got = None
                    if got != padded.files[f]:
                        problems.append(f"K={K} d={d}: user {k} cannot decode file {f}")
            # bound and d = 1 trace equivalence on a half-integer grid
            previous = None
            for j in range(1, 2 * N + 1):
                M = Fraction(j, 2)
                if d * M >= N and M != top:
                    continue
                demands = DemandVector.from_files(range(K))
                lib = FileLibrary.random(N, 1, seed=(K, d, j))
                res = multiaccess.ma_run(lib, acc, M, demands, fault_inject)
                checked += 1
                if res.failures:
                    problems.append(f"K={K} d={d} M={M}: decode failures {res.failures}")
                if d * M < N and res.rate > analytics.r_ma_bound(N, K, d, M):
                    problems.append(f"K={K} d={d} M={M}: rate {res.rate} above bound")
                if previous is not None and res.rate > previous:
                    problems.append(f"K={K} d={d} M={M}: rate increased")
                previous = res.rate
                if d == 1:
                    ref = man.simulate(lib, man.ManConfig(N, K, M), demands, fault_inject)
                    if ref.log.fingerprint() != res.log.fingerprint():
                        problems.append(f"K={K} M={M}: d=1 trace differs from the centralized run")
    for K in range(1, 9):
        data = bytes(np.random.default_rng(K).integers(0, 256, size=840, dtype=np.uint8))
        for d in range(1, K + 1):
            shares = multiaccess.mds_encode(data, K, d).shares
            for ids in itertools.combinations(range(K), d):
                if multiaccess.mds_decode({i: shares[i] for i in ids}, K, d) != data:
                    problems.append(f"MDS K={K} d={d} ids={ids}")
    detail = f"{checked} runs; " + ("all laws hold" if not problems else "; ".join(problems[:5]))
    return not problems, detail


# 9 -------------------------------------------------------------------------


def determinism(worker_counts=(1, 8)):
    scenarios = [
        Scenario("pcd", {"N": "16", "K": "16", "d": "4", "rho": "0.25", "t0": "0.1", "M": "4"},
                 seed=9, trials=8, file_size=1),
        Scenario("hcm", dict(ADAPTIVE_MODEL_PARAMS, M="16,64"), seed=9, trials=8),
        Scenario("multiaccess", {"N": "6", "K": "6", "d": "2", "M": "2", "demand": "stochastic"},
                 seed=9, trials=4),
    ]
    outputs = []
    for sc in scenarios:
        grid = sc.grid()
        runs = [trials_csv(sc, run_trials(sc, grid, w)) for w in worker_counts for _ in range(2)]
        outputs.append(all(r == runs[0] for r in runs))
    return all(outputs), f"{len(scenarios)} scenarios x workers {worker_counts} x 2 runs, identical={outputs}"


# 10 ------------------------------------------------------------------------


def _brute_hull(points):
    """Lower hull value at x: min over all chords and points covering x."""
    def value(x):
        best = math.inf
        for (x0, y0) in points:
            if x0 == x:
                best = min(best, y0)
        for (x0, y0), (x1, y1) in itertools.combinations(points, 2):
            if x0 > x1:
                x0, y0, x1, y1 = x1, y1, x0, y0
            if x0 < x < x1:
                best = min(best, y0 + (y1 - y0) * (x - x0) / (x1 - x0))
        return best

    return value


def property_suite(seed: int = 10):
    problems = []
    rng = random.Random(seed)
    # subset enumeration counts
    for k in range(13):
        for t in range(k + 1):
            if len(subsets_of_size(k, t)) != math.comb(k, t):
                problems.append(f"subsets({k},{t})")
    # placement is demand-oblivious and within budget
    lib = FileLibrary.random(4, 24, seed=seed)
    placements: list[list[CacheContent]] = []
    for M in (Fraction(0), Fraction(3, 2), Fraction(2), Fraction(4)):
        cfg = man.ManConfig(4, 4, M)
        padded = lib.padded(man.granularity(4, man.memory_split(cfg)))
        seen = set()
        for files in itertools.product(range(4), repeat=4):
            res = man.simulate(padded, cfg, DemandVector.from_files(files))
            seen.add(tuple(tuple(sorted(c.entries.items())) for c in res.caches))
            placements.append(res.caches)
        if len(seen) != 1:
            problems.append(f"man placement depends on demands at M={M}")
    acc = multiaccess.CyclicAccess(5, 2)
    for M in (Fraction(1, 2), Fraction(3, 2), Fraction(5, 2)):
        plan = multiaccess.ma_plan(5, acc, M)
        padded = FileLibrary.random(5, 1, seed).padded(plan.granularity())
        seen = set()
        for _ in range(20):
            files = [rng.randrange(5) for _ in range(5)]
            res = multiaccess.ma_run(padded, acc, M, DemandVector.from_files(files))
            seen.add(tuple(tuple(sorted(c.entries.items(), key=repr)) for c in res.caches))
            placements.append(res.caches)
        if len(seen) != 1:
            problems.append(f"multiaccess placement depends on demands at M={M}")
    model = adaptive.ClusterModel(8, 8, 4, 0.25, 0.1)
    small = FileLibrary.random(8, 4, seed)
    for M in (0, 1, 2, 4, 8):
        placements.append(adaptive.pam_placement(small, model, M))
        for s in range(3):
            placements.append(adaptive.pcd_run(small, model, M, adaptive.sample_profile(model, s)).caches)
    placements.append(decentralized.dec_placement(FileLibrary.random(4, 100, seed), 4, 1, seed)[0])
    for caches in placements:
        for c in caches:
            if c.used_bytes > c.budget_bytes:
                problems.append(f"cache {c.cache_id} over budget")
    # convex envelope against the all-chords oracle
    for _ in range(200):
        n = rng.randint(2, 7)
        xs = rng.sample(range(0, 20), n)
        pts = [(Fraction(x), Fraction(rng.randint(0, 30))) for x in xs]
        env = analytics.convex_envelope(pts)
        oracle = _brute_hull(pts)
        for q in range(min(xs) * 4, max(xs) * 4 + 1):
            x = Fraction(q, 4)
            if env(x) != oracle(x):
                problems.append(f"envelope mismatch at {x} for {pts}")
                break
    return not problems, ("all properties hold" if not problems else "; ".join(problems[:5]))


# battery -------------------------------------------------------------------

CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "MAN exact rate law", lambda fi: man_rate_law(fi)),
    (2, "two-user example", lambda fi: two_user_example(fi)),
    (3, "single-user level example", lambda fi: su_example()),
    (4, "multi-user level example", lambda fi: mu_example()),
    (5, "decentralized convergence", lambda fi: decentralized_convergence(fi)),
    (6, "adaptive matching bounds", lambda fi: adaptive_bounds()),
    (7, "PAM matching oracle", lambda fi: pam_matching_oracle()),
    (8, "multi-access laws", lambda fi: multiaccess_checks(fi)),
    (9, "determinism across workers", lambda fi: determinism()),
    (10, "property suite", lambda fi: property_suite()),
]


def run_check(number: int, fault_inject: bool = False) -> CheckResult:
    _, name, fn = CRITERIA[number - 1]
    start = time.perf_counter()
    ok, detail = fn(fault_inject)
    seconds = time.perf_counter() - start
    if ok is None:
        return CheckResult(number, name, True, detail, seconds, skipped=True)
    return CheckResult(number, name, bool(ok), detail, seconds)


def run_all(fault_inject: bool = False, only=None, echo=None) -> list[CheckResult]:
    out = []
    for number, _, _ in CRITERIA:
        if only and number not in only:
            continue
        res = run_check(number, fault_inject)
        if echo:
            echo(res.line())
        out.append(res)
    return out
