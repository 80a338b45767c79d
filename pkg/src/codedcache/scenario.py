"""Scenario description and the per-scheme runners behind the command line.

A scenario is a scheme name plus flat string parameters (as read from a
key=value file).  Each scheme knows how to evaluate its formulas on an M grid
and how to run one seeded trial end to end.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import adaptive, analytics, decentralized, man, multiaccess, multilevel
from .core import CodedCacheError, DemandVector, FileLibrary

SCHEMES = ("man", "decentralized", "su", "mu", "pcd", "pam", "hcm", "multiaccess")
POLICIES = ("distinct", "same", "stochastic", "explicit")

CURVE_COLUMNS = (
    "M", "formula_rate", "formula_rate_exact", "bound_rate", "bound_rate_exact",
    "measured_rate", "measured_rate_exact", "std_err", "scheme", "seed",
)
TRIAL_COLUMNS = ("M", "trial", "measured_rate", "measured_rate_exact", "decode_failures", "scheme", "seed")


class ScenarioError(CodedCacheError):
    """Bad or missing scenario parameter (a usage error)."""


def parse_config(text: str) -> dict[str, str]:
    """key=value lines; blank lines and '#' comments are ignored."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"config line {n}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass
class Scenario:
    scheme: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    trials: int = 1
    file_size: Optional[int] = None
    fault_inject: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ScenarioError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.trials < 1:
            raise ScenarioError("trials must be >= 1")
        if self.file_size is not None and self.file_size < 1:
            raise ScenarioError("file size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ScenarioError("seed must fit in 64 bits")

    # parameter access ---------------------------------------------------

    def _raw(self, key, default):
        if key in self.params:
            return self.params[key]
        if default is _REQUIRED:
            raise ScenarioError(f"scheme {self.scheme} needs parameter {key!r}")
        return default

    def get_int(self, key, default=None) -> int:
        value = self._raw(key, _REQUIRED if default is None else default)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ScenarioError(f"{key} must be an integer, got {value!r}") from None

    def get_float(self, key, default=None) -> float:
        value = self._raw(key, _REQUIRED if default is None else default)
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ScenarioError(f"{key} must be a number, got {value!r}") from None

    def ints(self, key) -> tuple[int, ...]:
        value = self._raw(key, _REQUIRED)
        try:
            return tuple(int(v) for v in str(value).split(",") if v.strip())
        except ValueError:
            raise ScenarioError(f"{key} must be a comma-separated integer list") from None

    def grid(self, default: Optional[list] = None) -> list[Fraction]:
        """M values: comma list of numbers or fractions like 3/2."""
        if "M" not in self.params:
            if default is None:
                raise ScenarioError("parameter 'M' (memory grid) is required")
            return default
        try:
            values = [Fraction(v.strip()) for v in str(self.params["M"]).split(",") if v.strip()]
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(f"bad M grid {self.params['M']!r}") from None
        if not values:
            raise ScenarioError("M grid is empty")
        if any(v < 0 for v in values):
            raise ScenarioError("memory values must be non-negative")
        return sorted(set(values))

    @property
    def policy(self) -> str:
        p = self.params.get("demand", "distinct")
        if p not in POLICIES:
            raise ScenarioError(f"demand policy {p!r} not in {POLICIES}")
        return p


_REQUIRED = object()


@dataclass(frozen=True)
class CurveRow:
    M: Fraction
    formula: object = None
    bound: object = None
    measured: object = None
    std_err: Optional[float] = None
    tag: str = ""


def _fmt(value) -> tuple[str, str]:
    if value is None:
        return "", ""
    if isinstance(value, Fraction):
        exact = f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)
        return format(float(value), ".12g"), exact
    if isinstance(value, int):
        return str(value), str(value)
    return format(float(value), ".12g"), ""


def _fmt_m(M: Fraction) -> str:
    return str(M.numerator) if M.denominator == 1 else f"{M.numerator}/{M.denominator}"


def curve_csv(rows: list[CurveRow], seed: int) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CURVE_COLUMNS)
    for r in sorted(rows, key=lambda r: (r.M, r.tag)):
        fields = [_fmt_m(r.M)]
        for v in (r.formula, r.bound, r.measured):
            fields.extend(_fmt(v))
        fields.append("" if r.std_err is None else format(r.std_err, ".12g"))
        fields.extend([r.tag, str(seed)])
        out.writerow(fields)
    return buf.getvalue()


def _seq(seed: int, trial: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, trial, stream])


# per-scheme setup ---------------------------------------------------------


def _man_demands(sc: Scenario, N: int, K: int, rng) -> DemandVector:
    policy = sc.policy
    if policy == "distinct":
        return DemandVector.from_files([k % N for k in range(K)])
    if policy == "same":
        return DemandVector.from_files([0] * K)
    if policy == "stochastic":
        return DemandVector.from_files(rng.integers(0, N, size=K).tolist())
    files = sc.ints("demands")
    if len(files) != K:
        raise ScenarioError(f"explicit demands need {K} entries")
    return DemandVector.from_files(files)


def _levels(sc: Scenario) -> multilevel.LevelSpec:
    try:
        return multilevel.LevelSpec(sc.ints("levels_N"), sc.ints("levels_users"))
    except CodedCacheError as exc:
        raise ScenarioError(str(exc)) from None


def _model(sc: Scenario) -> adaptive.ClusterModel:
    try:
        return adaptive.ClusterModel(
            sc.get_int("N"), sc.get_int("K"), sc.get_int("d"), sc.get_float("rho"), sc.get_float("t0")
        )
    except CodedCacheError as exc:
        raise ScenarioError(str(exc)) from None


def _hcm_t(sc: Scenario, model) -> float:
    return sc.get_float("t", model.t0)


def _su_partitions(sc: Scenario, levels) -> list[tuple[str, multilevel.LevelPartitionSU]]:
    """`partitions=0|0,1|0,1,2` forces the merged set I; H is the rest."""
    raw = sc.params.get("partitions")
    if not raw:
        return []
    out = []
    everything = frozenset(range(levels.n_levels))
    for chunk in str(raw).split("|"):
        try:
            I = frozenset(int(v) for v in chunk.split(",") if v.strip())
        except ValueError:
            raise ScenarioError(f"bad partition {chunk!r}") from None
        if not I <= everything:
            raise ScenarioError(f"partition {chunk!r} names a missing level")
        tag = "su[I=" + ",".join(str(i) for i in sorted(I)) + "]"
        out.append((tag, multilevel.LevelPartitionSU(everything - I, I)))
    return out


def _mu_partition(levels, K, M):
    try:
        return multilevel.mu_partition(levels, K, M)
    except (multilevel.NoValidPartition, multilevel.AmbiguousPartition):
        _, values = multilevel.mu_best_bound(levels, K, M)
        return min(values, key=lambda v: v[0])[1]


def validate(sc: Scenario) -> None:
    """Check every parameter the scheme will read, before any run."""
    s = sc.scheme
    grid = sc.grid([Fraction(0)])
    if sc.policy == "explicit" and s not in ("man", "decentralized", "multiaccess"):
        raise ScenarioError(f"explicit demands are not supported for {s}")
    if s in ("man", "decentralized", "multiaccess"):
        N, K = sc.get_int("N"), sc.get_int("K")
        if N < 1 or K < 1:
            raise ScenarioError("need N >= 1 and K >= 1")
        if s == "decentralized" and K > 64:
            raise ScenarioError("decentralized runs support K <= 64")
        if s == "multiaccess":
            d = sc.get_int("d")
            if not 1 <= d <= K or K > 255:
                raise ScenarioError("need 1 <= d <= K <= 255")
        if s != "multiaccess" and any(m > N for m in grid):
            raise ScenarioError(f"memory exceeds N = {N}")
        if sc.policy == "explicit":
            files = sc.ints("demands")
            if len(files) != K or not all(0 <= f < N for f in files):
                raise ScenarioError("explicit demands must list K files in 0..N-1")
    elif s == "su":
        _levels(sc).check_single_user()
        _su_partitions(sc, _levels(sc))
    elif s == "mu":
        try:
            _levels(sc).check_multi_user(sc.get_int("K"))
        except CodedCacheError as exc:
            raise ScenarioError(str(exc)) from None
    else:
        model = _model(sc)
        if s == "hcm":
            t = _hcm_t(sc, model)
            if not 0 <= t <= model.t0:
                raise ScenarioError(f"t = {t} outside [0, t0]")


# formula rows -------------------------------------------------------------


def curve_rows(sc: Scenario, measure: bool = False, workers: int = 1) -> list[CurveRow]:
    validate(sc)
    s = sc.scheme
    rows = []
    if s == "man":
        N, K = sc.get_int("N"), sc.get_int("K")
        for M in sc.grid([Fraction(t * N, K) for t in range(K + 1)]):
            rows.append(CurveRow(M, analytics.r_man(N, K, M), analytics.r_man_ub(N, K, M), tag=s))
    elif s == "decentralized":
        N, K = sc.get_int("N"), sc.get_int("K")
        for M in sc.grid([Fraction(t * N, K) for t in range(K + 1)]):
            rows.append(CurveRow(M, analytics.r_dec(N, K, M), analytics.r_man_ub(N, K, M), tag=s))
    elif s == "multiaccess":
        N, K, d = sc.get_int("N"), sc.get_int("K"), sc.get_int("d")
        acc = multiaccess.CyclicAccess(K, d)
        for M in sc.grid([Fraction(j * N, 2 * K) for j in range(2 * K + 1)]):
            formula = multiaccess.ma_rate(N, acc, M) if N >= K else None
            rows.append(CurveRow(M, formula, analytics.r_ma_bound(N, K, d, M), tag=s))
    elif s == "su":
        levels = _levels(sc)
        forced = _su_partitions(sc, levels)
        for M in sc.grid():
            if M <= 0:
                raise ScenarioError("single-user bounds need M > 0")
            rows.append(CurveRow(M, multilevel.su_rate_bound(levels, M), tag=s))
            for tag, part in forced:
                rows.append(CurveRow(M, multilevel.su_rate_bound(levels, M, part), tag=tag))
    elif s == "mu":
        levels, K = _levels(sc), sc.get_int("K")
        for M in sc.grid():
            best, _ = multilevel.mu_best_bound(levels, K, M)
            rows.append(CurveRow(M, best, tag=s))
    else:
        model = _model(sc)
        t = _hcm_t(sc, model) if s == "hcm" else None
        for M in sc.grid([Fraction(model.n_files * 2**j, model.cluster_size) for j in range(8)]):
            try:
                bound = adaptive.rate_bound(s, model, M, t)
            except analytics.DegenerateColoring as exc:
                raise ScenarioError(str(exc)) from None
            rows.append(CurveRow(M, bound, tag=s))
    if measure:
        rows = [_with_measurement(sc, r, workers) for r in rows]
    return rows


def _with_measurement(sc: Scenario, row: CurveRow, workers: int) -> CurveRow:
    if row.tag != sc.scheme:
        return row
    trials = run_trials(sc, [row.M], workers)
    rates = [t.rate for t in trials]
    n = len(rates)
    mean = sum(rates, Fraction(0)) / n
    se = float(np.std([float(r) for r in rates], ddof=1) / math.sqrt(n)) if n > 1 else None
    return CurveRow(row.M, row.formula, row.bound, mean, se, row.tag)


# trials -------------------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    M: Fraction
    trial: int
    rate: Fraction
    failures: tuple  # (user, file) pairs that did not decode


def _trial(args) -> TrialResult:
    sc, M, r = args
    s = sc.scheme
    rng = np.random.default_rng(_seq(sc.seed, r, 2))
    F = sc.file_size or 1
    if s == "man":
        N, K = sc.get_int("N"), sc.get_int("K")
        lib = FileLibrary.random(N, F, _seq(sc.seed, r, 1))
        dv = _man_demands(sc, N, K, rng)
        res = man.simulate(lib, man.ManConfig(N, K, M), dv, sc.fault_inject)
        want = dv.as_dict()
    elif s == "decentralized":
        N, K = sc.get_int("N"), sc.get_int("K")
        lib = FileLibrary.random(N, sc.file_size or 10_000, _seq(sc.seed, r, 1))
        dv = _man_demands(sc, N, K, rng)
        res = decentralized.simulate(lib, K, M, dv, _seq(sc.seed, r, 3), sc.fault_inject)
        want = dv.as_dict()
    elif s == "multiaccess":
        N, K, d = sc.get_int("N"), sc.get_int("K"), sc.get_int("d")
        lib = FileLibrary.random(N, F, _seq(sc.seed, r, 1))
        dv = _man_demands(sc, N, K, rng)
        res = multiaccess.ma_run(lib, multiaccess.CyclicAccess(K, d), M, dv, sc.fault_inject)
        want = dv.as_dict()
    elif s == "su":
        levels = _levels(sc)
        libs = [FileLibrary.random(n, F, _seq(sc.seed, r, 10 + i)) for i, n in enumerate(levels.n_files)]
        demands = []
        for i, (n, k) in enumerate(zip(levels.n_files, levels.users)):
            for j in range(k):
                f = j % n if sc.policy == "distinct" else 0 if sc.policy == "same" else int(rng.integers(n))
                demands.append((i, f))
        res = multilevel.su_simulate(libs, levels, M, demands, fault_inject=sc.fault_inject)
        want = dict(enumerate(demands))
    elif s == "mu":
        levels, K = _levels(sc), sc.get_int("K")
        libs = [FileLibrary.random(n, F, _seq(sc.seed, r, 10 + i)) for i, n in enumerate(levels.n_files)]
        demands = {}
        for i, (n, u) in enumerate(zip(levels.n_files, levels.users)):
            if sc.policy == "distinct":
                demands[i] = [[(row * K + k) % n for k in range(K)] for row in range(u)]
            elif sc.policy == "same":
                demands[i] = [[0] * K for _ in range(u)]
            else:
                demands[i] = rng.integers(0, n, size=(u, K)).tolist()
        part = _mu_partition(levels, K, M)
        res = multilevel.mu_simulate(libs, levels, K, M, demands, part, fault_inject=sc.fault_inject)
        want = {(i, row, k): demands[i][row][k] for i in demands for row in range(len(demands[i])) for k in range(K)}
    else:
        model = _model(sc)
        profile = adaptive.sample_profile(model, adaptive.trial_seed(sc.seed, r))
        t = _hcm_t(sc, model) if s == "hcm" else None
        if sc.file_size is None and sc.params.get("mode", "count") == "count":
            return TrialResult(M, r, adaptive.scheme_rate(s, model, M, profile, t), ())
        lib = FileLibrary.random(model.n_files, F, _seq(sc.seed, r, 1))
        res = adaptive.scheme_run(s, lib, model, M, profile, t, sc.fault_inject)
        users = profile.users()
        want = {u: users[u][1] for u in range(len(users))}
    failures = tuple(sorted((u, want[u]) for u in res.failures))
    return TrialResult(M, r, res.rate, failures)


def default_workers() -> int:
    return adaptive.default_workers()


def run_trials(sc: Scenario, grid: list[Fraction], workers: Optional[int] = None) -> list[TrialResult]:
    """All (M, trial) runs, sorted; trial seeds depend only on (seed, trial)."""
    validate(sc)
    workers = default_workers() if workers is None else workers
    jobs = [(sc, M, r) for M in grid for r in range(sc.trials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial, jobs))
    else:
        results = [_trial(j) for j in jobs]
    return sorted(results, key=lambda t: (t.M, t.trial))


def trials_csv(sc: Scenario, results: list[TrialResult]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(TRIAL_COLUMNS)
    for t in results:
        rate, exact = _fmt(t.rate)
        out.writerow([_fmt_m(t.M), t.trial, rate, exact, len(t.failures), sc.scheme, sc.seed])
    return buf.getvalue()


def summarize(results: list[TrialResult]) -> list[str]:
    lines = []
    for M in sorted({t.M for t in results}):
        rates = [t.rate for t in results if t.M == M]
        mean = sum(rates, Fraction(0)) / len(rates)
        se = np.std([float(r) for r in rates], ddof=1) / math.sqrt(len(rates)) if len(rates) > 1 else 0.0
        lines.append(f"M={M} trials={len(rates)} mean={float(mean):.12g} std_err={se:.12g}")
    for t in results:
        for user, f in t.failures:
            lines.append(f"decode failure: M={t.M} trial={t.trial} user={user} file={f}")
    return lines
