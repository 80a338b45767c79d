"""ccsim: rate curves, Monte Carlo simulation, sweeps and the verification battery.

Exit codes: 0 success, 1 verification or decode failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import CodedCacheError
from .scenario import (
    SCHEMES,
    Scenario,
    ScenarioError,
    curve_csv,
    curve_rows,
    default_workers,
    parse_config,
    run_trials,
    summarize,
    trials_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scheme", choices=SCHEMES)
    common.add_argument("--config", type=Path, help="key=value file; flags override it")
    common.add_argument("-p", "--param", action="append", default=[], metavar="KEY=VALUE",
                        help="scenario parameter, e.g. -p N=4 -p M=0,1,2")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--file-size", type=int)
    common.add_argument("--out", type=Path, help="output CSV (default stdout)")
    common.add_argument("--workers", type=int, help="worker processes (default $CCSIM_THREADS or 1)")
    common.add_argument("--fault-inject", action="store_true", help=argparse.SUPPRESS)

    parser = _Parser(prog="ccsim", description="coded caching simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    rc = sub.add_parser("rate-curve", parents=[common], help="formula and bound rates on an M grid")
    rc.add_argument("--measure", action="store_true", help="also simulate each grid point")
    sub.add_parser("simulate", parents=[common], help="per-trial measured rates")
    sub.add_parser("sweep", parents=[common], help="rate curve with Monte Carlo means at every M")
    v = sub.add_parser("verify", help="run the acceptance battery")
    v.add_argument("--fault-inject", action="store_true", help=argparse.SUPPRESS)
    v.add_argument("--only", type=int, action="append", metavar="N", help="run criterion N only")
    return parser


def scenario_from_args(args) -> Scenario:
    params = {}
    if args.config is not None:
        try:
            params.update(parse_config(args.config.read_text(encoding="utf-8")))
        except OSError as exc:
            raise ScenarioError(f"cannot read config: {exc}") from None
    for item in args.param:
        if "=" not in item:
            raise ScenarioError(f"--param expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    scheme = args.scheme or params.pop("scheme", None)
    params.pop("scheme", None)
    if scheme is None:
        raise ScenarioError("no scheme given (--scheme or scheme= in the config)")

    def pick(flag, key, default):
        if flag is not None:
            return flag
        if key in params:
            try:
                return int(params.pop(key))
            except ValueError:
                raise ScenarioError(f"{key} must be an integer") from None
        return default

    seed = pick(args.seed, "seed", 0)
    trials = pick(args.trials, "trials", 1)
    file_size = pick(args.file_size, "file_size", None)
    return Scenario(scheme, params, seed, trials, file_size, args.fault_inject)


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _workers(args) -> int:
    return default_workers() if args.workers is None else max(1, args.workers)


def cmd_rate_curve(args) -> int:
    sc = scenario_from_args(args)
    rows = curve_rows(sc, measure=args.measure, workers=_workers(args))
    _emit(curve_csv(rows, sc.seed), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = scenario_from_args(args)
    rows = curve_rows(sc, measure=True, workers=_workers(args))
    _emit(curve_csv(rows, sc.seed), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = scenario_from_args(args)
    rows = curve_rows(sc)  # validates and fixes the default grid
    results = run_trials(sc, sorted({r.M for r in rows}), _workers(args))
    _emit(trials_csv(sc, results), args.out)
    for line in summarize(results):
        print(line, file=sys.stderr)
    return EXIT_FAIL if any(t.failures for t in results) else EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(args.fault_inject, args.only, echo=lambda s: print(s, flush=True))
    failed = [r for r in results if not r.ok]
    total = sum(r.seconds for r in results)
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed in {total:.1f}s")
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {
    "rate-curve": cmd_rate_curve,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, CodedCacheError, ValueError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
