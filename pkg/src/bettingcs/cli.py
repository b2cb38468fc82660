"""Command-line interface.

Exit codes: 0 success, 2 usage, 3 data validation, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import baselines, betting, simharness, supermg, wor
from .betting import BettingConfig
from .core import ConfigError, DomainError, Interval, LambdaSchedule, make_grid
from .wor import PopulationError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

CS_METHODS = ("hedged", "conbo", "pm-h", "pm-eb", "bernoulli", "akelly", "lbow", "ons",
              "kelly", "hgkelly")
CI_METHODS = ("hedged", "va-eb", "permuted-eb", "hoeffding", "mp09", "anderson", "bentkus")
WOR_CS_METHODS = ("hedged", "conbo", "h-wor", "eb-wor")
WOR_CI_METHODS = ("hedged", "h-wor", "eb-wor")
PVALUE_METHODS = ("hedged", "akelly", "lbow", "ons", "kelly", "gkelly", "hgkelly")


class DataError(ValueError):
    pass


def fmt(v: float) -> str:
    return f"{v:.6g}"


# ---------------------------------------------------------------------------
# Input
# ---------------------------------------------------------------------------

def read_values(path: Optional[str], column: Optional[str] = None,
                unit: bool = True) -> np.ndarray:
    """Read numbers from a newline-delimited file or one CSV column.

    Errors name the offending line number.
    """
    if path is None or path == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc.strerror}") from None
    values: List[float] = []
    lines: List[int] = []
    if column is None:
        for i, line in enumerate(text.splitlines(), start=1):
            s = line.strip()
            if not s:
                continue
            values.append(_parse(s, i))
            lines.append(i)
    else:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None:
            raise DataError("empty input")
        header = [h.strip() for h in header]
        if column in header:
            j = header.index(column)
        elif column.isdigit() and int(column) < len(header):
            j = int(column)
        else:
            raise DataError(f"column {column!r} not found in header")
        for i, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if j >= len(row):
                raise DataError(f"line {i}: missing column {column!r}")
            values.append(_parse(row[j].strip(), i))
            lines.append(i)
    if not values:
        raise DataError("no observations in input")
    xs = np.asarray(values, dtype=float)
    if unit:
        bad = np.flatnonzero(~((xs >= 0.0) & (xs <= 1.0)))
        if bad.size:
            k = int(bad[0])
            raise DataError(f"line {lines[k]}: value {values[k]!r} is outside [0, 1]")
    return xs


def _parse(s: str, line: int) -> float:
    try:
        v = float(s)
    except ValueError:
        raise DataError(f"line {line}: cannot parse {s!r} as a number") from None
    if not np.isfinite(v):
        raise DataError(f"line {line}: non-finite value {s!r}")
    return v


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_rows(path: Optional[str], header: Sequence[str], rows) -> None:
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    finally:
        if close:
            fh.close()


def _write_record(path, rec, intersect: bool) -> None:
    lo, hi = (rec.lower_int, rec.upper_int) if intersect else (rec.lower, rec.upper)
    _write_rows(path, ("t", "lower", "upper"),
                ((t + 1, float(lo[t]), float(hi[t])) for t in range(len(rec))))


def _write_interval(path, method: str, n: int, iv: Interval) -> None:
    _write_rows(path, ("method", "n", "lower", "upper"), [(method, n, float(iv.lo), float(iv.hi))])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _config(args) -> BettingConfig:
    sched = None
    if getattr(args, "schedule", None):
        sched = LambdaSchedule(args.schedule, c=args.c)
    return BettingConfig(theta=args.theta, c=args.c, grid_size=args.grid, schedule=sched,
                         sum_form=getattr(args, "sum_form", False),
                         inner=getattr(args, "inner", "lbow"))


def cmd_cs(args) -> int:
    xs = read_values(args.input, args.column)
    m = args.method
    if m in ("hedged", "conbo"):
        fn = betting.hedged_cs if m == "hedged" else betting.conbo_cs
        rec = fn(xs, args.alpha, _config(args))
    elif m == "pm-h":
        sched = LambdaSchedule(args.schedule, c=args.c) if args.schedule else None
        rec = supermg.pm_hoeffding_cs(xs, args.alpha, sched)
    elif m == "pm-eb":
        sched = LambdaSchedule(args.schedule, c=args.c) if args.schedule else None
        rec = supermg.pm_eb_cs(xs, args.alpha, sched)
    elif m == "bernoulli":
        rec = baselines.bernoulli_mixture_cs(xs, args.alpha, grid_size=args.grid)
    elif m == "hgkelly":
        rec = betting.hgkelly_cs(xs, args.alpha, theta=args.theta, grid_size=args.grid)
    else:
        rec = betting.betting_cs(xs, args.alpha, m, args.grid, args.c)
    _write_record(args.output, rec, args.intersect)
    return EXIT_OK


def cmd_ci(args) -> int:
    xs = read_values(args.input, args.column)
    if args.n is not None:
        if args.n > xs.size:
            raise DataError(f"--n {args.n} exceeds the {xs.size} observations")
        xs = xs[: args.n]
    m = args.method
    if m == "hedged":
        iv = betting.hedged_ci(xs, args.alpha, _config(args))
    elif m == "va-eb":
        iv = supermg.va_eb_ci(xs, args.alpha, args.c)
    elif m == "permuted-eb":
        iv = supermg.permuted_eb_ci(xs, args.alpha, args.B, args.seed, args.grid, args.c)
    else:
        iv = {"hoeffding": baselines.hoeffding_ci, "mp09": baselines.mp09_ci,
              "anderson": baselines.anderson_ci, "bentkus": baselines.bentkus_ci}[m](xs, args.alpha)
    _write_interval(args.output, m, xs.size, iv)
    return EXIT_OK


def cmd_wor_cs(args) -> int:
    xs = read_values(args.input, args.column)
    if xs.size > args.N:
        raise DataError(f"more observations than population ({xs.size} > N={args.N})")
    m = args.method
    if m == "hedged":
        rec = wor.hedged_wor_cs(xs, args.N, args.alpha, _config(args))
    elif m == "conbo":
        rec = wor.conbo_wor_cs(xs, args.N, args.alpha, _config(args))
    else:
        rec = baselines.wor_baseline_cs(xs, args.N, args.alpha, m.upper().replace("WOR", "WoR"),
                                        args.c)
    _write_record(args.output, rec, args.intersect)
    return EXIT_OK


def cmd_wor_ci(args) -> int:
    xs = read_values(args.input, args.column)
    if xs.size > args.N:
        raise DataError(f"more observations than population ({xs.size} > N={args.N})")
    n = xs.size if args.n is None else args.n
    if n > xs.size:
        raise DataError(f"--n {n} exceeds the {xs.size} observations")
    m = args.method
    if m == "hedged":
        iv = wor.hedged_wor_ci(xs, args.N, n, args.alpha, _config(args))
    else:
        iv = baselines.wor_baseline_ci(xs, args.N, n, args.alpha, m, args.c)
    _write_interval(args.output, m, n, iv)
    return EXIT_OK


def cmd_pvalue(args) -> int:
    xs = read_values(args.input, args.column)
    if not 0.0 <= args.null_lo <= args.null_hi <= 1.0:
        raise ConfigError("need 0 <= --null-lo <= --null-hi <= 1")
    grid = make_grid(args.grid)
    S = grid[(grid >= args.null_lo) & (grid <= args.null_hi)]
    if S.size == 0:
        S = np.array([args.null_lo])
    cfg = _config(args)
    p, p_run = betting.p_value(xs, S, args.method, args.alpha, cfg)
    e = betting.e_value(xs, S, args.method, args.alpha, cfg)
    _write_rows(args.output, ("t", "p", "p_running", "e"),
                ((t, float(p[t]), float(p_run[t]), float(e[t])) for t in range(p.size)))
    return EXIT_OK


def cmd_quantile_cs(args) -> int:
    xs = read_values(args.input, args.column, unit=False)
    lo = xs.min() if args.q_min is None else args.q_min
    hi = xs.max() if args.q_max is None else args.q_max
    if not lo < hi:
        raise ConfigError("need --q-min < --q-max")
    q_grid = np.linspace(lo, hi, args.q_points)
    rec = betting.quantile_cs(xs, args.p, args.alpha, q_grid, theta=args.theta, c=args.c)
    _write_record(args.output, rec, args.intersect)
    return EXIT_OK


def _parse_params(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        if k == "atoms" or k == "probs":
            out[k] = [float(u) for u in v.split(",")]
        elif k == "base":
            out[k] = v
        else:
            out[k] = float(v) if any(ch in v for ch in ".eE") else int(v)
    return out


def cmd_simulate(args) -> int:
    params = _parse_params(args.param)
    spec = simharness.ScenarioSpec(args.family, params, horizon=args.t_max, seed=args.seed,
                                   replicates=args.replicates)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.experiment == "coverage":
        rows = simharness.coverage_experiment(spec, methods, args.alpha, args.grid)
    else:
        cps = [int(c) for c in args.checkpoints.split(",")] if args.checkpoints else [args.t_max]
        rows = simharness.width_experiment(spec, methods, args.alpha, cps, args.grid)
    _emit_table(args, rows, {"experiment": args.experiment, "scenario": spec, "methods": methods,
                             "alpha": args.alpha, "grid": args.grid})
    return EXIT_OK


def cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = simharness.bench_timings(methods, args.t_max, args.grid, args.seed)
    _emit_table(args, rows, {"methods": methods, "t_max": args.t_max, "grid": args.grid,
                             "seed": args.seed})
    return EXIT_OK


def _emit_table(args, rows, config) -> None:
    if not rows:
        return
    header = list(rows[0].keys())
    _write_rows(args.output, header, ([r[k] for k in header] for r in rows))
    if args.summary:
        simharness.write_summary(rows, config, args.summary)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, methods: Optional[Sequence[str]], default: Optional[str]):
    if methods is not None:
        p.add_argument("--method", choices=methods, default=default)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--input", "-i", default=None, help="data file (default: stdin)")
    p.add_argument("--column", default=None, help="CSV column name or index")
    p.add_argument("--output", "-o", default=None, help="output CSV (default: stdout)")
    p.add_argument("--c", type=float, default=0.5, help="truncation level")
    p.add_argument("--theta", type=float, default=0.5, help="hedge fraction")
    p.add_argument("--grid", type=int, default=1000, help="grid intervals on [0, 1]")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bettingcs",
                                     description="Confidence sequences and intervals for "
                                                 "bounded means by betting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cs", help="confidence sequence over time")
    _common(p, CS_METHODS, "hedged")
    p.add_argument("--schedule", default=None, help="pm-h, pm-eb, pm-pm or constant")
    p.add_argument("--sum-form", action="store_true")
    p.add_argument("--inner", default="lbow", choices=("lbow", "akelly", "kelly", "zero"))
    p.add_argument("--intersect", action="store_true", help="report the running intersection")
    p.set_defaults(func=cmd_cs)

    p = sub.add_parser("ci", help="fixed-n confidence interval")
    _common(p, CI_METHODS, "hedged")
    p.add_argument("--n", type=int, default=None, help="use the first n observations")
    p.add_argument("--B", type=int, default=10, help="permutations for permuted-eb")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("wor-cs", help="without-replacement confidence sequence")
    _common(p, WOR_CS_METHODS, "hedged")
    p.add_argument("--N", type=int, required=True, help="population size")
    p.add_argument("--schedule", default=None)
    p.add_argument("--sum-form", action="store_true")
    p.add_argument("--inner", default="lbow", choices=("lbow", "akelly", "kelly", "zero"))
    p.add_argument("--intersect", action="store_true")
    p.set_defaults(func=cmd_wor_cs)

    p = sub.add_parser("wor-ci", help="without-replacement confidence interval")
    _common(p, WOR_CI_METHODS, "hedged")
    p.add_argument("--N", type=int, required=True, help="population size")
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=cmd_wor_ci)

    p = sub.add_parser("pvalue", help="anytime-valid p-values and e-values")
    _common(p, PVALUE_METHODS, "hedged")
    p.add_argument("--null-lo", type=float, required=True)
    p.add_argument("--null-hi", type=float, required=True)
    p.set_defaults(func=cmd_pvalue)

    p = sub.add_parser("quantile-cs", help="confidence sequence for a quantile")
    _common(p, None, None)
    p.add_argument("--p", type=float, default=0.5, help="quantile level")
    p.add_argument("--q-min", type=float, default=None)
    p.add_argument("--q-max", type=float, default=None)
    p.add_argument("--q-points", type=int, default=1001)
    p.add_argument("--intersect", action="store_true")
    p.set_defaults(func=cmd_quantile_cs)

    p = sub.add_parser("simulate", help="coverage or width experiment")
    p.add_argument("--experiment", choices=("coverage", "width"), default="coverage")
    p.add_argument("--family", choices=simharness.FAMILIES, required=True)
    p.add_argument("--param", action="append", help="scenario parameter key=value")
    p.add_argument("--methods", required=True, help="comma-separated method names")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--t-max", type=int, default=1000)
    p.add_argument("--checkpoints", default=None, help="comma-separated times")
    p.add_argument("--grid", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--summary", default=None, help="JSON summary path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="timing benchmark")
    p.add_argument("--methods", default="hedged,conbo,akelly,lbow,ons")
    p.add_argument("--t-max", type=int, default=1000)
    p.add_argument("--grid", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--summary", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if hasattr(args, "alpha") and not 0.0 < args.alpha < 1.0:
            raise ConfigError("--alpha must lie in (0, 1)")
        return args.func(args)
    except (DataError, PopulationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
