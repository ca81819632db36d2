"""
Command-line front end: verify one identity, run a sweep config, or
tabulate a density.

Exit status: 0 pass (or pass-with-truncation), 1 any failed verdict or
Monte Carlo disagreement, 2 usage or parameter error.
"""

import argparse
import csv
import json
import logging
import os
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from config import Settings, load_settings, load_sweep_config
from core_numeric import ParameterError, format_rational, to_rational
from densities import (
    EXACT,
    FLOAT,
    GammaParams,
    RateParams,
    UniformParams,
    gamma_series,
    hypoexp_density,
    serialize_number,
    uniform_density,
    uniform_interval_density,
)
from reports import (
    deficit_trace_rows,
    format_report_table,
    reports_json,
    write_csv_summary,
    write_json_reports,
    write_jsonl,
)
from runner import REGISTRY, mc_failed, run_identity, run_sweep

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

VERIFY_PARAMS = ("xs", "lambdas", "m", "n", "alpha", "beta", "a", "t", "shift", "upper")


def _shared_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--mode", choices=(EXACT, FLOAT), help="Arithmetic mode (default: exact)")
    parent.add_argument("--tol", type=float, help="Relative tolerance for float and truncated comparisons (default: 1e-9)")
    parent.add_argument("--max-order", type=int, help="Gamma series order cap (default: 2000)")
    parent.add_argument("--json", action="store_true", help="Print JSON instead of a table")
    parent.add_argument("--mc", action="store_true", help="Attach a Monte Carlo cross-check where one exists")
    parent.add_argument("--samples", type=int, help="Monte Carlo sample count (default: 1000000)")
    parent.add_argument("--seed", type=int, help="Monte Carlo seed (default: 20240601)")
    parent.add_argument("--z", type=float, help="Monte Carlo acceptance in standard errors (default: 5)")
    parent.add_argument("--workers", type=int, help="Sweep processes / sampling threads (default: 1)")
    parent.add_argument("--out", help="Write output to this path")
    parent.add_argument("--log-level", help="Logging level (default: WARNING)")
    parent.add_argument("--env-file", help="Read SUMVERIFY_* settings from this .env file")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _shared_flags()
    parser = argparse.ArgumentParser(
        prog="sumverify",
        description="Verify identities for sums of exponential, Gamma and uniform random variables",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", parents=[parent], help="Verify a single identity")
    verify.add_argument("identity", choices=sorted(REGISTRY), help="Identity id")
    verify.add_argument("--xs", help="Comma-separated rationals, e.g. 1,2,3")
    verify.add_argument("--lambdas", "--lambda", dest="lambdas", help="Comma-separated distinct rates")
    verify.add_argument("--m", help="Moment order")
    verify.add_argument("--n", help="Number of summands")
    verify.add_argument("--alpha", help="Comma-separated Gamma shapes")
    verify.add_argument("--beta", help="Comma-separated Gamma scales")
    verify.add_argument("--a", help="Comma-separated uniform lengths")
    verify.add_argument("--t", help="Transform argument, below the smallest rate")
    verify.add_argument("--shift", help="Shift of the truncated power")
    verify.add_argument("--upper", help="Upper integration limit")

    sweep = sub.add_parser("sweep", parents=[parent], help="Run every grid point of a JSON config")
    sweep.add_argument("config", help="Path to the sweep config")
    sweep.add_argument("--no-progress", action="store_true", help="Hide the progress bar")

    density = sub.add_parser("density", parents=[parent], help="Tabulate a density on a grid")
    density.add_argument("family", choices=("exp", "gamma", "uniform"))
    density.add_argument("--lambdas", "--lambda", dest="lambdas", help="Comma-separated distinct rates")
    density.add_argument("--alpha", help="Comma-separated Gamma shapes")
    density.add_argument("--beta", help="Comma-separated Gamma scales")
    density.add_argument("--a", help="Comma-separated uniform lengths")
    density.add_argument("--intervals", help="Comma-separated lower:upper uniform supports, used instead of --a")
    density.add_argument("--grid", default="0,1,11", help="start,stop,points (default: 0,1,11)")
    density.add_argument("--symbolic", action="store_true", help="Print the exact pieces, atoms or series as JSON")
    return parser


def resolve_settings(args: argparse.Namespace, config_overrides: Optional[Dict[str, Any]] = None) -> Settings:
    """Defaults < environment < sweep config < command-line flags"""
    settings = load_settings(args.env_file)
    if config_overrides:
        settings = settings.updated(**config_overrides)
    return settings.updated(
        mode=args.mode,
        tolerance=args.tol,
        max_order=args.max_order,
        samples=args.samples,
        seed=args.seed,
        z=args.z,
        workers=args.workers,
        log_level=args.log_level,
        mc=True if args.mc else None,
    )


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    raw = {name: getattr(args, name) for name in VERIFY_PARAMS}
    report = run_identity(args.identity, raw, settings)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(format_report_table(report))
    if args.out:
        write_json_reports(args.out, [report])
    return EXIT_PASS if report.passed and not mc_failed(report) else EXIT_FAIL


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_sweep_config(args.config, REGISTRY)
    settings = resolve_settings(args, config.overrides)
    setup_logging(settings.log_level)
    reports = run_sweep(config, settings, progress=not args.no_progress)

    # --out replaces every configured output path with siblings of itself
    outputs = dict(config.outputs)
    if args.out:
        stem = os.path.splitext(args.out)[0]
        outputs = {"json": args.out, "csv": stem + ".csv", "trace": stem + ".trace.jsonl"}
    if outputs.get("json"):
        write_json_reports(outputs["json"], reports)
        write_csv_summary(outputs.get("csv") or os.path.splitext(outputs["json"])[0] + ".csv", reports)
        if outputs.get("trace"):
            write_jsonl(outputs["trace"], deficit_trace_rows(reports))
    else:
        print(reports_json(reports))

    failed = [r for r in reports if not r.passed]
    mc_disagreements = [r for r in reports if mc_failed(r)]
    for report in failed:
        print(f"FAIL {report.identity_id} {json.dumps(report.parameters)}", file=sys.stderr)
    print(f"{len(reports)} reports, {len(failed)} failed, {len(mc_disagreements)} Monte Carlo disagreements",
          file=sys.stderr)
    return EXIT_FAIL if failed or mc_disagreements else EXIT_PASS


def parse_grid(text: str) -> List[Fraction]:
    """'start,stop,points' -> points evenly spaced rationals, both ends included"""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ParameterError(f"grid: expected start,stop,points, got {text!r}")
    start, stop = to_rational(parts[0], "grid start"), to_rational(parts[1], "grid stop")
    try:
        points = int(parts[2])
    except ValueError:
        raise ParameterError(f"grid points: cannot parse {parts[2]!r} as an integer") from None
    if points < 1:
        raise ParameterError(f"grid needs at least one point, got {points}")
    if stop < start:
        raise ParameterError(f"grid stop {parts[1]} is below start {parts[0]}")
    if points == 1:
        return [start]
    step = (stop - start) / (points - 1)
    return [start + k * step for k in range(points)]


def _vector(raw: Optional[str], flag: str) -> List[str]:
    if not raw:
        raise ParameterError(f"density needs {flag}")
    return [token.strip() for token in raw.split(",")]


def _intervals(raw: str) -> List[Tuple[str, str]]:
    """'b1:c1,b2:c2' -> [(b1, c1), (b2, c2)]"""
    pairs = []
    for token in _vector(raw, "--intervals"):
        lower, sep, upper = token.partition(":")
        if not sep or not lower.strip() or not upper.strip():
            raise ParameterError(f"--intervals: expected lower:upper, got {token!r}")
        pairs.append((lower.strip(), upper.strip()))
    return pairs


def cmd_density(args: argparse.Namespace, settings: Settings) -> int:
    xs = parse_grid(args.grid)
    if args.family == "exp":
        density = hypoexp_density(RateParams(tuple(_vector(args.lambdas, "--lambda"))), settings.mode)
    elif args.family == "gamma":
        params = GammaParams(tuple(_vector(args.alpha, "--alpha")), tuple(_vector(args.beta, "--beta")))
        if settings.mode == FLOAT:
            params = GammaParams(tuple(float(a) for a in params.shapes), tuple(float(b) for b in params.scales))
        density = gamma_series(params, settings.tolerance, settings.max_order)
    elif args.intervals:
        density = uniform_interval_density(_intervals(args.intervals))
    else:
        density = uniform_density(UniformParams(tuple(_vector(args.a, "--a"))))

    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        if args.symbolic:
            out.write(json.dumps(density.to_json(), indent=2) + "\n")
        else:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(("x", "density"))
            for x in xs:
                point = float(x) if settings.mode == FLOAT else x
                writer.writerow((format_rational(x), serialize_number(density.pdf(point))))
    finally:
        if args.out:
            out.close()
    return EXIT_PASS


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        settings = resolve_settings(args)
        setup_logging(settings.log_level)
        if args.command == "verify":
            return cmd_verify(args, settings)
        return cmd_density(args, settings)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
