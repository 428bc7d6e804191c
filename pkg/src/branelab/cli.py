"""Command-line runner: ``branelab run|validate|suite``.

Exit status is 0 iff every check of every scenario passes; failing checks
are listed on standard error. Configuration errors exit with 2, runtime
errors inside a scenario with 3.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import ConfigError, ScenarioError
from .scenario import FORMATS, parse_scenario, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="branelab", description="Run homogeneous-Lagrangian scenarios.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", type=Path, default=None, help="directory for outputs and reports")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed (default: scenario value, else 0)")
        sp.add_argument("--format", choices=FORMATS, default="csv", help="format of tabular outputs")

    r = sub.add_parser("run", help="run one scenario file")
    r.add_argument("path", type=Path)
    common(r)
    v = sub.add_parser("validate", help="validate a scenario file without running it")
    v.add_argument("path", type=Path)
    s = sub.add_parser("suite", help="run every *.json scenario in a directory")
    s.add_argument("path", type=Path)
    s.add_argument("--jobs", type=int, default=1, help="scenarios run concurrently (outputs are file-disjoint)")
    common(s)
    return p


def _report_failures(report) -> None:
    for c in report.failures:
        print(f"FAIL {report.name}: {c.name} residual={c.residual:.3e} tol={c.tol:.1e}", file=sys.stderr)


def _run_one(path, out, seed, fmt):
    sc = parse_scenario(path)
    return run_scenario(sc, out, fmt, seed)


def _suite_worker(args):
    path, out, seed, fmt = args
    try:
        return path, _run_one(path, out, seed, fmt), None
    except (ConfigError, ScenarioError) as err:
        return path, None, err


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "validate":
        try:
            sc = parse_scenario(args.path)
        except ConfigError as err:
            print(f"invalid: {err}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"ok: {sc.name} ({sc.kind}); checks: {', '.join(c.name for c in sc.checks)}")
        return EXIT_OK

    if args.command == "run":
        try:
            report = _run_one(args.path, args.out, args.seed, args.format)
        except ConfigError as err:
            print(f"invalid: {err}", file=sys.stderr)
            return EXIT_CONFIG
        except ScenarioError as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_RUNTIME
        sys.stdout.write(report.to_json())
        _report_failures(report)
        return EXIT_OK if report.passed else EXIT_FAIL

    files = sorted(args.path.glob("*.json"))
    if not files:
        print(f"no scenario files in {args.path}", file=sys.stderr)
        return EXIT_CONFIG
    jobs = [(f, args.out, args.seed, args.format) for f in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_suite_worker, jobs))
    else:
        results = [_suite_worker(j) for j in jobs]
    status = EXIT_OK
    for path, report, err in results:
        if err is not None:
            print(f"error in {path.name}: {err}", file=sys.stderr)
            status = max(status, EXIT_CONFIG if isinstance(err, ConfigError) else EXIT_RUNTIME)
            continue
        mark = "PASS" if report.passed else "FAIL"
        print(f"{mark} {report.name} ({len(report.checks)} checks, {report.wall_ms:.0f} ms)")
        _report_failures(report)
        if not report.passed:
            status = max(status, EXIT_FAIL)
    return status


if __name__ == "__main__":
    sys.exit(main())
