"""Command-line interface.

Subcommands:
  verify <scenario-file>      run a verification suite, emit a JSON report
  convergence <scenario-file> halving/doubling study of one parameter, CSV
  catalog list                built-in metrics and their parameters

Exit status: 0 when every check passes, 1 on a failed check, 2 on bad
input.  Reports are deterministic for a fixed scenario and seed; wall
times are only included with --timing.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import GeometryError
from .metrics import CATALOG
from .scenarios import (
    STUDY_PARAMETERS,
    SUITES,
    convergence_csv,
    convergence_study,
    run_scenario,
)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="normalgeo",
        description="verification suites for normal-coordinate geometry",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ver = sub.add_parser("verify", help="run a scenario's verification suite")
    ver.add_argument("scenario", help="scenario JSON file")
    ver.add_argument("--out", help="write the report here instead of stdout")
    ver.add_argument("--suite", choices=SUITES, help="override the scenario suite")
    ver.add_argument("--seed", type=int, help="override the scenario seed")
    ver.add_argument("--tol", type=float, help="absolute tolerance override for every check")
    ver.add_argument("--workers", type=int, help="worker threads (records stay ordered)")
    ver.add_argument("--timing", action="store_true", help="include wall time in the report")

    conv = sub.add_parser("convergence", help="convergence-order study")
    conv.add_argument("scenario", help="scenario JSON file")
    conv.add_argument("--param", required=True, choices=STUDY_PARAMETERS)
    conv.add_argument("--levels", required=True, type=int)
    conv.add_argument("--out", help="write the CSV here instead of stdout")

    cat = sub.add_parser("catalog", help="catalog operations")
    cat.add_argument("action", choices=["list"])
    return parser


def _load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _cmd_verify(args) -> int:
    doc = _load_scenario(args.scenario)
    if args.suite:
        doc["suite"] = args.suite
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.tol is not None:
        doc["tolerance"] = args.tol
    report = run_scenario(doc, workers=args.workers)
    text = report.to_json(include_timing=args.timing)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.passed else 1


def _cmd_convergence(args) -> int:
    doc = _load_scenario(args.scenario)
    rows = convergence_study(doc, args.param, args.levels)
    text = convergence_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_catalog(args) -> int:
    for name in sorted(CATALOG):
        entry = CATALOG[name]
        params = ", ".join(
            f"{k}={default!r} ({desc})" for k, (default, desc) in entry.parameters.items()
        )
        sys.stdout.write(f"{name}: {entry.description}\n    parameters: {params}\n")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        return _cmd_catalog(args)
    except (GeometryError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
