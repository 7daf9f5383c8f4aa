"""Command-line entry point: check, emit, verify.

Exit codes: 0 the certificate is valid, 1 it is invalid, 2 the input
could not be parsed, 3 infrastructure failure (I/O, solver spawn or
timeout, degenerate empty constraint system).  A verdict is never
conflated with an infrastructure failure.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
import tempfile
import time
from typing import Optional

from .checker import (
    EmptyConstraintSystem,
    check_certificate_report,
    compute_assumption_sets,
    default_jobs,
)
from .parser import ParseError, parse_certificate
from .smtgen import Aggregate, EmissionPlan, SolverSpawnError, dispatch, emit

EXIT_VALID = 0
EXIT_INVALID = 1
EXIT_FORMAT_ERROR = 2
EXIT_INTERNAL_ERROR = 3

SOLVER_ENV_VAR = "VIPRCERT_SOLVER"


def default_solver_command() -> str:
    """Environment override, else the bundled ground-formula evaluator."""
    configured = os.environ.get(SOLVER_ENV_VAR)
    if configured:
        return configured
    return f"{shlex.quote(sys.executable)} -m viprcert.smteval {{}}"


def _load(path: str):
    with open(path, "rb") as handle:
        return parse_certificate(handle.read())


def _report_parse_error(exc: ParseError) -> int:
    print(
        f"parse error at line {exc.line}, column {exc.column}:"
        f" [{exc.kind.value}] {exc.message}",
        file=sys.stderr,
    )
    return EXIT_FORMAT_ERROR


def cmd_check(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        problem, certificate = _load(args.file)
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_FORMAT_ERROR
    except ParseError as exc:
        return _report_parse_error(exc)
    parse_seconds = time.perf_counter() - started

    started = time.perf_counter()
    try:
        report = check_certificate_report(problem, certificate, jobs=args.jobs)
    except EmptyConstraintSystem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    check_seconds = time.perf_counter() - started

    verdict = report.verdict
    if args.format == "json":
        payload = {
            "verdict": "valid" if verdict.valid else "invalid",
            "location": None if verdict.valid else str(verdict.location),
            "predicate_id": verdict.predicate_id,
            "message": verdict.message,
            "solutions_checked": report.solutions_checked,
            "derivations_checked": report.derivations_checked,
            "timings": {"parse_s": parse_seconds, "check_s": check_seconds},
        }
        if args.diagnose:
            payload["failures"] = [
                {
                    "location": str(f.location),
                    "predicate_id": f.predicate_id,
                    "message": f.message,
                }
                for f in report.failures
            ]
        print(json.dumps(payload))
    else:
        if verdict.valid:
            print("VALID")
        else:
            print(
                f"INVALID {verdict.location} {verdict.predicate_id} {verdict.message}"
            )
            if args.diagnose:
                for failure in report.failures:
                    print(f"  {failure.location} {failure.predicate_id} {failure.message}")
        print(f"solutions checked: {report.solutions_checked}")
    return EXIT_VALID if verdict.valid else EXIT_INVALID


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _emit_files(problem, certificate, out_dir, block_size: Optional[int], jobs: int):
    asets = compute_assumption_sets(problem, certificate)
    plan = EmissionPlan.create(problem, certificate, block_size=block_size, workers=jobs)
    return emit(problem, certificate, asets, plan, out_dir)


def cmd_emit(args: argparse.Namespace) -> int:
    try:
        problem, certificate = _load(args.file)
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_FORMAT_ERROR
    except ParseError as exc:
        return _report_parse_error(exc)
    try:
        files = _emit_files(problem, certificate, args.out, args.block_size, args.jobs)
    except EmptyConstraintSystem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    except OSError as exc:
        print(f"cannot write to {args.out}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    if args.format == "json":
        payload = {
            "files": [
                {
                    "path": str(f.path),
                    "kind": f.kind,
                    "first_k": f.first_k,
                    "last_k": f.last_k,
                }
                for f in files
            ]
        }
        print(json.dumps(payload))
    else:
        for emitted in files:
            print(f"{emitted.path} {emitted.label}")
    return EXIT_VALID


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        problem, certificate = _load(args.file)
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_FORMAT_ERROR
    except ParseError as exc:
        return _report_parse_error(exc)
    solver = args.solver or default_solver_command()
    started = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="viprcert-") as scratch:
        try:
            files = _emit_files(problem, certificate, scratch, args.block_size, args.jobs)
        except EmptyConstraintSystem as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INTERNAL_ERROR
        except OSError as exc:
            print(f"cannot write SMT files: {exc}", file=sys.stderr)
            return EXIT_INTERNAL_ERROR
        try:
            result = dispatch(files, solver, jobs=args.jobs, timeout_s=args.timeout)
        except SolverSpawnError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INTERNAL_ERROR
        elapsed = time.perf_counter() - started
        labels = {emitted.path: emitted.label for emitted in files}
        if args.format == "json":
            payload = {
                "verdict": result.aggregate.value,
                "files": [
                    {
                        "path": str(o.path),
                        "kind": labels.get(o.path, ""),
                        "status": o.status,
                        "detail": o.detail,
                    }
                    for o in result.outcomes
                ],
                "timings": {"verify_s": elapsed},
            }
            print(json.dumps(payload))
        else:
            for outcome in result.outcomes:
                detail = f" {outcome.detail}" if outcome.detail else ""
                print(f"{outcome.path} {labels.get(outcome.path, '')} {outcome.status}{detail}")
            print(result.aggregate.value.upper())
    if result.aggregate is Aggregate.VALID:
        return EXIT_VALID
    if result.aggregate is Aggregate.INVALID:
        return EXIT_INVALID
    return EXIT_INTERNAL_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viprcert",
        description="Skeptical verifier for VIPR 1.0 certificates of MILP results.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="evaluate the certificate natively")
    check.add_argument("file")
    check.add_argument("--jobs", type=_positive_int, default=default_jobs())
    check.add_argument("--diagnose", action="store_true", help="report every failure")
    check.add_argument("--format", choices=("text", "json"), default="text")
    check.set_defaults(handler=cmd_check)

    emit_cmd = sub.add_parser("emit", help="write the formula as SMT-LIB files")
    emit_cmd.add_argument("file")
    emit_cmd.add_argument("--out", required=True, help="output directory")
    emit_cmd.add_argument("--block-size", type=_positive_int, default=None)
    emit_cmd.add_argument("--jobs", type=_positive_int, default=default_jobs())
    emit_cmd.add_argument("--format", choices=("text", "json"), default="text")
    emit_cmd.set_defaults(handler=cmd_emit)

    verify = sub.add_parser("verify", help="emit and dispatch to an SMT solver")
    verify.add_argument("file")
    verify.add_argument(
        "--solver",
        default=None,
        help="solver command; {} is replaced by the file path, otherwise the "
        f"path is appended (default: ${SOLVER_ENV_VAR} or the bundled evaluator)",
    )
    verify.add_argument("--jobs", type=_positive_int, default=default_jobs())
    verify.add_argument("--block-size", type=_positive_int, default=None)
    verify.add_argument("--timeout", type=float, default=300.0, help="seconds per file")
    verify.add_argument("--format", choices=("text", "json"), default="text")
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
