"""Command line interface: ``solve``, ``bench`` and ``profile``.

Exit codes: 0 on success, 1 when ``solve`` ends with a failure status,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from ..driver import HISTORY_FIELDS, PRESETS
from . import profiles, registry
from .profiles import EmptyTable
from .runner import RunRecord, read_jsonl, resolve_options, run_problem, run_suite, write_jsonl

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modsqp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one registry problem")
    p.add_argument("--problem", required=True, help="registry name (see the list command)")
    p.add_argument("--opt-tol", type=float)
    p.add_argument("--feas-tol", type=float)
    p.add_argument("--maxiter", type=int)
    p.add_argument("--preset", choices=sorted(PRESETS), default="default")
    p.add_argument("--history", type=Path, help="write per-iteration CSV here")
    p.add_argument("--out", type=Path, help="write the run as JSON here")

    b = sub.add_parser("bench", help="run every problem of a suite")
    b.add_argument("--suite", choices=["builtin"], default="builtin")
    b.add_argument("--tag", help="solver label stored in each record (default: preset name)")
    b.add_argument("--preset", choices=sorted(PRESETS), default="default")
    b.add_argument("--out", type=Path, help="JSONL output (default: stdout)")

    f = sub.add_parser("profile", help="performance or data profile from JSONL records")
    f.add_argument("--inputs", nargs="+", type=Path, required=True)
    f.add_argument("--measure", choices=profiles.MEASURES, required=True)
    f.add_argument("--beta", type=float, default=2.0)
    f.add_argument("--grid", type=int, default=101)
    f.add_argument("--out", type=Path, required=True)

    sub.add_parser("list", help="list registry problems")
    return parser


def _cmd_solve(args) -> int:
    try:
        registry.get(args.problem)
    except registry.UnknownProblem:
        print(f"unknown problem {args.problem!r}; available: {', '.join(registry.names())}", file=sys.stderr)
        return EXIT_USAGE
    try:
        opts = resolve_options(
            args.preset,
            opt_tol=args.opt_tol,
            feas_tol=args.feas_tol,
            maxiter=args.maxiter,
            record_history=True if args.history else None,
        )
    except ValueError as exc:
        print(f"invalid option: {exc}", file=sys.stderr)
        return EXIT_USAGE
    record, rep = run_problem(args.problem, opts, solver_tag=args.preset)

    if args.history:
        with open(args.history, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            for row in rep.history:
                w.writerow({k: repr(float(row[k])) if isinstance(row[k], float) else row[k] for k in HISTORY_FIELDS})

    payload = {
        **json.loads(record.to_json()),
        "x": rep.x.tolist(),
        "multipliers": None if rep.multipliers is None else rep.multipliers.constraints.tolist(),
        "message": rep.message,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        args.out.write_text(text + "\n", encoding="utf-8")
    print(f"{args.problem}: {rep.message} ({rep.iterations} iterations, f = {rep.f:.10g})")
    if not args.out:
        print(text)
    return EXIT_OK if rep.success else EXIT_FAILED


def _cmd_bench(args) -> int:
    records = run_suite(args.preset, solver_tag=args.tag or args.preset)
    if args.out:
        write_jsonl(records, args.out)
    else:
        for rec in records:
            print(rec.to_json())
    solved = sum(r.success for r in records)
    print(f"{solved}/{len(records)} problems solved", file=sys.stderr)
    return EXIT_OK


def _cmd_profile(args) -> int:
    records: list[RunRecord] = []
    for path in args.inputs:
        try:
            records.extend(read_jsonl(path))
        except (OSError, ValueError) as exc:
            print(f"cannot read {path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        table = profiles.build_profile(records, args.measure, args.beta, args.grid)
    except EmptyTable as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAILED
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args.out.write_text(profiles.to_csv(table), encoding="utf-8")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args)
    if args.command == "bench":
        return _cmd_bench(args)
    if args.command == "profile":
        return _cmd_profile(args)
    for name in registry.names():
        entry = registry.get(name)
        print(f"{name:26s} {entry.description or entry.provenance}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
