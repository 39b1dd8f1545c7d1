"""benchctl: run cold/hot sweeps against a pricing gateway and report them."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from mcprice.bench.report import FORMATS, emit, read_records, write_records
from mcprice.bench.summary import summarize
from mcprice.bench.sweep import ServiceUnreachable, SweepSpec, expected_records, run_sweep


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _formats(text: str) -> list[str]:
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {','.join(FORMATS)}")
    return fmts


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="benchctl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="measure a paths or batch-size sweep")
    s.add_argument("--axis", choices=["paths", "batch"], required=True)
    s.add_argument("--values", type=_int_list, required=True, help="e.g. 1000,10000,100000,500000")
    s.add_argument("--paths", type=int, default=500_000, help="paths per option when sweeping batch")
    s.add_argument("--batch", type=int, default=7, help="options per request when sweeping paths")
    s.add_argument("--backends", default="cpu", help="comma-separated profile names")
    s.add_argument("--reps", type=int, default=100, help="hot repetitions per cell")
    s.add_argument("--concurrency", type=int, default=1)
    s.add_argument("--cold-runs", type=int, default=1,
                   help="cold samples per cell, each after a worker restart (default 1)")
    s.add_argument("--seed-base", type=int, default=1)
    s.add_argument("--target", default="http://127.0.0.1:8470")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--format", type=_formats, default=["csv", "json"],
                   help=f"comma-separated subset of {','.join(FORMATS)}")

    r = sub.add_parser("report", help="re-summarize the records of an earlier sweep")
    r.add_argument("--in", dest="in_dir", required=True)
    r.add_argument("--out", help="output directory (default: same as --in)")
    r.add_argument("--format", type=_formats, default=["csv", "json"])

    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")

    if args.command == "sweep":
        try:
            spec = SweepSpec(
                axis=args.axis, values=tuple(args.values),
                backends=tuple(b.strip() for b in args.backends.split(",") if b.strip()),
                paths=args.paths, batch=args.batch, repetitions=args.reps,
                concurrency=args.concurrency, seed_base=args.seed_base,
                cold_runs=args.cold_runs,
            )
        except ValueError as exc:
            print(f"benchctl: {exc}", file=sys.stderr)
            return 2
        try:
            result = run_sweep(spec, args.target)
        except ServiceUnreachable as exc:
            print(f"benchctl: aborted: {exc}", file=sys.stderr)
            return 1
        write_records(result.records, args.out)
        report = summarize(result.records, spec.backends, spec.values)
        files = emit(report, args.out, args.format)
        print(json.dumps({
            "records": len(result.records),
            "expected": expected_records(spec),
            "dropped": result.dropped,
            "warmup_discarded": result.warmup_discarded,
            "files": [str(f) for f in files],
        }, indent=2))
        return 0

    try:
        records = read_records(args.in_dir)
    except OSError as exc:
        print(f"benchctl: {exc}", file=sys.stderr)
        return 1
    report = summarize(records)
    files = emit(report, Path(args.out or args.in_dir), args.format)
    print("\n".join(str(f) for f in files))
    return 0


if __name__ == "__main__":
    sys.exit(main())
