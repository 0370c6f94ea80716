"""Command line entry point: ``skewfit run | synth | report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .data import generate_synthetic, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2


def _run(args) -> int:
    try:
        config = bench.ExperimentConfig.from_json(args.config)
    except bench.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        with out.open("w", encoding="utf-8") as fh:

            def sink(r):
                fh.write(json.dumps(bench.asdict(r)) + "\n")
                fh.flush()

            results, summary = bench.run_experiment(config, sink)
    except (OSError, ValueError, KeyError) as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if not any(r.ok for r in results):
        print("experiment failed: every trial failed", file=sys.stderr)
        return EXIT_FAILED
    print(bench.emit_report(results, "markdown"))
    print(f"results written to {out}")
    return EXIT_OK


def _synth(args) -> int:
    try:
        data = generate_synthetic(args.setting, args.n, args.seed)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_csv(data, args.out)
    print(f"wrote {data.n} rows ({data.n_positive} positive) to {args.out}")
    return EXIT_OK


def _report(args) -> int:
    try:
        results = bench.load_results(args.inp)
        text = bench.emit_report(results, args.format, args.out)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out is None:
        print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skewfit", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default="results.jsonl", help="JSON lines, one trial result each")
    run.set_defaults(func=_run)

    synth = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    synth.add_argument("--setting", type=int, required=True, choices=range(1, 7))
    synth.add_argument("--n", type=int, default=1000)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=_synth)

    report = sub.add_parser("report", help="tabulate stored trial results")
    report.add_argument("--in", dest="inp", required=True)
    report.add_argument("--format", choices=("md", "markdown", "csv"), default="md")
    report.add_argument("--out", default=None)
    report.set_defaults(func=_report)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
