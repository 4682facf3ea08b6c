"""Command-line entry point.

Subcommands: ``run`` (one experiment), ``sweep`` (one axis, many values),
``joint`` (the joint upper bound), ``report`` (summarize a results
directory). Exit codes: 0 success, 1 config error, 2 data error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import ConfigError, DataError, NumericError
from .harness import (SWEEP_AXES, load_config, run_experiment, run_joint,
                      sweep, write_results)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """Raise usage problems as config errors so exit codes stay consistent."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="adaer", description="Continual-learning replay experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run_p = sub.add_parser("run", help="run one experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="path to the JSON run config")

    sweep_p = sub.add_parser("sweep", help="repeat a run across one axis")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--axis", required=True,
                         help=f"one of {', '.join(sorted(SWEEP_AXES))}")
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated axis values, e.g. 50,100,200")

    joint_p = sub.add_parser("joint", help="train all tasks jointly (upper bound)")
    joint_p.add_argument("--config", required=True)

    report_p = sub.add_parser("report", help="summarize run outputs in a directory")
    report_p.add_argument("--input", required=True, help="directory holding *_summary.json")
    return parser


def _parse_values(axis, text):
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {sorted(SWEEP_AXES)}, got {axis!r}")
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            value = float(chunk)
        except ValueError as exc:
            raise ConfigError(f"axis value {chunk!r} is not a number") from exc
        if axis == "memory_M":
            if value != int(value) or value < 1:
                raise ConfigError(f"memory capacity must be a positive integer, got {chunk}")
            value = int(value)
        elif axis == "tau":
            if not 0 < value <= 1:
                raise ConfigError(f"tau must lie in (0, 1], got {chunk}")
        elif axis == "lambda":
            if not 0 <= value < 1:
                raise ConfigError(f"lambda must lie in [0, 1), got {chunk}")
        values.append(value)
    if not values:
        raise ConfigError("no axis values given")
    return values


def _print_record(record, csv_path, json_path):
    agg = record.aggregate()
    parts = []
    for metric in record.METRICS:
        stats = agg[metric]
        if stats["mean"] is None:
            continue
        parts.append(f"{metric}={stats['mean']:.4f}+-{stats['std']:.4f}")
    print(f"{record.config.name}: " + " ".join(parts))
    for failure in record.failures():
        print(f"  seed {failure.seed} aborted: {failure.error}", file=sys.stderr)
    print(f"  wrote {csv_path} and {json_path}")


def _finish(records):
    failed = any(r.failures() for r in records)
    return EXIT_NUMERIC if failed else EXIT_OK


def _cmd_run(args):
    config = load_config(args.config)
    record = run_experiment(config)
    _print_record(record, *write_results(record))
    return _finish([record])


def _cmd_sweep(args):
    config = load_config(args.config)
    values = _parse_values(args.axis, args.values)
    records = sweep(config, args.axis, values)
    for record in records:
        _print_record(record, *write_results(record))
    return _finish(records)


def _cmd_joint(args):
    config = load_config(args.config)
    name = config.run_name or f"{config.benchmark}_joint"
    record = run_joint(dataclasses.replace(config, run_name=name))
    _print_record(record, *write_results(record))
    return _finish([record])


def _cmd_report(args):
    root = Path(args.input)
    if not root.is_dir():
        raise DataError(f"not a directory: {root}")
    summaries = sorted(root.glob("*_summary.json"))
    if not summaries:
        raise DataError(f"no *_summary.json files under {root}")
    header = f"{'run':40s} {'acc':>10s} {'forget':>10s} {'bwt':>10s} {'fwt':>10s}"
    print(header)
    print("-" * len(header))
    for path in summaries:
        with open(path) as f:
            payload = json.load(f)
        agg = payload.get("aggregate", {})

        def cell(metric):
            stats = agg.get(metric) or {}
            mean = stats.get("mean")
            return "n/a" if mean is None else f"{mean:.4f}"

        name = path.name.removesuffix("_summary.json")
        print(f"{name:40s} {cell('acc'):>10s} {cell('forget'):>10s} "
              f"{cell('bwt'):>10s} {cell('fwt'):>10s}")
    return EXIT_OK


def main(argv=None):
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep,
                "joint": _cmd_joint, "report": _cmd_report}
    try:
        args = _build_parser().parse_args(argv)
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
