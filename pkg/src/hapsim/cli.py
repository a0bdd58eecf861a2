"""Command-line front door: run experiments, sweep gains, analyze logs.

    hapsim drop CONFIG -o LOG.csv
    hapsim bilateral CONFIG -o LOG.csv
    hapsim sweep CONFIG -o PREFIX         # writes PREFIX_cells.csv, PREFIX_summary.csv
    hapsim analyze LOG.csv [LOG.csv ...]

Exit code 0 on success, 1 on any error (bad config, malformed log, analysis
failure).  Output CSVs start with the fully resolved configuration.
"""

from __future__ import annotations

import argparse
import sys

from .analysis import (
    AnalysisError,
    classify_stability,
    estimate_stiffness,
    run_sweep,
    settling_time,
    write_cells_csv,
    write_summary_csv,
)
from .config import ConfigError, load_config
from .experiments import run_bilateral_experiment, run_drop_experiment
from .runlog import read_log_csv, write_log_csv

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapsim",
        description="virtual-wall haptic control simulator and experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, desc in (
        ("drop", "run the mass-drop step-response experiment"),
        ("bilateral", "run the bilateral pre-contact experiment"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("config", help="YAML run configuration")
        p.add_argument("-o", "--output", required=True, help="output log CSV path")

    p = sub.add_parser("sweep", help="run the k-b-frequency stability sweep")
    p.add_argument("config", help="YAML run configuration")
    p.add_argument(
        "-o",
        "--output",
        required=True,
        help="output prefix; writes <prefix>_cells.csv and <prefix>_summary.csv",
    )

    p = sub.add_parser("analyze", help="stiffness, stability and settling from log CSVs")
    p.add_argument("logs", nargs="+", help="log CSV paths (pooled for stiffness)")
    return parser


def _require_kind(cfg_file, kind: str) -> None:
    if cfg_file.experiment != kind:
        raise ConfigError(
            f"config is for experiment {cfg_file.experiment!r}, but the "
            f"{kind!r} subcommand was invoked"
        )


def _cmd_run(args, kind: str) -> int:
    cfg_file = load_config(args.config)
    _require_kind(cfg_file, kind)
    if kind == "drop":
        log = run_drop_experiment(cfg_file.drop)
    else:
        log = run_bilateral_experiment(cfg_file.bilateral)
    write_log_csv(log, args.output)
    print(f"wrote {len(log)} records to {args.output}")
    return 0


def _cmd_sweep(args) -> int:
    cfg_file = load_config(args.config)
    _require_kind(cfg_file, "sweep")
    report = run_sweep(cfg_file.sweep)
    cells_path = f"{args.output}_cells.csv"
    summary_path = f"{args.output}_summary.csv"
    write_cells_csv(report, cells_path)
    write_summary_csv(report, summary_path)
    print(f"wrote {len(report.cells)} cells to {cells_path}")
    print(f"wrote {len(report.summaries)} frequency summaries to {summary_path}")
    return 0


def _cmd_analyze(args) -> int:
    logs = [read_log_csv(path) for path in args.logs]
    failed = False
    print(f"logs: {len(logs)}")
    total = sum(len(log) for log in logs)
    contact = sum(int(log.c.sum()) for log in logs)
    print(f"records: {total}")
    print(f"contact_ticks: {contact}")
    try:
        stiffness = estimate_stiffness(logs)
        print(f"stiffness_N_per_m: {stiffness:.9g}")
    except AnalysisError as exc:
        print(f"stiffness_N_per_m: error ({exc})")
        failed = True
    for path, log in zip(args.logs, logs):
        prefix = f"{path}: " if len(logs) > 1 else ""
        try:
            verdict = classify_stability(log)
            print(f"{prefix}stability: {verdict}")
        except AnalysisError as exc:
            print(f"{prefix}stability: error ({exc})")
            failed = True
            continue
        if verdict != "stable":
            print(f"{prefix}settling_time_s: n/a (unstable run)")
            continue
        try:
            print(f"{prefix}settling_time_s: {settling_time(log):.9g}")
        except AnalysisError as exc:
            print(f"{prefix}settling_time_s: error ({exc})")
            failed = True
    return 1 if failed else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in ("drop", "bilateral"):
            return _cmd_run(args, args.command)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_analyze(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
