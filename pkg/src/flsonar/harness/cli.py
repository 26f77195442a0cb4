"""Command line entry point.

    flsonar run --experiment density --runs 200 --seed 7 --beams both --out results/
    flsonar validate-config experiment.toml
    flsonar oracle

Exit status: 0 on success, 1 on a configuration or usage error, 2 on a
runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from ..errors import ConfigurationError
from .config import KINDS, ExperimentConfig, dump_config, load_config, save_config
from .sweep import run_sweep, write_results

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flsonar", description="Forward-looking sonar collision avoidance experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a Monte Carlo sweep")
    run.add_argument("--config", help="TOML experiment config")
    run.add_argument("--experiment", choices=KINDS, help="experiment kind (overrides the config)")
    run.add_argument("--runs", type=int, help="paired runs per sweep point")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--beams", choices=("1", "3", "both"), help="beam modes to run")
    run.add_argument("--workers", type=int, help="worker processes")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--episode-logs", action="store_true", help="write one CSV log per episode")
    run.add_argument("--map-dumps", action="store_true", help="dump the occupancy map every ping")
    run.add_argument("--quiet", action="store_true")

    val = sub.add_parser("validate-config", help="check a config file and print it with all defaults")
    val.add_argument("config", nargs="?", help="TOML experiment config (defaults if omitted)")

    ora = sub.add_parser("oracle", help="compare fast code paths against independent oracles")
    ora.add_argument("--quick", action="store_true", help="fewer randomized cases")

    cfg = sub.add_parser("default-config", help="write the default config to a file")
    cfg.add_argument("path")
    return p


def _experiment(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.experiment and args.experiment != config.kind:
        updates["kind"] = args.experiment
        updates["values"] = ()  # the old sweep values belong to the old kind
    if args.runs is not None:
        updates["runs"] = args.runs
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.beams is not None:
        updates["beams"] = (1, 3) if args.beams == "both" else (int(args.beams),)
    if args.workers is not None:
        updates["workers"] = args.workers
    return dataclasses.replace(config, **updates) if updates else config


def _run(args) -> int:
    config = _experiment(args)
    out = Path(args.out)
    logs = out / "episodes" if args.episode_logs else None
    dumps = out / "maps" if args.map_dumps else None

    def progress(done, total):
        if not args.quiet and (done == total or done % max(1, total // 20) == 0):
            print(f"  {done}/{total} episodes", file=sys.stderr)

    result = run_sweep(config, logs, dumps, progress)
    csv_path, summary_path = write_results(result, out)
    save_config(config, out / f"{config.kind}.toml")
    print(result.summary(), end="")
    print(f"wrote {csv_path} and {summary_path}")
    return EXIT_OK


def _oracle(args) -> int:
    from .oracles import format_report, run_all

    report, ok = format_report(run_all(quick=args.quick))
    print(report, end="")
    return EXIT_OK if ok else EXIT_RUNTIME


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "validate-config":
            config = load_config(args.config) if args.config else ExperimentConfig()
            print(dump_config(config), end="")
            print(f"# config ok, hash {config.digest()}")
            return EXIT_OK
        if args.command == "default-config":
            save_config(ExperimentConfig(), args.path)
            return EXIT_OK
        if args.command == "oracle":
            return _oracle(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report, don't trace, at the CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
