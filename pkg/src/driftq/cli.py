"""Command-line interface.

Subcommands: ``gen`` (synthesize a stream), ``mutate`` (inject faults into a
stream file), ``develop`` (build version 1 of the artifact store from a
training stream), ``run`` (replay a stream through a scoring mode against a
store), ``bench`` (compare all modes on one generated stream), and ``sweep``
(threshold sensitivity study). Exit codes: 0 success, 1 configuration
error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .config import Config, default_config, load_config
from .errors import ConfigError, DriftqError
from .harness import (
    DEFAULT_SWEEP_TAUS,
    bench_comparison,
    emit_report,
    generate_pump_stream,
    run_bench,
    run_experiment,
    sensitivity_sweep,
)
from .mutation import apply_mutation_plan
from .orchestrator import MODES, ScoringPipeline, develop_phase
from .store import store_load, store_save
from .windowing import flatten_windows, read_stream, segment_stream, write_stream

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors, not runtime failures."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML config file (defaults apply when omitted)")
    common.add_argument("--store", help="artifact store directory")
    common.add_argument("--seed", type=int, help="override the relevant seed from the config")
    common.add_argument("--out", help="output file or directory")

    parser = _Parser(prog="driftq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_gen = sub.add_parser("gen", parents=[common], help="generate a synthetic stream")

    p_mut = sub.add_parser("mutate", parents=[common], help="inject faults into a stream file")
    p_mut.add_argument("--in", dest="infile", required=True, help="input stream (csv/jsonl, - for stdin)")
    p_mut.add_argument("--ledger", help="fault ledger output path (jsonl)")

    p_dev = sub.add_parser("develop", parents=[common], help="build bundle version 1 into the store")
    p_dev.add_argument("--in", dest="infile", required=True, help="training stream (csv/jsonl, - for stdin)")
    p_dev.add_argument("--ledger", help="fault ledger output path (jsonl)")

    p_run = sub.add_parser("run", parents=[common], help="score a stream against a store")
    p_run.add_argument("--mode", required=True, choices=MODES)
    p_run.add_argument("--in", dest="infile", required=True, help="input stream (csv/jsonl, - for stdin)")

    sub.add_parser("bench", parents=[common], help="compare all modes on one generated stream")

    p_sweep = sub.add_parser("sweep", parents=[common], help="threshold sensitivity study")
    p_sweep.add_argument(
        "--taus",
        default=",".join(str(t) for t in DEFAULT_SWEEP_TAUS),
        help="comma-separated sensitivity thresholds",
    )
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config) if args.config else default_config()
        return _dispatch(args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DriftqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args: argparse.Namespace, config: Config) -> int:
    if args.command == "gen":
        return _cmd_gen(args, config)
    if args.command == "mutate":
        return _cmd_mutate(args, config)
    if args.command == "develop":
        return _cmd_develop(args, config)
    if args.command == "run":
        return _cmd_run(args, config)
    if args.command == "bench":
        return _cmd_bench(args, config)
    if args.command == "sweep":
        return _cmd_sweep(args, config)
    raise ConfigError(f"unknown command {args.command!r}")


def _cmd_gen(args, config: Config) -> int:
    if not args.out:
        raise ConfigError("gen requires --out")
    stream_cfg = config.stream
    if args.seed is not None:
        stream_cfg = replace(stream_cfg, seed=args.seed)
    readings = generate_pump_stream(stream_cfg)
    write_stream(readings, args.out)
    print(f"wrote {len(readings)} readings to {args.out}")
    return 0


def _cmd_mutate(args, config: Config) -> int:
    if not args.out:
        raise ConfigError("mutate requires --out")
    plan = config.mutation
    if args.seed is not None:
        plan = replace(plan, seed=args.seed)
    readings = read_stream(args.infile)
    windows = segment_stream(readings, config.engine.window_len)
    mutated, ledger = apply_mutation_plan(windows, plan)
    write_stream(flatten_windows(mutated), args.out)
    ledger_path = args.ledger or (str(args.out) + ".faults.jsonl")
    with open(ledger_path, "w", encoding="utf-8") as fh:
        for rec in ledger:
            fh.write(json.dumps(rec.to_json_dict(), sort_keys=True) + "\n")
    print(f"mutated {len(ledger)} of {len(windows)} windows; ledger at {ledger_path}")
    return 0


def _cmd_develop(args, config: Config) -> int:
    if not args.store:
        raise ConfigError("develop requires --store")
    if args.seed is not None:
        config = replace(config, mutation=replace(config.mutation, seed=args.seed))
    readings = read_stream(args.infile)
    windows = segment_stream(readings, config.engine.window_len)
    bundle, ledger = develop_phase(windows, config)
    path = store_save(bundle, args.store)
    if args.ledger:
        with open(args.ledger, "w", encoding="utf-8") as fh:
            for rec in ledger:
                fh.write(json.dumps(rec.to_json_dict(), sort_keys=True) + "\n")
    report = bundle.dev_report
    print(
        json.dumps(
            {
                "version": bundle.version.version,
                "store_path": path,
                "training_windows": len(windows),
                "mutated_windows": len(ledger),
                "holdout_mae": report.mae if report else None,
                "holdout_r2": report.r2 if report else None,
                "oracle_passed": report.passed if report else None,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_run(args, config: Config) -> int:
    if not args.store:
        raise ConfigError("run requires --store")
    bundle = store_load(args.store)
    readings = read_stream(args.infile)
    windows = segment_stream(readings, config.engine.window_len)
    pipeline = ScoringPipeline(bundle, config, mode=args.mode, store_root=args.store)
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for window in windows:
            scored = pipeline.process_window(window)
            sink.write(json.dumps(scored.to_json_dict()) + "\n")
    finally:
        if args.out:
            sink.close()
    print(
        f"scored {len(windows)} windows in {args.mode} mode; "
        f"{pipeline.retrain_count} retrains, final version {bundle.version.version}",
        file=sys.stderr,
    )
    return 0


def _cmd_bench(args, config: Config) -> int:
    if not args.out:
        raise ConfigError("bench requires --out (a directory)")
    if args.seed is not None:
        config = replace(config, stream=replace(config.stream, seed=args.seed))
    os.makedirs(args.out, exist_ok=True)
    reports = run_bench(config)
    for mode, report in reports.items():
        for fmt, suffix in (("csv", "csv"), ("jsonl", "jsonl"), ("summary-json", "summary.json")):
            path = os.path.join(args.out, f"{mode}.{suffix}")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(emit_report(report, fmt))
    comparison = bench_comparison(reports)
    with open(os.path.join(args.out, "comparison.json"), "w", encoding="utf-8") as fh:
        json.dump(comparison, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"wrote bench reports for {', '.join(reports)} to {args.out}")
    return 0


def _cmd_sweep(args, config: Config) -> int:
    try:
        taus = [float(t) for t in str(args.taus).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --taus value: {exc}") from exc
    result = sensitivity_sweep(taus, config)
    payload = json.dumps(result.to_json_dict(), sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        print(f"wrote sweep results to {args.out}")
    else:
        print(payload, end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
