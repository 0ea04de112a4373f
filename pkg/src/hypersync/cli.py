"""Command-line driver: ``hypersync {synth,run,sweep,cycles,verify}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio
from .exceptions import (
    ConvergenceError,
    DegenerateInputError,
    DisconnectedError,
    GoodCycleConditionError,
    HypersyncError,
    InconsistencyError,
)
from .hypergraph import build_chg, synchronize_noiseless
from .model import generate_ucmh
from .pipeline import (
    MODES,
    RUN_COLUMNS,
    SWEEP_COLUMNS,
    ConfigError,
    ExperimentConfig,
    run_pipeline,
    run_row,
    run_sweep,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
THREADS_ENV = "HYPERSYNC_THREADS"
TRACE_NOTE = "log statistics clamp zero errors at ln(1e-16)"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the model seed")
    p.add_argument("--mode", choices=MODES, help="vertex recovery method")
    p.add_argument("--out-dir", type=Path, help="output directory (default: config out_dir or .)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp line from CSV output")
    p.add_argument("--threads", type=int, default=1, help=f"worker processes ({THREADS_ENV} overrides)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypersync", description="Higher-order group synchronization experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate an instance and its ground truth")
    _common(p)

    p = sub.add_parser("run", help="run the pipeline on one instance")
    _common(p)
    p.add_argument("--instance", type=Path, help="hypergraph file (generated from the config when omitted)")
    p.add_argument("--truth", type=Path, help="ground-truth file for --instance")
    p.add_argument("--trace", action="store_true", help="also write per-iteration error statistics")

    p = sub.add_parser("sweep", help="grid over p, q, sigma and seeds")
    _common(p)
    p.add_argument("--full-scale", action="store_true", help="use m=50 instead of the configured m")

    p = sub.add_parser("cycles", help="cycle-hyperedge graph statistics")
    _common(p)
    p.add_argument("--instance", type=Path, required=True)

    p = sub.add_parser("verify", help="check noiseless synchronizability")
    _common(p)
    p.add_argument("--instance", type=Path, required=True)
    return parser


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    try:
        config = ExperimentConfig.from_dict(data)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    if args.seed is not None:
        config.model = replace(config.model, seed=args.seed)
    if args.mode is not None:
        config.mode = args.mode
    if args.out_dir is not None:
        config.out_dir = str(args.out_dir)
    return config


def resolve_threads(cli_value: int) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise UsageError(f"{THREADS_ENV} must be an integer") from exc
    else:
        value = cli_value
    if value < 1:
        raise UsageError("thread count must be at least 1")
    return value


def _out(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _instance_stem(config) -> str:
    return f"instance_seed{config.model.seed}"


def cmd_synth(config: ExperimentConfig, args) -> int:
    H, gt = generate_ucmh(config.model)
    out = _out(config)
    stem = _instance_stem(config)
    fileio.write_hypergraph(H, out / f"{stem}.hg")
    fileio.write_ground_truth(gt, out / f"{stem}.gt")
    print(f"wrote {out / stem}.hg ({H.num_hyperedges} hyperedges) and {stem}.gt")
    return EXIT_OK


def cmd_run(config: ExperimentConfig, args) -> int:
    if args.instance is not None:
        if args.truth is None:
            raise UsageError("--truth is required with --instance")
        H, _ = fileio.read_hypergraph(args.instance)
        gt = fileio.read_ground_truth(args.truth, H)
        if len(gt.vertex_potential) != H.m or gt.s_star.size != H.num_hyperedges:
            raise fileio.FormatError("ground truth does not match the instance")
    else:
        H, gt = generate_ucmh(config.model)
    result = run_pipeline(H, gt, config.mode, config.chmp, config.model.sigma)
    out = _out(config)
    stamp = not args.no_timestamp
    fileio.write_csv(out / "run.csv", RUN_COLUMNS, [run_row(config.model, config.mode, result, H)], stamp)
    if args.trace:
        rows = [[t, *map(float, stats)] for t, stats in enumerate(result.report.trace_stats)]
        fileio.write_csv(out / "trace.csv", ("t", "log_max", "log_mean", "log_median"), rows, stamp, [TRACE_NOTE])
    r = result.report
    print(
        f"procrustes_error={r.procrustes_error:.6g} chmp_error={r.chmp_error:.6g} "
        f"min_error={r.chmp_min_error:.6g}"
    )
    return EXIT_OK


def cmd_sweep(config: ExperimentConfig, args) -> int:
    if args.full_scale:
        config.model = replace(config.model, m=50)
    threads = resolve_threads(args.threads)
    rows = run_sweep(config, threads)
    out = _out(config)
    fileio.write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows, not args.no_timestamp)
    failed = sum(1 for row in rows if row[-1])
    print(f"wrote {len(rows)} cells to {out / 'sweep.csv'} ({failed} failed)")
    return EXIT_OK


def cmd_cycles(config: ExperimentConfig, args) -> int:
    H, _ = fileio.read_hypergraph(args.instance)
    chg = build_chg(H)
    deg = chg.degrees
    stats = {
        "hyperedges": H.num_hyperedges,
        "cycles": chg.num_cycles,
        "uncovered_hyperedges": int(np.count_nonzero(deg == 0)),
        "min_cycles_per_hyperedge": int(deg.min()) if deg.size else 0,
        "max_cycles_per_hyperedge": int(deg.max()) if deg.size else 0,
        "mean_cycles_per_hyperedge": float(deg.mean()) if deg.size else 0.0,
        "mean_consistency": float(chg.d.mean()) if chg.num_cycles else 0.0,
        "max_consistency": float(chg.d.max()) if chg.num_cycles else 0.0,
    }
    for key, value in stats.items():
        print(f"{key}: {value}")
    if args.out_dir is not None or args.config is not None:
        fileio.write_csv(_out(config) / "cycles.csv", tuple(stats), [list(stats.values())], not args.no_timestamp)
    return EXIT_OK


def cmd_verify(config: ExperimentConfig, args) -> int:
    H, _ = fileio.read_hypergraph(args.instance)
    try:
        potential = synchronize_noiseless(H)
    except InconsistencyError as exc:
        print(f"not synchronizable: hyperedge {exc.hyperedge} {H.vertices(exc.hyperedge)} residual {exc.residual:.3e}")
        return EXIT_DATA
    print(f"synchronizable: {len(potential)} vertex elements assigned")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "sweep": cmd_sweep, "cycles": cmd_cycles, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        if args.command != "sweep":
            resolve_threads(args.threads)
        return COMMANDS[args.command](config, args)
    except UsageError as exc:
        print(f"hypersync: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, DegenerateInputError, GoodCycleConditionError, FloatingPointError) as exc:
        print(f"hypersync: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DisconnectedError, InconsistencyError, HypersyncError, OSError, ValueError) as exc:
        print(f"hypersync: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
