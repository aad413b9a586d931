"""Command-line interface.

Subcommands: run <config>, sweep <config-dir>, exponent-table,
plot <mode|results.csv>, verify-lemmas.  Exit codes: 0 ok, 2 config error,
3 runtime error, 4 lemma violation.  SPARSE_TESTBENCH_THREADS sets the
worker count (0 = all cores); it affects speed only, never results.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import shutil
import sys
import time

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    ExperimentConfig,
    build_config_tests,
    config_hash,
    load_config,
)
from .lemmas import run_all_checks
from .records import build_record, read_csv, records_to_csv, records_to_json
from .risk import estimate_risks
from .svg import phase_diagram_svg, risk_scatter_svg
from .theory import PHASE_MODES, exponent_table_rows, phase_diagram

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_LEMMA = 4


def _seed_for_p(seed: int, p: int) -> int:
    return int(np.random.SeedSequence([seed, p]).generate_state(1, np.uint64)[0])


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    records = []
    for p in cfg.p_grid:
        tests = build_config_tests(cfg, p)
        print(f"[{cfg.experiment_id}] p={p}: {len(tests)} tests x {cfg.reps} reps",
              file=sys.stderr, flush=True)
        estimates = estimate_risks(
            tests,
            cfg.regime,
            p,
            cfg.reps,
            _seed_for_p(cfg.seed, p),
            cfg.design_family,
            cfg.prior_sign_mode,
        )
        records.extend(build_record(cfg.experiment_id, est) for est in estimates)
    return records


def _write_outputs(cfg: ExperimentConfig, records: list[dict], elapsed: float) -> str:
    """Stage all files, then move the directory into place atomically."""
    final_dir = os.path.join(cfg.output_dir, cfg.experiment_id)
    stage = os.path.join(cfg.output_dir, f".stage-{cfg.experiment_id}-{os.getpid()}")
    os.makedirs(cfg.output_dir, exist_ok=True)
    if os.path.exists(stage):
        shutil.rmtree(stage)
    os.makedirs(stage)
    try:
        with open(os.path.join(stage, "results.csv"), "w", encoding="utf-8") as fh:
            fh.write(records_to_csv(records))
        with open(os.path.join(stage, "results.json"), "w", encoding="utf-8") as fh:
            fh.write(records_to_json(records))
        manifest = {
            "config_sha256": config_hash(cfg),
            "version": __version__,
            "wall_time_seconds": elapsed,
            "rows": len(records),
        }
        with open(os.path.join(stage, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")
        if os.path.exists(final_dir):
            shutil.rmtree(final_dir)
        os.rename(stage, final_dir)
    finally:
        if os.path.exists(stage):
            shutil.rmtree(stage)
    return final_dir


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        records = run_experiment(cfg)
        out = _write_outputs(cfg, records, time.perf_counter() - start)
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        names = sorted(
            f for f in os.listdir(args.config_dir) if f.endswith(".toml")
        )
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not names:
        print(f"config error: no .toml configs in {args.config_dir}", file=sys.stderr)
        return EXIT_CONFIG
    worst = EXIT_OK
    for name in names:
        code = _cmd_run(argparse.Namespace(config=os.path.join(args.config_dir, name)))
        if code == EXIT_CONFIG:
            worst = EXIT_CONFIG
        elif code != EXIT_OK and worst != EXIT_CONFIG:
            worst = code
    return worst


def _cmd_exponent_table(_args) -> int:
    cols = ("signal_mode", "alpha", "parameter", "regime_label", "side", "scale", "limit")
    print(",".join(cols))
    for row in exponent_table_rows():
        vals = []
        for col in cols:
            v = row[col]
            vals.append("%.17g" % v if isinstance(v, float) else str(v))
        print(",".join(vals))
    return EXIT_OK


def _cmd_plot(args) -> int:
    if args.source in PHASE_MODES:
        cells = phase_diagram(args.source, resolution=args.resolution)
        x_label = "alpha"
        y_label = {"figure1_dense": "signal decay exponent",
                   "figure1_sparse": "r",
                   "figure2_dense": "delta",
                   "figure2_sparse": "r"}[args.source]
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write(f"alpha,{y_label.replace(' ', '_')},label\n")
                for a, y, label in cells:
                    fh.write(f"{a:.17g},{y:.17g},{label}\n")
        svg = phase_diagram_svg(cells, args.source, x_label, y_label)
    else:
        try:
            with open(args.source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"runtime error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        records = read_csv(text)
        if not records:
            print("runtime error: results file holds no rows", file=sys.stderr)
            return EXIT_RUNTIME
        test = args.test or records[0]["test"]
        rows = [r for r in records if r["test"] == test]
        if not rows:
            print(f"runtime error: no rows for test {test!r}", file=sys.stderr)
            return EXIT_RUNTIME
        rows.sort(key=lambda r: r["p"])
        points = []
        for r in rows:
            x = _normalizer_from_row(r)
            risk = max(r["risk"], 1.0 / (2.0 * r["reps"]))
            points.append((x, math.log(risk)))
        slope = rows[0]["theory_limit"]
        svg = risk_scatter_svg(
            points,
            f"{test}: log risk vs {rows[0]['theory_scale'] or 'log p'}",
            rows[0]["theory_scale"] or "log p",
            reference_slope=slope if rows[0]["theory_side"] == "log_risk" else None,
        )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(args.out)
    return EXIT_OK


def _normalizer_from_row(row: dict) -> float:
    scale = row.get("theory_scale") or "log p"
    p = row["p"]
    if scale == "log p":
        return math.log(p)
    if scale == "s log p":
        return row["s"] * math.log(p)
    if scale == "p^(2 delta)":
        return p ** (2.0 * row["delta"])
    if scale == "p^(1/2 + delta)":
        return p ** (0.5 + row["delta"])
    return math.log(p)


def _cmd_verify_lemmas(args) -> int:
    try:
        results = run_all_checks(only=args.only, bound_multiplier=args.bound_multiplier)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    header = f"{'lemma':26s} {'checks':>7s} {'violations':>10s} {'min margin':>12s}"
    print(header)
    print("-" * len(header))
    failed = False
    for res in results:
        print(
            f"{res.lemma_id:26s} {res.checks:7d} {res.violations:10d} "
            f"{res.max_slack:12.4g}"
        )
        if res.notes:
            print(f"  note: {res.notes}")
        if not res.passed:
            failed = True
            print(f"  VIOLATION on grid {res.grid}")
    return EXIT_LEMMA if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-testbench",
        description="Risk simulation bench for sparse-signal detection in linear regression",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run every .toml config in a directory")
    p_sweep.add_argument("config_dir")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_tab = sub.add_parser("exponent-table", help="print theory exponents as CSV")
    p_tab.set_defaults(func=_cmd_exponent_table)

    p_plot = sub.add_parser("plot", help="render a phase diagram or results scatter")
    p_plot.add_argument("source", help=f"one of {PHASE_MODES} or a results.csv path")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.add_argument("--test", default=None, help="test name to plot from results")
    p_plot.add_argument("--resolution", type=int, default=80)
    p_plot.add_argument("--csv", default=None,
                        help="also write phase-diagram cells as labelled CSV")
    p_plot.set_defaults(func=_cmd_plot)

    p_ver = sub.add_parser("verify-lemmas", help="run the lemma oracle suite")
    p_ver.add_argument("--only", default=None, help="restrict to one lemma id")
    p_ver.add_argument(
        "--bound-multiplier",
        type=float,
        default=1.0,
        help="rescale every bound (debug; 0 forces violations)",
    )
    p_ver.set_defaults(func=_cmd_verify_lemmas)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
