"""Command-line interface: predict one entry, run simulations, summarize runs."""

from __future__ import annotations

import os

# Small dense decompositions run fastest single-threaded; replications are
# parallelized across processes instead.  Must happen before numpy loads.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import json
import sys

import numpy as np

from .conformal import Grid, GuessKind, GuessStrategy, algorithm1, algorithm2, draw_guess
from .core import (
    MatrixFormatError,
    ObservedMatrix,
    fill_missing,
    missing_counts,
    read_matrix_csv,
    relabel_target,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    read_records_csv,
    run_experiment,
    summarize,
    summary_path,
    write_records_csv,
    write_summary_csv,
)
from .scorers import ScorerConfig, ScorerKind, ns_weights
from .stability import tau_bounds

TARGET_CHOICE_WARNING = (
    "note: coverage guarantees require the predicted entry to be chosen "
    "independently of the matrix values (a fixed index decided in advance, "
    "not an entry selected because it is missing or extreme)."
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matrix-conformal",
        description="Distribution-free prediction sets for symmetric matrix entries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="predict one entry of a CSV matrix")
    p.add_argument("matrix", help="CSV matrix; empty fields or NA mark missing entries")
    p.add_argument("--row", type=int, required=True, help="0-based target row")
    p.add_argument("--col", type=int, required=True, help="0-based target column")
    p.add_argument("--method", choices=("alg1", "alg2"), default="alg1")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--bound", type=float, default=None,
                   help="entry bound C0; defaults to max |observed entry|")
    p.add_argument("--grid-points", type=int, default=401)
    p.add_argument("--iter-max", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the report to this file")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--verbose", action="store_true",
                   help="include the stability bounds in the report")

    s = sub.add_parser("simulate", help="run a replicated experiment from a config")
    s.add_argument("config", help="flat JSON config file")
    s.add_argument("--out", default=None, help="override the config's output path")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--seed", type=int, default=None, help="override the master seed")

    m = sub.add_parser("summarize", help="aggregate a records CSV per cell")
    m.add_argument("records", help="records CSV produced by simulate")
    m.add_argument("--out", default=None, help="summary CSV path (default: stdout)")
    return parser


def _run_predict(args: argparse.Namespace) -> int:
    values, mask = read_matrix_csv(args.matrix)
    observed = values[~mask & ~np.isnan(values)]
    if observed.size == 0:
        print("error: the matrix has no observed entries", file=sys.stderr)
        return 1
    bound = args.bound if args.bound is not None else float(np.abs(observed).max())
    if float(np.abs(observed).max()) > bound:
        print(
            f"error: observed entries exceed the bound {bound}", file=sys.stderr
        )
        return 1
    raw = ObservedMatrix.from_dense(values, mask, bound, target=(args.row, args.col))
    obs, _ = relabel_target(raw, args.row, args.col)
    print(TARGET_CHOICE_WARNING, file=sys.stderr)
    grid = Grid.symmetric(bound, args.grid_points)
    tau = None
    if args.method == "alg1":
        pred = algorithm1(
            obs, alpha=args.alpha, grid=grid, iter_max=args.iter_max, seed=args.seed
        )
    else:
        rng = np.random.default_rng(np.random.SeedSequence((args.seed, 0)))
        guesses = draw_guess(obs, GuessStrategy(GuessKind.EMPIRICAL), rng)
        pred = algorithm2(obs, alpha=args.alpha, grid=grid, guesses=guesses)
        filled = fill_missing(obs, guesses)
        weights = ns_weights(
            filled.entries[: obs.n, : obs.n], ScorerConfig(kind=ScorerKind.NS)
        )
        tau = tau_bounds(
            missing_counts(obs),
            obs.mask,
            bound=bound,
            bandwidth=float(weights.bandwidths.min()),
        )

    report = {
        "entry": [args.row, args.col],
        "method": args.method,
        "alpha": args.alpha,
        "bound": bound,
        "intervals": [list(iv) for iv in pred.intervals],
        "total_length": pred.total_length,
        "hull_length": pred.hull_length,
        "is_trivial": pred.is_trivial,
    }
    if args.verbose and tau is not None:
        report["tau"] = [float(t) for t in tau.tau]

    if args.format == "json":
        text = json.dumps(report, indent=2)
    else:
        lines = [
            f"prediction set for entry ({args.row}, {args.col}), "
            f"confidence {1 - args.alpha:.0%}:",
        ]
        if pred.is_empty:
            lines.append("  (empty set)")
        for lo, hi in pred.intervals:
            lines.append(f"  [{lo:.6g}, {hi:.6g}]")
        lines.append(f"total length: {pred.total_length:.6g}")
        lines.append(f"hull length:  {pred.hull_length:.6g}")
        lines.append(f"trivial:      {'yes' if pred.is_trivial else 'no'}")
        if args.verbose and tau is not None:
            lines.append(
                "stability bounds: " + " ".join(f"{t:.4g}" for t in tau.tau)
            )
        text = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _run_simulate(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.out is not None:
        config = ExperimentConfig(**{**_config_dict(config), "out": args.out})
    if args.seed is not None:
        config = ExperimentConfig(**{**_config_dict(config), "master_seed": args.seed})
    records = run_experiment(config, workers=args.workers, progress=True)
    sidecar = write_records_csv(config.out, records)
    rows = summarize(records)
    write_summary_csv(summary_path(config.out), rows)
    ok = sum(not r.failed for r in records)
    print(f"wrote {ok} records to {config.out}")
    print(f"wrote summary to {summary_path(config.out)}")
    if sidecar:
        failed = sum(r.failed for r in records)
        print(f"warning: {failed} failed replications in {sidecar}", file=sys.stderr)
    return 0


def _config_dict(config: ExperimentConfig) -> dict:
    from dataclasses import asdict

    return asdict(config)


def _run_summarize(args: argparse.Namespace) -> int:
    records = read_records_csv(args.records)
    rows = summarize(records)
    if args.out:
        write_summary_csv(args.out, rows)
        print(f"wrote summary to {args.out}")
    else:
        from .harness import SUMMARY_HEADER, _fmt

        print(SUMMARY_HEADER)
        for row in rows:
            print(",".join(_fmt(row[k]) for k in SUMMARY_HEADER.split(",")))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "predict":
            return _run_predict(args)
        if args.command == "simulate":
            return _run_simulate(args)
        return _run_summarize(args)
    except (MatrixFormatError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
