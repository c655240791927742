"""Render coverage/length/time panels from simulation record CSVs.

Reads the records CSV written by the simulation harness together with its
per-cell summary CSV (``<records>.summary.csv`` by convention).  Aggregates
are plotted straight from the summary file; the records file feeds only the
raw-time boxplot, which cannot be drawn from aggregates.  One figure is
written per graphon with up to three panels: empirical coverage against the
new row's latent position (reference line at 0.90), mean set length
(dashed reference at the trivial length 2 C0), and a log-scale boxplot of
per-prediction wall times.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

RECORD_COLUMNS = [
    "graphon", "n", "xi_target", "m0", "method", "rep", "covered",
    "total_length", "hull_length", "is_trivial", "time_ms", "seed",
]
SUMMARY_COLUMNS = [
    "graphon", "n", "xi_target", "m0", "method", "reps", "coverage",
    "coverage_se", "mean_length", "median_length", "mean_hull_length",
    "median_hull_length", "trivial_rate", "mean_time_ms", "bound",
]
PANELS = ("coverage", "length", "time")
COVERAGE_REFERENCE = 0.90


class SchemaError(ValueError):
    """An input CSV does not match the expected records/summary schema."""


@dataclass
class FigureSpec:
    records_csv: str
    out: str
    panels: tuple[str, ...] = PANELS
    summary_csv: str | None = None
    bound: float | None = None

    def __post_init__(self) -> None:
        if not self.panels:
            raise ValueError("at least one panel must be selected")
        unknown = [p for p in self.panels if p not in PANELS]
        if unknown:
            raise ValueError(f"unknown panels: {unknown}; choose from {PANELS}")
        if self.summary_csv is None:
            stem, ext = os.path.splitext(self.records_csv)
            self.summary_csv = f"{stem}.summary{ext or '.csv'}"


def _load(path: str, expected: list[str], label: str) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = [c for c in expected if c not in frame.columns]
    if missing:
        raise SchemaError(
            f"{label} file {path!r} lacks required column(s): {', '.join(missing)}"
        )
    return frame


def _series_label(method: str, m0: int, multiple_m0: bool) -> str:
    return f"{method}, m0={m0}" if multiple_m0 else method


def render(spec: FigureSpec) -> dict[str, str]:
    """Draw the selected panels; returns {graphon: written path}."""
    records = _load(spec.records_csv, RECORD_COLUMNS, "records")
    needs_summary = "coverage" in spec.panels or "length" in spec.panels
    summary = None
    if needs_summary:
        summary = _load(spec.summary_csv, SUMMARY_COLUMNS, "summary")

    graphons = sorted(records["graphon"].unique())
    stem, ext = os.path.splitext(spec.out)
    written: dict[str, str] = {}
    for graphon in graphons:
        path = spec.out if len(graphons) == 1 else f"{stem}_{graphon}{ext}"
        fig = _render_graphon(
            graphon,
            records[records["graphon"] == graphon],
            None if summary is None else summary[summary["graphon"] == graphon],
            spec,
        )
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written[graphon] = path
    return written


def _render_graphon(graphon, records, summary, spec) -> plt.Figure:
    npanels = len(spec.panels)
    fig, axes = plt.subplots(1, npanels, figsize=(4.2 * npanels, 3.4))
    if npanels == 1:
        axes = [axes]
    for ax, panel in zip(axes, spec.panels):
        if panel == "coverage":
            _coverage_panel(ax, summary)
        elif panel == "length":
            _length_panel(ax, summary, spec.bound)
        else:
            _time_panel(ax, records)
        ax.set_title(f"{graphon}: {panel}")
    fig.tight_layout()
    return fig


def _iter_series(summary: pd.DataFrame):
    multiple_m0 = summary["m0"].nunique() > 1
    for (method, m0), block in summary.groupby(["method", "m0"]):
        block = block.sort_values("xi_target")
        yield _series_label(method, int(m0), multiple_m0), block


def _coverage_panel(ax, summary) -> None:
    for label, block in _iter_series(summary):
        ax.errorbar(
            block["xi_target"], block["coverage"],
            yerr=block["coverage_se"], marker="o", capsize=2, label=label,
        )
    ax.axhline(COVERAGE_REFERENCE, color="black", linewidth=1.2)
    ax.set_xlabel("latent position of the new row")
    ax.set_ylabel("empirical coverage")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=7)


def _length_panel(ax, summary, bound_override) -> None:
    for label, block in _iter_series(summary):
        ax.plot(block["xi_target"], block["mean_length"], marker="o", label=label)
    bound = bound_override
    if bound is None:
        bounds = summary["bound"].dropna().unique()
        bound = float(bounds[0]) if len(bounds) else None
    if bound is not None:
        ax.axhline(2 * bound, color="black", linestyle="--", linewidth=1.2)
    ax.set_xlabel("latent position of the new row")
    ax.set_ylabel("mean set length")
    ax.legend(fontsize=7)


def _time_panel(ax, records) -> None:
    labels, samples = [], []
    multiple_m0 = records["m0"].nunique() > 1
    for (method, m0), block in records.groupby(["method", "m0"]):
        labels.append(_series_label(method, int(m0), multiple_m0))
        samples.append(block["time_ms"].to_numpy())
    ax.boxplot(samples, tick_labels=labels)
    ax.set_yscale("log")
    ax.set_ylabel("prediction time (ms, log scale)")
    ax.tick_params(axis="x", labelsize=7)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render coverage/length/time figures from simulation records.",
    )
    parser.add_argument("--in", dest="records", required=True,
                        help="records CSV from the simulation harness")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--panels", default="coverage,length,time",
                        help="comma-separated subset of coverage,length,time")
    parser.add_argument("--summary", default=None,
                        help="summary CSV (default: <records>.summary.csv)")
    parser.add_argument("--bound", type=float, default=None,
                        help="override the trivial-length reference level C0")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            records_csv=args.records,
            out=args.out,
            panels=tuple(p.strip() for p in args.panels.split(",") if p.strip()),
            summary_csv=args.summary,
            bound=args.bound,
        )
        written = render(spec)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for graphon, path in sorted(written.items()):
        print(f"{graphon}: wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
