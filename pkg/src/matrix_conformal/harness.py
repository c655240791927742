"""Simulation harness: replicated coverage/length/time experiments.

Each experiment cell (graphon, n, xi_target, m0) runs a configured number
of replications.  A replication samples an instance, applies the requested
missingness, runs the chosen prediction method, and records coverage of
the true entry together with set lengths and wall time.  Replications are
seeded individually, so output files are identical across reruns and
worker schedules (time_ms aside).
"""

from __future__ import annotations

import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, fields

import numpy as np

from .conformal import Grid, algorithm1, algorithm2
from .simgen import (
    GRAPHON_BOUNDS,
    GRAPHONS,
    GraphonSpec,
    mask_mcar,
    mask_mnar_largest,
    mask_single_target,
    observe,
    sample_instance,
)

METHODS = ("alg1", "alg2")
MISSINGNESS = ("single_target", "mnar_largest", "mcar")

RECORDS_HEADER = (
    "graphon,n,xi_target,m0,method,rep,covered,total_length,"
    "hull_length,is_trivial,time_ms,seed"
)
ERRORS_HEADER = "graphon,n,xi_target,m0,method,rep,seed,error"
SUMMARY_HEADER = (
    "graphon,n,xi_target,m0,method,reps,coverage,coverage_se,"
    "mean_length,median_length,mean_hull_length,median_hull_length,"
    "trivial_rate,mean_time_ms,bound"
)

MAX_CELL_FAILURES = 3


class ConfigError(ValueError):
    """An experiment configuration field is missing or invalid."""


@dataclass(frozen=True)
class ExperimentConfig:
    graphons: tuple[str, ...] = ("f1",)
    n_values: tuple[int, ...] = (50,)
    xi_targets: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    alpha: float = 0.1
    replications: int = 1
    method: str = "alg1"
    missingness: str = "single_target"
    m0_values: tuple[int, ...] = (0,)
    grid_points: int = 401
    iter_max: int = 8
    master_seed: int = 0
    out: str = "records.csv"

    def __post_init__(self) -> None:
        for name in ("graphons", "n_values", "xi_targets", "m0_values"):
            value = getattr(self, name)
            if isinstance(value, (str, int, float)):
                raise ConfigError(f"{name}: expected a list of values")
            object.__setattr__(self, name, tuple(value))
        for g in self.graphons:
            if g not in GRAPHONS:
                raise ConfigError(f"graphons: unknown graphon {g!r}")
        if not self.graphons or not self.n_values or not self.xi_targets:
            raise ConfigError("graphons, n_values and xi_targets must be nonempty")
        if any(n < 3 for n in self.n_values):
            raise ConfigError("n_values: every n must be at least 3")
        if any(not 0 < x < 1 for x in self.xi_targets):
            raise ConfigError("xi_targets: values must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha: must lie in (0, 1)")
        if self.replications < 1:
            raise ConfigError("replications: must be at least 1")
        if self.method not in METHODS:
            raise ConfigError(f"method: choose one of {METHODS}")
        if self.missingness not in MISSINGNESS:
            raise ConfigError(f"missingness: choose one of {MISSINGNESS}")
        if self.missingness == "single_target":
            if tuple(self.m0_values) not in ((), (0,)):
                raise ConfigError("m0_values: must be (0,) for single_target")
            object.__setattr__(self, "m0_values", (0,))
        elif any(m < 0 for m in self.m0_values) or not self.m0_values:
            raise ConfigError("m0_values: need nonnegative counts")
        if self.grid_points < 2:
            raise ConfigError("grid_points: must be at least 2")
        if self.iter_max < 1:
            raise ConfigError("iter_max: must be at least 1")

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        import json

        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a flat JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**raw)

    def cells(self) -> list[tuple[str, int, float, int]]:
        return [
            (g, n, xi, m0)
            for g in self.graphons
            for n in self.n_values
            for xi in self.xi_targets
            for m0 in self.m0_values
        ]


@dataclass(frozen=True)
class ReplicationRecord:
    graphon: str
    n: int
    xi_target: float
    m0: int
    method: str
    rep: int
    covered: bool
    total_length: float
    hull_length: float
    is_trivial: bool
    time_ms: float
    seed: int
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def replication_seed(master_seed: int, cell_index: int, rep: int) -> int:
    """Stable per-replication seed; the only entropy the record depends on."""
    ss = np.random.SeedSequence((master_seed, cell_index, rep))
    return int(ss.generate_state(1)[0])


def run_replication(
    graphon: str,
    n: int,
    xi_target: float,
    m0: int,
    method: str,
    alpha: float,
    grid_points: int,
    iter_max: int,
    missingness: str,
    rep: int,
    rep_seed: int,
) -> ReplicationRecord:
    """Run one seeded replication end to end; timing covers prediction only."""
    ss = np.random.SeedSequence(rep_seed)
    instance_seed, mask_seed, guess_seed = (int(s) for s in ss.generate_state(3))
    spec = GraphonSpec(graphon=graphon, n=n, xi_target=xi_target, seed=instance_seed)
    instance = sample_instance(spec)
    if missingness == "single_target":
        mask = mask_single_target(n)
    elif missingness == "mnar_largest":
        mask = mask_mnar_largest(instance.complete, m0)
    else:
        mask = mask_mcar(n, m0, mask_seed)
    obs = observe(instance, mask)
    grid = Grid.symmetric(obs.bound, grid_points)
    start = time.perf_counter()
    if method == "alg1":
        pred = algorithm1(
            obs, alpha=alpha, grid=grid, iter_max=iter_max, seed=guess_seed
        )
    else:
        pred = algorithm2(obs, alpha=alpha, grid=grid, seed=guess_seed)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    return ReplicationRecord(
        graphon=graphon,
        n=n,
        xi_target=xi_target,
        m0=m0,
        method=method,
        rep=rep,
        covered=pred.contains(instance.truth),
        total_length=pred.total_length,
        hull_length=pred.hull_length,
        is_trivial=pred.is_trivial,
        time_ms=elapsed_ms,
        seed=rep_seed,
    )


def run_cell(
    config: ExperimentConfig,
    cell: tuple[str, int, float, int],
    cell_index: int | None = None,
) -> list[ReplicationRecord]:
    """All replications of one cell; aborts after repeated failures.

    Failed replications are recorded with the error message rather than
    dropped; three failures stop the cell.
    """
    graphon, n, xi, m0 = cell
    if cell_index is None:
        cell_index = config.cells().index(cell)
    records: list[ReplicationRecord] = []
    failures = 0
    for rep in range(config.replications):
        seed = replication_seed(config.master_seed, cell_index, rep)
        try:
            records.append(
                run_replication(
                    graphon,
                    n,
                    xi,
                    m0,
                    config.method,
                    config.alpha,
                    config.grid_points,
                    config.iter_max,
                    config.missingness,
                    rep,
                    seed,
                )
            )
        except Exception as exc:  # noqa: BLE001 - recorded, never dropped
            failures += 1
            records.append(
                ReplicationRecord(
                    graphon=graphon,
                    n=n,
                    xi_target=xi,
                    m0=m0,
                    method=config.method,
                    rep=rep,
                    covered=False,
                    total_length=float("nan"),
                    hull_length=float("nan"),
                    is_trivial=False,
                    time_ms=float("nan"),
                    seed=seed,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
            if failures >= MAX_CELL_FAILURES:
                break
    return records


def _cell_task(args: tuple[ExperimentConfig, int, tuple]) -> list[ReplicationRecord]:
    config, cell_index, cell = args
    return run_cell(config, cell, cell_index)


def run_experiment(
    config: ExperimentConfig,
    workers: int | None = None,
    progress: bool = False,
) -> list[ReplicationRecord]:
    """Run every cell, in a process pool when workers allow.

    Output order is by (cell, replication) regardless of scheduling, so the
    resulting records are deterministic given the master seed.
    """
    cells = config.cells()
    tasks = [(config, i, cell) for i, cell in enumerate(cells)]
    if workers is None:
        workers = min(len(cells), os.cpu_count() or 1)
    if workers <= 1 or len(cells) == 1:
        results = []
        for task in tasks:
            results.append(_cell_task(task))
            if progress:
                print(f"cell {task[2]} done", file=sys.stderr)
    else:
        results = [None] * len(cells)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_cell_task, t): t[1] for t in tasks}
            done = 0
            for future in as_completed(futures):
                results[futures[future]] = future.result()
                done += 1
                if progress:
                    print(f"cells completed: {done}/{len(cells)}", file=sys.stderr)
    records: list[ReplicationRecord] = []
    for cell_records in results:
        records.extend(cell_records)
    return records


# ---------------------------------------------------------------------------
# Persistence


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(path: str, records: list[ReplicationRecord]) -> str | None:
    """Write successful records; failures go to a sidecar errors file.

    Returns the sidecar path when any replication failed, else None.
    """
    with open(path, "w") as fh:
        fh.write(RECORDS_HEADER + "\n")
        for r in records:
            if r.failed:
                continue
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        r.graphon,
                        r.n,
                        r.xi_target,
                        r.m0,
                        r.method,
                        r.rep,
                        r.covered,
                        r.total_length,
                        r.hull_length,
                        r.is_trivial,
                        r.time_ms,
                        r.seed,
                    )
                )
                + "\n"
            )
    failed = [r for r in records if r.failed]
    if not failed:
        return None
    sidecar = errors_path(path)
    with open(sidecar, "w") as fh:
        writer = csv.writer(fh)
        writer.writerow(ERRORS_HEADER.split(","))
        for r in failed:
            writer.writerow(
                [r.graphon, r.n, r.xi_target, r.m0, r.method, r.rep, r.seed, r.error]
            )
    return sidecar


def errors_path(records_path: str) -> str:
    stem, ext = os.path.splitext(records_path)
    return f"{stem}.errors{ext or '.csv'}"


def summary_path(records_path: str) -> str:
    stem, ext = os.path.splitext(records_path)
    return f"{stem}.summary{ext or '.csv'}"


def read_records_csv(path: str) -> list[ReplicationRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = RECORDS_HEADER.split(",")
        if reader.fieldnames != expected:
            raise ValueError(
                f"records file {path!r} has header {reader.fieldnames}, "
                f"expected {expected}"
            )
        for row in reader:
            records.append(
                ReplicationRecord(
                    graphon=row["graphon"],
                    n=int(row["n"]),
                    xi_target=float(row["xi_target"]),
                    m0=int(row["m0"]),
                    method=row["method"],
                    rep=int(row["rep"]),
                    covered=row["covered"] == "true",
                    total_length=float(row["total_length"]),
                    hull_length=float(row["hull_length"]),
                    is_trivial=row["is_trivial"] == "true",
                    time_ms=float(row["time_ms"]),
                    seed=int(row["seed"]),
                )
            )
    return records


def summarize(
    records: list[ReplicationRecord],
    bounds: dict[str, float] | None = None,
) -> list[dict]:
    """Aggregate per cell: coverage with its binomial standard error,
    mean/median lengths, trivial rate and mean prediction time."""
    if not records:
        raise ValueError("no records to summarize")
    bounds = {**GRAPHON_BOUNDS, **(bounds or {})}
    groups: dict[tuple, list[ReplicationRecord]] = {}
    for r in records:
        if r.failed:
            continue
        groups.setdefault((r.graphon, r.n, r.xi_target, r.m0, r.method), []).append(r)
    if not groups:
        raise ValueError("no successful records to summarize")
    rows = []
    for key in sorted(groups):
        graphon, n, xi, m0, method = key
        cell = groups[key]
        k = len(cell)
        covered = np.array([r.covered for r in cell], dtype=float)
        total = np.array([r.total_length for r in cell])
        hull = np.array([r.hull_length for r in cell])
        coverage = float(covered.mean())
        rows.append(
            {
                "graphon": graphon,
                "n": n,
                "xi_target": xi,
                "m0": m0,
                "method": method,
                "reps": k,
                "coverage": coverage,
                "coverage_se": float(np.sqrt(coverage * (1 - coverage) / k)),
                "mean_length": float(total.mean()),
                "median_length": float(np.median(total)),
                "mean_hull_length": float(hull.mean()),
                "median_hull_length": float(np.median(hull)),
                "trivial_rate": float(np.mean([r.is_trivial for r in cell])),
                "mean_time_ms": float(np.mean([r.time_ms for r in cell])),
                "bound": bounds.get(graphon, float("nan")),
            }
        )
    return rows


def write_summary_csv(path: str, rows: list[dict]) -> None:
    header = SUMMARY_HEADER.split(",")
    with open(path, "w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[name]) for name in header) + "\n")


def replay_record(record: ReplicationRecord, config: ExperimentConfig):
    """Re-derive (truth, prediction set) for a persisted record.

    Everything a replication did is a pure function of the row's fields plus
    the experiment-level parameters, so coverage can be audited offline.
    """
    ss = np.random.SeedSequence(record.seed)
    instance_seed, mask_seed, guess_seed = (int(s) for s in ss.generate_state(3))
    spec = GraphonSpec(
        graphon=record.graphon,
        n=record.n,
        xi_target=record.xi_target,
        seed=instance_seed,
    )
    instance = sample_instance(spec)
    if config.missingness == "single_target":
        mask = mask_single_target(record.n)
    elif config.missingness == "mnar_largest":
        mask = mask_mnar_largest(instance.complete, record.m0)
    else:
        mask = mask_mcar(record.n, record.m0, mask_seed)
    obs = observe(instance, mask)
    grid = Grid.symmetric(obs.bound, config.grid_points)
    if record.method == "alg1":
        pred = algorithm1(
            obs, alpha=config.alpha, grid=grid, iter_max=config.iter_max,
            seed=guess_seed,
        )
    else:
        pred = algorithm2(obs, alpha=config.alpha, grid=grid, seed=guess_seed)
    return instance.truth, pred
