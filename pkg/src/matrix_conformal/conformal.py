"""Prediction-set construction by one-dimensional grid search.

A candidate value z is accepted when the target column's score ranks at or
below the lower-(1 - alpha) quantile of all n scores computed from the
candidate-completed matrix.  Accepted grid points are dilated by half a
grid step and merged into closed intervals.  Two set constructions are
provided: a multi-guess union using the SVD score, and a single-guess
stability-adjusted search using the neighborhood-smoothing score.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._stats import lower_quantile, rank_threshold
from .core import ObservedMatrix, fill_missing, missing_counts
from .scorers import (
    ScorerConfig,
    ScorerKind,
    ns_scores_over_grid,
    ns_weights,
    svd_scores_over_grid,
)
from .stability import StabilityBounds, tau_bounds

__all__ = [
    "Grid",
    "PredictionSet",
    "GuessKind",
    "GuessStrategy",
    "DEFAULT_STRATEGIES",
    "draw_guess",
    "lower_quantile",
    "accept",
    "conformal_1d",
    "algorithm1",
    "algorithm2",
]

_MERGE_EPS = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform search grid over the admissible value range."""

    lo: float
    hi: float
    points: int = 401

    def __post_init__(self) -> None:
        if self.points < 2:
            raise ValueError("grid needs at least 2 points")
        if not self.hi > self.lo:
            raise ValueError("grid upper end must exceed lower end")

    @classmethod
    def symmetric(cls, bound: float, points: int = 401) -> "Grid":
        return cls(lo=-float(bound), hi=float(bound), points=points)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.points - 1)

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class PredictionSet:
    """A finite union of disjoint closed intervals inside [-bound, bound]."""

    intervals: tuple[tuple[float, float], ...]
    bound: float

    def __post_init__(self) -> None:
        ivals = tuple((float(a), float(b)) for a, b in self.intervals)
        prev_hi = None
        for lo, hi in ivals:
            if lo > hi:
                raise ValueError(f"interval [{lo}, {hi}] is empty")
            if lo < -self.bound - 1e-9 or hi > self.bound + 1e-9:
                raise ValueError("interval exceeds the admissible range")
            if prev_hi is not None and lo <= prev_hi:
                raise ValueError("intervals must be sorted and disjoint")
            prev_hi = hi
        object.__setattr__(self, "intervals", ivals)
        object.__setattr__(self, "bound", float(self.bound))

    @classmethod
    def from_grid_mask(
        cls, grid: Grid, accepted: np.ndarray, bound: float
    ) -> "PredictionSet":
        """Dilate accepted grid points by half a step, merge runs, clip to range."""
        accepted = np.asarray(accepted, dtype=bool)
        if accepted.shape != (grid.points,):
            raise ValueError("accept mask does not match the grid")
        values = grid.values
        half = grid.spacing / 2.0
        intervals: list[tuple[float, float]] = []
        i = 0
        while i < accepted.size:
            if not accepted[i]:
                i += 1
                continue
            j = i
            while j + 1 < accepted.size and accepted[j + 1]:
                j += 1
            lo = max(values[i] - half, -bound)
            hi = min(values[j] + half, bound)
            intervals.append((lo, hi))
            i = j + 1
        return cls(tuple(intervals), bound)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def total_length(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    @property
    def hull_length(self) -> float:
        if not self.intervals:
            return 0.0
        return float(self.intervals[-1][1] - self.intervals[0][0])

    @property
    def is_trivial(self) -> bool:
        """Whether the set equals the full admissible range."""
        if len(self.intervals) != 1:
            return False
        lo, hi = self.intervals[0]
        tol = 1e-12 * max(1.0, self.bound)
        return abs(lo + self.bound) <= tol and abs(hi - self.bound) <= tol

    def contains(self, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals)

    __contains__ = contains

    def union(self, other: "PredictionSet") -> "PredictionSet":
        if other.bound != self.bound:
            raise ValueError("cannot union sets with different bounds")
        merged: list[list[float]] = []
        for lo, hi in sorted(self.intervals + other.intervals):
            if merged and lo <= merged[-1][1] + _MERGE_EPS:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return PredictionSet(tuple((a, b) for a, b in merged), self.bound)

    def covers(self, other: "PredictionSet") -> bool:
        """Whether every interval of ``other`` lies inside this union."""
        eps = 1e-9
        for lo, hi in other.intervals:
            if not any(a - eps <= lo and hi <= b + eps for a, b in self.intervals):
                return False
        return True


class GuessKind(str, Enum):
    EMPIRICAL = "empirical"
    ALL_PLUS = "all_plus"
    ALL_MINUS = "all_minus"
    MIXED = "mixed"


@dataclass(frozen=True)
class GuessStrategy:
    """How to fabricate values for the unobserved slots before the grid search."""

    kind: GuessKind = GuessKind.EMPIRICAL
    p: float = 0.5
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GuessKind(self.kind))
        if not 0 <= self.p <= 1:
            raise ValueError("mixing probability must lie in [0, 1]")


DEFAULT_STRATEGIES: tuple[GuessStrategy, ...] = (
    GuessStrategy(GuessKind.EMPIRICAL),
    GuessStrategy(GuessKind.ALL_PLUS),
    GuessStrategy(GuessKind.ALL_MINUS),
    GuessStrategy(GuessKind.MIXED, p=0.5),
)


def draw_guess(
    obs: ObservedMatrix, strategy: GuessStrategy, rng: np.random.Generator
) -> np.ndarray:
    """Produce a full symmetric guess matrix; only unobserved slots matter."""
    order = obs.order
    c0 = obs.bound
    if strategy.kind is GuessKind.ALL_PLUS:
        return np.full((order, order), c0)
    if strategy.kind is GuessKind.ALL_MINUS:
        return np.full((order, order), -c0)
    iu, ju = np.triu_indices(order)
    out = np.zeros((order, order))
    if strategy.kind is GuessKind.MIXED:
        vals = np.where(rng.random(iu.size) < strategy.p, c0, -c0)
    else:
        pool = obs.entries[~obs.fill_mask]
        if pool.size == 0:
            vals = np.zeros(iu.size)
        else:
            vals = rng.choice(pool, size=iu.size, replace=True)
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def accept(scores: np.ndarray, alpha: float) -> bool:
    """Inclusion rule: target score at or below the lower-(1 - alpha) quantile.

    The target score is the last entry and is itself part of the quantile's
    empirical distribution; ties at the threshold are accepted.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("scores must be a nonempty vector")
    return bool(scores[-1] <= lower_quantile(scores, 1.0 - alpha))


def _accept_over_grid(
    score_matrix: np.ndarray, alpha: float, tau: np.ndarray | None
) -> np.ndarray:
    n = score_matrix.shape[1]
    k = rank_threshold(1.0 - alpha, n)
    if tau is None:
        atoms = score_matrix
        lhs = score_matrix[:, -1]
    else:
        atoms = score_matrix + tau[None, :]
        lhs = score_matrix[:, -1] - tau[-1]
    kth = np.partition(atoms, k - 1, axis=1)[:, k - 1]
    return lhs <= kth


def _grid_scores(
    obs: ObservedMatrix,
    guesses: np.ndarray,
    config: ScorerConfig,
    grid: Grid,
) -> np.ndarray:
    if config.kind is ScorerKind.SVD:
        return svd_scores_over_grid(obs, guesses, grid.values, config)
    filled = fill_missing(obs, guesses)
    n = filled.n
    weights = ns_weights(filled.entries[:n, :n], config)
    return ns_scores_over_grid(weights, filled.entries[n, :n], grid.values)


def conformal_1d(
    obs: ObservedMatrix,
    guesses: np.ndarray,
    config: ScorerConfig,
    alpha: float,
    grid: Grid,
    tau: StabilityBounds | np.ndarray | None = None,
) -> PredictionSet:
    """Full conformal search over candidate target values for one guess.

    When ``tau`` is given, the target score is lowered by its bound and
    each quantile atom raised by its own, widening the set to absorb the
    effect of guessed completions on the scores.
    """
    if not obs.has_canonical_target():
        raise ValueError("prediction expects the canonical target; relabel first")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    tau_vec = None
    if tau is not None:
        tau_vec = np.asarray(tau.tau if isinstance(tau, StabilityBounds) else tau)
        if tau_vec.shape != (obs.n,):
            raise ValueError(f"tau must have length {obs.n}")
    score_matrix = _grid_scores(obs, guesses, config, grid)
    accepted = _accept_over_grid(score_matrix, alpha, tau_vec)
    return PredictionSet.from_grid_mask(grid, accepted, obs.bound)


def algorithm1(
    obs: ObservedMatrix,
    config: ScorerConfig | None = None,
    alpha: float = 0.1,
    grid: Grid | None = None,
    strategies: tuple[GuessStrategy, ...] = DEFAULT_STRATEGIES,
    iter_max: int = 8,
    seed: int = 0,
) -> PredictionSet:
    """Union of SVD-scored conformal sets over several guessed completions.

    Guesses cycle through ``strategies`` and continue with fresh empirical
    draws once the list is exhausted.  With no missing entries beyond the
    target the guess is irrelevant and a single search is performed.
    Deterministic given ``seed``.
    """
    config = config or ScorerConfig(kind=ScorerKind.SVD)
    if config.kind is not ScorerKind.SVD:
        raise ValueError("the multi-guess union uses the SVD score")
    if iter_max < 1:
        raise ValueError("iter_max must be at least 1")
    grid = grid or Grid.symmetric(obs.bound)
    if not obs.mask.any():
        zeros = np.zeros((obs.order, obs.order))
        return conformal_1d(obs, zeros, config, alpha, grid)
    result: PredictionSet | None = None
    for ell in range(iter_max):
        if ell < len(strategies):
            strategy = strategies[ell]
        else:
            strategy = GuessStrategy(GuessKind.EMPIRICAL)
        entropy = strategy.seed if strategy.seed is not None else seed
        rng = np.random.default_rng(np.random.SeedSequence((entropy, ell)))
        guesses = draw_guess(obs, strategy, rng)
        piece = conformal_1d(obs, guesses, config, alpha, grid)
        result = piece if result is None else result.union(piece)
    return result


def algorithm2(
    obs: ObservedMatrix,
    config: ScorerConfig | None = None,
    alpha: float = 0.1,
    grid: Grid | None = None,
    guesses: np.ndarray | None = None,
    seed: int = 0,
) -> PredictionSet:
    """Stability-adjusted conformal search with one guess and smoothing scores.

    Kernel weights and the pairwise response gaps over the first n - 1
    columns are computed once; each grid step touches only the target
    column.  The inclusion rule is widened by the stability bounds so that
    the output contains the set an oracle completion would produce whenever
    the bounds bracket the induced score changes.
    """
    config = config or ScorerConfig(kind=ScorerKind.NS)
    if config.kind is not ScorerKind.NS:
        raise ValueError("the stability-adjusted search uses the smoothing score")
    if not obs.has_canonical_target():
        raise ValueError("prediction expects the canonical target; relabel first")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    grid = grid or Grid.symmetric(obs.bound)
    if guesses is None:
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
        guesses = draw_guess(obs, GuessStrategy(GuessKind.EMPIRICAL), rng)
    filled = fill_missing(obs, guesses)
    n = filled.n
    weights = ns_weights(filled.entries[:n, :n], config)
    bounds = tau_bounds(
        missing_counts(obs),
        obs.mask,
        bound=obs.bound,
        bandwidth=float(weights.bandwidths.min()),
    )
    score_matrix = ns_scores_over_grid(weights, filled.entries[n, :n], grid.values)
    accepted = _accept_over_grid(score_matrix, alpha, bounds.tau)
    return PredictionSet.from_grid_mask(grid, accepted, obs.bound)
