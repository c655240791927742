"""Nonconformity scores for the last-row entries of a filled matrix.

Two score families are provided behind one configuration type:

* ``svd``: absolute residual against a singular-value-thresholded
  reconstruction of the filled matrix (a hard-threshold SVD estimator).
* ``ns``: neighborhood smoothing; a kernel-weighted sum of response gaps,
  where the kernel compares columns of the upper-left n x n block through
  their inner-product profiles.

Both families treat the first n rows/columns symmetrically: relabeling
them permutes the score vector accordingly.  Scores for column j always
read the response row (the last row) at column j; index arguments are
zero-based, j in [0, n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._stats import lower_quantile, rank_threshold
from .core import FilledMatrix, ObservedMatrix, fill_missing, set_target

BANDWIDTH_FLOOR = 1e-12


class ScorerKind(str, Enum):
    SVD = "svd"
    NS = "ns"


@dataclass(frozen=True)
class ScorerConfig:
    """Configuration shared by both score families.

    The SVD threshold is ``svd_threshold_scale * order ** svd_threshold_exponent``
    where ``order`` is the full matrix order n + 1.  Neighborhood-smoothing
    bandwidths default to the per-column lower-q dissimilarity quantile with
    q = sqrt(log(n) / n); ``ns_bandwidth_quantile`` overrides q and
    ``ns_bandwidths`` pins the bandwidth vector outright.
    """

    kind: ScorerKind = ScorerKind.SVD
    svd_threshold_exponent: float = 1.0 / 3.0
    svd_threshold_scale: float = 1.0
    ns_bandwidth_quantile: float | None = None
    ns_bandwidths: tuple[float, ...] | None = None
    clip_estimates: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ScorerKind(self.kind))
        if not 0 < self.svd_threshold_exponent < 1:
            raise ValueError("svd_threshold_exponent must lie in (0, 1)")
        if self.svd_threshold_scale < 0:
            raise ValueError("svd_threshold_scale must be nonnegative")
        q = self.ns_bandwidth_quantile
        if q is not None and not 0 < q <= 1:
            raise ValueError("ns_bandwidth_quantile must lie in (0, 1]")
        if self.ns_bandwidths is not None:
            h = tuple(float(x) for x in self.ns_bandwidths)
            if any(x <= 0 for x in h):
                raise ValueError("ns_bandwidths must be strictly positive")
            object.__setattr__(self, "ns_bandwidths", h)

    def svd_threshold(self, order: int) -> float:
        return self.svd_threshold_scale * order**self.svd_threshold_exponent

    def bandwidth_quantile(self, n: int) -> float:
        if self.ns_bandwidth_quantile is not None:
            return self.ns_bandwidth_quantile
        return min(1.0, math.sqrt(math.log(n) / n))


def usvt_estimate(
    filled: FilledMatrix, threshold: float, clip: float | None = None
) -> np.ndarray:
    """Reconstruct from the singular triplets whose value strictly exceeds threshold.

    Returns U_k S_k V_k^T summed over {k : s_k > threshold}.  When ``clip`` is
    given the reconstruction is clipped entrywise to [-clip, clip].
    """
    u, s, vh = np.linalg.svd(filled.entries, hermitian=True)
    kept = np.where(s > threshold, s, 0.0)
    est = (u * kept) @ vh
    if clip is not None:
        est = np.clip(est, -clip, clip)
    return est


def score_svd(
    filled: FilledMatrix, j: int, config: ScorerConfig | None = None
) -> float:
    """Residual |A[n, j] - est[n, j]| of the thresholded-SVD reconstruction."""
    config = config or ScorerConfig(kind=ScorerKind.SVD)
    n = filled.n
    if not 0 <= j < n:
        raise ValueError(f"column index {j} out of range [0, {n})")
    clip = filled.bound if config.clip_estimates else None
    est = usvt_estimate(filled, config.svd_threshold(filled.order), clip=clip)
    return float(abs(filled.entries[n, j] - est[n, j]))


def _require_core(n: int) -> None:
    if n < 3:
        raise ValueError("neighborhood smoothing needs at least 3 reference columns")


def dissimilarity_matrix(core: np.ndarray) -> np.ndarray:
    """All pairwise column dissimilarities of an n x n block.

    d[j, j'] averages |<col_j - col_j', col_l>| over the n - 2 columns
    l outside {j, j'}, scaled by 1 / (n (n - 2)).  The diagonal is zero.
    """
    core = np.asarray(core, dtype=float)
    n = core.shape[0]
    _require_core(n)
    gram = core.T @ core
    diag = np.diag(gram)
    # Full sum over l, then remove the l = j and l = j' terms.
    block = 128
    total = np.empty((n, n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        total[start:stop] = np.abs(gram[start:stop, None, :] - gram[None, :, :]).sum(
            axis=2
        )
    total -= np.abs(diag[:, None] - gram)
    total -= np.abs(gram - diag[None, :])
    d = total / (n * (n - 2))
    np.fill_diagonal(d, 0.0)
    return d


def kernel_weight(core: np.ndarray, j: int, jp: int, h: float) -> float:
    """Triangular-kernel weight K_h(d(j, j')) in [0, 1] for two distinct columns."""
    core = np.asarray(core, dtype=float)
    n = core.shape[0]
    _require_core(n)
    if j == jp:
        raise ValueError("kernel weight requires two distinct columns")
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    products = (core[:, j] - core[:, jp]) @ core
    keep = np.ones(n, dtype=bool)
    keep[[j, jp]] = False
    d = np.abs(products[keep]).sum() / (n * (n - 2))
    return float(max(1.0 - d / h, 0.0))


def select_bandwidth(core: np.ndarray, j: int, q: float) -> float:
    """Lower-q quantile of column j's dissimilarities, floored away from zero."""
    d = dissimilarity_matrix(core)
    row = np.delete(d[j], j)
    return max(lower_quantile(row, q), BANDWIDTH_FLOOR)


@dataclass(frozen=True)
class NeighborhoodWeights:
    """Kernel weights precomputed from an n x n block; independent of candidates.

    ``weights[j, j']`` holds K_{h_j}(d(j, j')) with a zero diagonal.  Rows use
    their own bandwidth, so the matrix is not symmetric in general.
    """

    bandwidths: np.ndarray
    weights: np.ndarray
    dissimilarity: np.ndarray


def ns_weights(core: np.ndarray, config: ScorerConfig) -> NeighborhoodWeights:
    """Select bandwidths and evaluate all kernel weights for a core block."""
    core = np.asarray(core, dtype=float)
    n = core.shape[0]
    _require_core(n)
    d = dissimilarity_matrix(core)
    if config.ns_bandwidths is not None:
        h = np.asarray(config.ns_bandwidths, dtype=float)
        if h.shape != (n,):
            raise ValueError(f"expected {n} bandwidths, got {h.shape}")
    else:
        q = config.bandwidth_quantile(n)
        offdiag = np.sort(d[~np.eye(n, dtype=bool)].reshape(n, n - 1), axis=1)
        k = rank_threshold(q, n - 1)
        h = np.maximum(offdiag[:, k - 1], BANDWIDTH_FLOOR)
    w = np.maximum(1.0 - d / h[:, None], 0.0)
    np.fill_diagonal(w, 0.0)
    return NeighborhoodWeights(bandwidths=h, weights=w, dissimilarity=d)


def ns_scores_from_weights(
    weights: NeighborhoodWeights, responses: np.ndarray
) -> np.ndarray:
    """Evaluate all n smoothing scores for one response vector."""
    r = np.asarray(responses, dtype=float)
    gaps = np.abs(r[:, None] - r[None, :])
    return (weights.weights * gaps).sum(axis=1)


def ns_scores_over_grid(
    weights: NeighborhoodWeights, responses: np.ndarray, grid_values: np.ndarray
) -> np.ndarray:
    """Scores for every candidate z, updating only the target response.

    Only the last response varies with z, so the pairwise-gap block over the
    other n - 1 columns is computed once and reused.  Returns a (G, n) array.
    """
    r = np.asarray(responses, dtype=float)
    z = np.asarray(grid_values, dtype=float)
    n = r.size
    w = weights.weights
    fixed = r[: n - 1]
    gaps0 = np.abs(fixed[:, None] - fixed[None, :])
    base = (w[: n - 1, : n - 1] * gaps0).sum(axis=1)  # contributions without z
    zgaps = np.abs(fixed[:, None] - z[None, :])  # (n - 1, G)
    scores = np.empty((z.size, n))
    scores[:, : n - 1] = base[None, :] + (w[: n - 1, n - 1, None] * zgaps).T
    scores[:, n - 1] = w[n - 1, : n - 1] @ zgaps
    return scores


def score_ns(filled: FilledMatrix, j: int, bandwidths: np.ndarray) -> float:
    """Neighborhood-smoothing score for column j under explicit bandwidths."""
    n = filled.n
    _require_core(n)
    if not 0 <= j < n:
        raise ValueError(f"column index {j} out of range [0, {n})")
    h = np.asarray(bandwidths, dtype=float)
    if h.shape != (n,):
        raise ValueError(f"expected {n} bandwidths, got shape {h.shape}")
    config = ScorerConfig(kind=ScorerKind.NS, ns_bandwidths=tuple(h))
    weights = ns_weights(filled.entries[:n, :n], config)
    responses = filled.entries[n, :n]
    return float(ns_scores_from_weights(weights, responses)[j])


def score_all(
    obs: ObservedMatrix, guesses: np.ndarray, z: float, config: ScorerConfig
) -> np.ndarray:
    """Score vector (length n) of the guess-filled matrix with candidate z.

    Position j holds the score of last-row column j; the final position is
    the target column itself.  All values are finite and nonnegative.
    """
    if not obs.has_canonical_target():
        raise ValueError("scores expect the canonical target; relabel first")
    filled = set_target(fill_missing(obs, guesses), z)
    n = filled.n
    if config.kind is ScorerKind.SVD:
        clip = filled.bound if config.clip_estimates else None
        est = usvt_estimate(filled, config.svd_threshold(filled.order), clip=clip)
        scores = np.abs(filled.entries[n, :n] - est[n, :n])
    else:
        weights = ns_weights(filled.entries[:n, :n], config)
        scores = ns_scores_from_weights(weights, filled.entries[n, :n])
    if not np.isfinite(scores).all() or (scores < 0).any():
        raise ValueError("scores must be finite and nonnegative")
    return scores


def svd_scores_over_grid(
    obs: ObservedMatrix, guesses: np.ndarray, grid_values: np.ndarray, config: ScorerConfig
) -> np.ndarray:
    """SVD score vectors for every candidate z, batched over the grid.

    The reconstruction is recomputed for each candidate (the estimate depends
    on z), but the decompositions run as one batched call.  Returns (G, n).
    """
    if not obs.has_canonical_target():
        raise ValueError("scores expect the canonical target; relabel first")
    base = fill_missing(obs, guesses).entries
    z = np.asarray(grid_values, dtype=float)
    order = base.shape[0]
    n = order - 1
    stack = np.broadcast_to(base, (z.size, order, order)).copy()
    stack[:, order - 1, order - 2] = z
    stack[:, order - 2, order - 1] = z
    u, s, vh = np.linalg.svd(stack, hermitian=True)
    kept = np.where(s > config.svd_threshold(order), s, 0.0)
    rows = np.einsum("gk,gkj->gj", u[:, order - 1, :] * kept, vh)
    if config.clip_estimates:
        rows = np.clip(rows, -obs.bound, obs.bound)
    return np.abs(stack[:, order - 1, :n] - rows[:, :n])
