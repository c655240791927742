"""Order-statistic helpers shared by the quantile rule and bandwidth selection."""

from __future__ import annotations

import math

import numpy as np

# Absorbs float noise in beta * n so exact products never round up a rank.
_RANK_EPS = 1e-12


def rank_threshold(beta: float, n: int) -> int:
    """Index (1-based) of the lower-beta order statistic among n values."""
    if n < 1:
        raise ValueError("need at least one value")
    if not 0 < beta <= 1:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    k = math.ceil(beta * n - _RANK_EPS)
    return min(max(k, 1), n)


def lower_quantile(values: np.ndarray, beta: float) -> float:
    """Lower-beta empirical quantile: the ceil(beta * n)-th smallest value."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("values must be a nonempty vector")
    k = rank_threshold(beta, values.size)
    return float(np.partition(values, k - 1)[k - 1])
