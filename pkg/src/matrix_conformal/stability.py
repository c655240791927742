"""Worst-case score-perturbation bounds driven by the missingness pattern.

For the neighborhood-smoothing score, swapping one set of guessed values
for another can move score j by at most tau[j], an observable quantity
built from per-row missing counts.  The bounds feed the widened inclusion
rule of the stability-accelerated prediction set: large missingness in the
response row inflates every tau and ultimately forces the trivial set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._stats import rank_threshold
from .core import MissingnessSummary, _frozen


@dataclass(frozen=True)
class StabilityBounds:
    """Per-column perturbation bounds together with the constants used."""

    tau: np.ndarray
    bound: float  # entry bound C0
    lipschitz: float  # Lipschitz constant of the unit-bandwidth kernel
    kernel_sup: float  # supremum of the kernel
    bandwidth: float  # scalar bandwidth entering the bound

    def __post_init__(self) -> None:
        tau = np.asarray(self.tau, dtype=float)
        if (tau < 0).any() or not np.isfinite(tau).all():
            raise ValueError("stability bounds must be finite and nonnegative")
        object.__setattr__(self, "tau", _frozen(tau))


def tau_bounds(
    summary: MissingnessSummary,
    mask: np.ndarray,
    bound: float,
    lipschitz: float = 1.0,
    kernel_sup: float = 1.0,
    bandwidth: float = 1.0,
) -> StabilityBounds:
    """Evaluate the stability bound for every reference column.

    tau[j] = min(4 L0 C0^3 h^-1 (m_j + 3 mbar), 2 C0 CK)
             + 2 CK C0 ((n - 2) M[n, j] + m_target_row)

    where m_j counts missing entries in row j, mbar averages the first n
    rows, and M[n, j] flags a missing response at column j.  When adaptive
    bandwidths are in use, pass the smallest one: a smaller h only enlarges
    (and so preserves) the bound.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if not (bound > 0 and lipschitz > 0 and kernel_sup > 0):
        raise ValueError("constants must be positive")
    mask = np.asarray(mask, dtype=bool)
    order = mask.shape[0]
    n = order - 1
    if n < 3:
        raise ValueError("stability bounds require at least 3 reference columns")
    m = summary.m
    if m.shape != (order,):
        raise ValueError("summary does not match the mask order")
    weight_term = np.minimum(
        4.0 * lipschitz * bound**3 / bandwidth * (m[:n] + 3.0 * summary.m_bar),
        2.0 * bound * kernel_sup,
    )
    response_term = 2.0 * kernel_sup * bound * (
        (n - 2) * mask[n, :n].astype(float) + summary.m_target_row
    )
    return StabilityBounds(
        tau=weight_term + response_term,
        bound=float(bound),
        lipschitz=float(lipschitz),
        kernel_sup=float(kernel_sup),
        bandwidth=float(bandwidth),
    )


def is_trivial_forced(mask: np.ndarray, alpha: float, bound: float) -> bool:
    """Whether response-row missingness alone already forces the trivial set.

    True when the response row has at least ceil(alpha * n) missing entries.
    This is a diagnostic: the stability algorithm never branches on it, the
    triviality emerges from the tau values themselves.  ``bound`` is part of
    the reported context and does not influence the decision.
    """
    del bound
    mask = np.asarray(mask, dtype=bool)
    n = mask.shape[0] - 1
    m_target_row = int(mask[n].sum() - mask[n, n])
    return m_target_row >= rank_threshold(alpha, n)
