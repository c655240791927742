"""Synthetic data: latent-position matrix generators and missingness patterns.

Three generating surfaces of increasing difficulty (a smooth low-rank one,
a high-rank oscillatory one, and a non-smooth one) produce symmetric
matrices A[i, j] = f(xi_i, xi_j) + noise from uniform latent positions.
Masks come in three flavors: target-only, largest-entries-first (missing
not at random), and uniform random pairs (missing completely at random).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FilledMatrix, ObservedMatrix

GRAPHONS = ("f1", "f2", "f3")

# Entry bound per generator: supremum of |f| plus the default noise
# halfwidth, rounded up to one decimal.
GRAPHON_BOUNDS = {"f1": 4.4, "f2": 4.6, "f3": 4.3}

DEFAULT_NOISE_HALFWIDTH = 0.1


def graphon_value(graphon: str, u, v):
    """Evaluate the named generator at latent positions in (0, 1).

    Accepts scalars or broadcastable arrays; symmetric in (u, v).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if graphon == "f1":
        out = 2.5 * (u + v) - 0.75
    elif graphon == "f2":
        out = (
            2.5
            * np.cos(0.1 / ((u - 0.5) ** 3 + (v - 0.5) ** 3 + 0.01))
            * np.maximum(u, v) ** (2.0 / 3.0)
            + 2.0
        )
    elif graphon == "f3":
        out = 5.0 / 3.0 * (u**2 + v**2) * np.cos(1.0 / (u**4 + v**4)) + 0.75
    else:
        raise ValueError(f"unknown graphon {graphon!r}; choose from {GRAPHONS}")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GraphonSpec:
    """Recipe for one synthetic instance."""

    graphon: str
    n: int
    xi_target: float
    noise_halfwidth: float = DEFAULT_NOISE_HALFWIDTH
    seed: int = 0
    bound: float | None = None

    def __post_init__(self) -> None:
        if self.graphon not in GRAPHONS:
            raise ValueError(
                f"unknown graphon {self.graphon!r}; choose from {GRAPHONS}"
            )
        if self.n < 3:
            raise ValueError("need at least 3 reference rows")
        if not 0 < self.xi_target < 1:
            raise ValueError("xi_target must lie strictly inside (0, 1)")
        if self.noise_halfwidth < 0:
            raise ValueError("noise_halfwidth must be nonnegative")
        if self.bound is None:
            object.__setattr__(self, "bound", GRAPHON_BOUNDS[self.graphon])


@dataclass(frozen=True)
class SyntheticInstance:
    """A complete ground-truth matrix with its latents and target value."""

    complete: FilledMatrix
    latents: np.ndarray
    truth: float

    def __post_init__(self) -> None:
        if np.abs(self.complete.entries).max() > self.complete.bound:
            raise ValueError("generated entries exceed the stated bound")
        lat = np.asarray(self.latents, dtype=float)
        if not ((lat > 0) & (lat < 1)).all():
            raise ValueError("latents must lie strictly inside (0, 1)")
        object.__setattr__(self, "latents", lat)


def sample_instance(spec: GraphonSpec) -> SyntheticInstance:
    """Draw one complete matrix; deterministic given the seed.

    Latents for the first n rows are uniform; the last latent is pinned to
    ``spec.xi_target``.  Noise is drawn once per unordered pair (diagonal
    included) and mirrored, keeping the matrix exactly symmetric.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    n = spec.n
    order = n + 1
    latents = rng.random(n)
    while (latents == 0).any():  # keep strictly interior
        latents[latents == 0] = rng.random(int((latents == 0).sum()))
    latents = np.append(latents, spec.xi_target)
    base = graphon_value(spec.graphon, latents[:, None], latents[None, :])
    noise = np.zeros((order, order))
    if spec.noise_halfwidth > 0:
        iu, ju = np.triu_indices(order)
        draws = rng.uniform(-spec.noise_halfwidth, spec.noise_halfwidth, iu.size)
        noise[iu, ju] = draws
        noise[ju, iu] = draws
    complete = FilledMatrix(base + noise, spec.bound)
    return SyntheticInstance(
        complete=complete,
        latents=latents,
        truth=float(complete.entries[order - 1, order - 2]),
    )


def _eligible_pairs(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Off-diagonal unordered pairs excluding the canonical target pair."""
    iu, ju = np.triu_indices(order, k=1)
    keep = ~((iu == order - 2) & (ju == order - 1))
    return iu[keep], ju[keep]


def mask_single_target(n: int) -> np.ndarray:
    """Mask with nothing flagged: only the (separately tracked) target is unknown."""
    if n < 2:
        raise ValueError("need at least 2 reference rows")
    return np.zeros((n + 1, n + 1), dtype=bool)


def mask_mnar_largest(complete: FilledMatrix | np.ndarray, m0: int) -> np.ndarray:
    """Flag the m0 largest-valued eligible pairs (value-dependent missingness).

    Ties break lexicographically by (row, column) of the upper-triangle pair.
    """
    values = complete.entries if isinstance(complete, FilledMatrix) else complete
    values = np.asarray(values, dtype=float)
    order = values.shape[0]
    iu, ju = _eligible_pairs(order)
    if not 0 <= m0 <= iu.size:
        raise ValueError(f"m0 must lie in [0, {iu.size}]")
    ranking = np.lexsort((ju, iu, -values[iu, ju]))
    chosen = ranking[:m0]
    mask = np.zeros((order, order), dtype=bool)
    mask[iu[chosen], ju[chosen]] = True
    mask[ju[chosen], iu[chosen]] = True
    return mask


def mask_mcar(n: int, m0: int, seed: int) -> np.ndarray:
    """Flag m0 eligible pairs uniformly at random; deterministic given the seed."""
    order = n + 1
    iu, ju = _eligible_pairs(order)
    if not 0 <= m0 <= iu.size:
        raise ValueError(f"m0 must lie in [0, {iu.size}]")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    chosen = rng.choice(iu.size, size=m0, replace=False)
    mask = np.zeros((order, order), dtype=bool)
    mask[iu[chosen], ju[chosen]] = True
    mask[ju[chosen], iu[chosen]] = True
    return mask


def observe(instance: SyntheticInstance, mask: np.ndarray) -> ObservedMatrix:
    """Apply a mask to a complete instance, targeting the canonical entry."""
    return ObservedMatrix.from_dense(
        instance.complete.entries, mask, instance.complete.bound
    )
