"""Data model for partially observed symmetric matrices.

A matrix of order N = n + 1 is observed through a symmetric missingness
mask, with one designated target entry (canonically at position
(N - 1, N - 2), zero-based) whose value is never read and is the object
of prediction.  Missing values are held as NaN in memory so that masked
data can never silently leak into a computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CSV_SYMMETRY_TOL = 1e-9
MISSING_TOKEN = "NA"


class MatrixFormatError(ValueError):
    """Input data violates the symmetric-matrix contract."""


def _as_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ObservedMatrix:
    """A symmetric matrix observed with missing entries plus one target entry.

    Attributes:
        entries: (N, N) float array; NaN at every unobserved position
            (masked positions and the target pair).
        mask: (N, N) boolean array, True where the entry is missing.  By
            convention the target pair itself carries False here; it is
            tracked separately via ``target``.
        bound: known bound C0 > 0 with |entry| <= C0 for all observed data.
        target: (row, col) index pair of the entry to predict, canonically
            (N - 1, N - 2).
    """

    entries: np.ndarray
    mask: np.ndarray
    bound: float
    target: tuple[int, int]

    def __post_init__(self) -> None:
        entries = _as_square(np.asarray(self.entries, dtype=float), "entries")
        mask = _as_square(np.asarray(self.mask, dtype=bool), "mask")
        if entries.shape != mask.shape:
            raise ValueError("entries and mask must have the same shape")
        order = entries.shape[0]
        if order < 2:
            raise ValueError("matrix order must be at least 2")
        if not self.bound > 0:
            raise ValueError("bound must be positive")
        ti, tj = self.target
        if not (0 <= ti < order and 0 <= tj < order):
            raise ValueError(f"target {self.target} out of range for order {order}")
        if ti == tj:
            raise ValueError("target must be an off-diagonal entry")
        if mask[ti, tj] or mask[tj, ti]:
            raise ValueError("target pair must carry mask value 0")
        if not np.array_equal(mask, mask.T):
            raise ValueError("mask must be symmetric")
        hole = mask.copy()
        hole[ti, tj] = hole[tj, ti] = True
        observed = ~hole
        vals = entries[observed]
        if not np.isfinite(vals).all():
            raise ValueError("observed positions must hold finite values")
        if not np.isnan(entries[hole]).all():
            raise ValueError("unobserved positions must hold NaN")
        sym = entries[observed] == entries.T[observed]
        if not sym.all():
            raise ValueError("entries must be symmetric at observed positions")
        if np.abs(vals).max(initial=0.0) > self.bound:
            raise ValueError("observed entries exceed the stated bound")
        object.__setattr__(self, "entries", _frozen(entries))
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "target", (int(ti), int(tj)))
        object.__setattr__(self, "bound", float(self.bound))

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        """Number of reference rows (order minus the new row)."""
        return self.order - 1

    @property
    def fill_mask(self) -> np.ndarray:
        """Positions substituted by guesses: masked entries plus the target pair."""
        fm = self.mask.copy()
        ti, tj = self.target
        fm[ti, tj] = fm[tj, ti] = True
        return fm

    def has_canonical_target(self) -> bool:
        return self.target == (self.order - 1, self.order - 2)

    @classmethod
    def from_dense(
        cls,
        values: np.ndarray,
        mask: np.ndarray,
        bound: float,
        target: tuple[int, int] | None = None,
    ) -> "ObservedMatrix":
        """Build from a dense value matrix plus a missingness mask.

        Values at masked positions and at the target pair are discarded
        (replaced by NaN).  ``target`` defaults to the canonical position
        (N - 1, N - 2).
        """
        values = _as_square(np.array(values, dtype=float), "values")
        mask = _as_square(np.array(mask, dtype=bool), "mask")
        order = values.shape[0]
        if target is None:
            target = (order - 1, order - 2)
        ti, tj = target
        m = mask.copy()
        if 0 <= ti < order and 0 <= tj < order:
            m[ti, tj] = m[tj, ti] = False
        hole = m.copy()
        hole[ti, tj] = hole[tj, ti] = True
        ent = values.copy()
        ent[hole] = np.nan
        return cls(ent, m, bound, (ti, tj))


@dataclass(frozen=True)
class FilledMatrix:
    """A fully populated symmetric matrix, typically a guess-completed input."""

    entries: np.ndarray
    bound: float

    def __post_init__(self) -> None:
        entries = _as_square(np.asarray(self.entries, dtype=float), "entries")
        if not np.isfinite(entries).all():
            raise ValueError("filled matrix must be fully populated and finite")
        if not np.array_equal(entries, entries.T):
            raise ValueError("filled matrix must be symmetric")
        if not self.bound > 0:
            raise ValueError("bound must be positive")
        object.__setattr__(self, "entries", _frozen(entries))
        object.__setattr__(self, "bound", float(self.bound))

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.order - 1


@dataclass(frozen=True)
class MissingnessSummary:
    """Per-row missing counts: m[i] counts missing off-diagonal entries of row i."""

    m: np.ndarray
    m_bar: float
    m_target_row: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", _frozen(np.asarray(self.m, dtype=int)))


def fill_missing(obs: ObservedMatrix, guesses: np.ndarray) -> FilledMatrix:
    """Substitute guessed values into every unobserved slot.

    The result agrees with the observations wherever the mask is 0 and takes
    ``guesses`` at masked positions and at the target pair.  ``guesses`` must
    be symmetric on those positions so the result stays symmetric.
    """
    guesses = _as_square(np.asarray(guesses, dtype=float), "guesses")
    if guesses.shape != obs.entries.shape:
        raise ValueError(
            f"guess matrix has order {guesses.shape[0]}, expected {obs.order}"
        )
    fm = obs.fill_mask
    if not np.array_equal(guesses[fm], guesses.T[fm]):
        raise ValueError("guess matrix must be symmetric on unobserved positions")
    if not np.isfinite(guesses[fm]).all():
        raise ValueError("guesses must be finite on unobserved positions")
    out = np.where(fm, guesses, obs.entries)
    return FilledMatrix(out, obs.bound)


def set_target(filled: FilledMatrix, z: float) -> FilledMatrix:
    """Return a copy with the canonical target pair set to the candidate z."""
    z = float(z)
    if not abs(z) <= filled.bound:
        raise ValueError(f"candidate {z} outside [-{filled.bound}, {filled.bound}]")
    out = filled.entries.copy()
    order = filled.order
    out[order - 1, order - 2] = z
    out[order - 2, order - 1] = z
    return FilledMatrix(out, filled.bound)


def missing_counts(obs: ObservedMatrix) -> MissingnessSummary:
    """Count missing off-diagonal entries per row.

    The target pair contributes nothing (its mask is 0 by convention), and
    diagonal positions are excluded from every count.  ``m_bar`` averages the
    counts of the first n rows only.
    """
    mask = obs.mask
    m = mask.sum(axis=1) - np.diag(mask)
    n = obs.n
    m_bar = float(m[:n].mean())
    return MissingnessSummary(m=m, m_bar=m_bar, m_target_row=int(m[n]))


def reindex(obs: ObservedMatrix, index_map: np.ndarray) -> ObservedMatrix:
    """Reorder rows and columns: out[a, b] = in[index_map[a], index_map[b]]."""
    index_map = np.asarray(index_map, dtype=int)
    order = obs.order
    if sorted(index_map.tolist()) != list(range(order)):
        raise ValueError("index_map must be a permutation of all row indices")
    positions = np.argsort(index_map)  # positions[old] = new
    sel = np.ix_(index_map, index_map)
    ti, tj = obs.target
    return ObservedMatrix(
        entries=obs.entries[sel],
        mask=obs.mask[sel],
        bound=obs.bound,
        target=(int(positions[ti]), int(positions[tj])),
    )


def permute(obs: ObservedMatrix, pi: np.ndarray) -> ObservedMatrix:
    """Relabel the first n rows/columns by a permutation fixing the last row.

    ``pi`` maps old index to new index over 0..n-1.  Entries, mask and the
    target column move together: output (i, j) holds input (pi^-1(i), pi^-1(j)).
    """
    pi = np.asarray(pi, dtype=int)
    n = obs.n
    if sorted(pi.tolist()) != list(range(n)):
        raise ValueError(f"pi must be a bijection of 0..{n - 1}")
    full = np.append(pi, n)  # last row fixed
    inverse = np.argsort(full)  # inverse[new] = old
    return reindex(obs, inverse)


def relabel_target(
    obs: ObservedMatrix, i0: int, j0: int
) -> tuple[ObservedMatrix, np.ndarray]:
    """Make (i0, j0) the prediction target and move it to the canonical slot.

    The previous target entry becomes an ordinary missing entry.  If (i0, j0)
    was observed, its value is discarded: the target is predicted as if
    unobserved.  Returns the relabeled matrix together with the index map
    actually applied (out[a, b] = in[index_map[a], index_map[b]]); the map is
    the identity when (i0, j0) is already the target.

    Validity of downstream prediction rests on the caller choosing (i0, j0)
    without reference to the matrix values.
    """
    order = obs.order
    canonical = (order - 1, order - 2)
    if not (0 <= i0 < order and 0 <= j0 < order):
        raise ValueError(f"target ({i0}, {j0}) out of range for order {order}")
    if i0 == j0:
        raise ValueError("target must be an off-diagonal entry")
    identity = np.arange(order)
    if {i0, j0} == set(obs.target):
        retargeted = obs
        if set(obs.target) == set(canonical):
            if obs.target != canonical:
                retargeted = ObservedMatrix(
                    obs.entries, obs.mask, obs.bound, canonical
                )
            return retargeted, identity
    else:
        # The old target reverts to a plain missing entry before re-targeting.
        mask2 = obs.mask.copy()
        ti, tj = obs.target
        mask2[ti, tj] = mask2[tj, ti] = True
        retargeted = ObservedMatrix.from_dense(
            np.where(np.isnan(obs.entries), 0.0, obs.entries),
            mask2 | np.isnan(obs.entries),
            obs.bound,
            target=(i0, j0),
        )

    idx = identity.copy()
    idx[[i0, order - 1]] = idx[[order - 1, i0]]
    pos_j0 = int(np.where(idx == j0)[0][0])
    idx[[pos_j0, order - 2]] = idx[[order - 2, pos_j0]]
    out = reindex(retargeted, idx)
    if out.target != canonical:  # transposed request lands transposed
        out = ObservedMatrix(out.entries, out.mask, out.bound, canonical)
    return out, idx


def read_matrix_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Parse the CSV matrix format into (values, mask) arrays.

    The file holds N rows of N comma-separated numeric fields; an empty field
    or the literal ``NA`` marks a missing entry.  Values must be symmetric to
    within 1e-9 (symmetrized by averaging); the missingness pattern must be
    exactly symmetric.  Parse errors name the offending 1-based row/column.
    """
    import csv

    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append(row)
    if not rows:
        raise MatrixFormatError("empty matrix file")
    order = len(rows)
    values = np.full((order, order), np.nan)
    mask = np.zeros((order, order), dtype=bool)
    for i, row in enumerate(rows):
        if len(row) != order:
            raise MatrixFormatError(
                f"row {i + 1} has {len(row)} fields, expected {order}"
            )
        for j, field in enumerate(row):
            token = field.strip()
            if token == "" or token == MISSING_TOKEN:
                mask[i, j] = True
                continue
            try:
                values[i, j] = float(token)
            except ValueError:
                raise MatrixFormatError(
                    f"row {i + 1}, column {j + 1}: cannot parse {token!r}"
                ) from None
    asym = mask != mask.T
    if asym.any():
        i, j = np.argwhere(asym)[0]
        raise MatrixFormatError(
            f"row {i + 1}, column {j + 1}: missingness is not symmetric"
        )
    both = ~mask
    gap = np.abs(np.where(both, values, 0.0) - np.where(both, values, 0.0).T)
    if gap.max(initial=0.0) > CSV_SYMMETRY_TOL:
        i, j = np.argwhere(gap > CSV_SYMMETRY_TOL)[0]
        raise MatrixFormatError(
            f"row {i + 1}, column {j + 1}: asymmetry {gap[i, j]:.3g} "
            f"exceeds tolerance {CSV_SYMMETRY_TOL}"
        )
    values = np.where(both, (values + values.T) / 2.0, np.nan)
    return values, mask


def write_matrix_csv(path: str, obs: ObservedMatrix) -> None:
    """Write an observed matrix in the CSV matrix format (NA for holes)."""
    hole = obs.fill_mask
    with open(path, "w") as fh:
        for i in range(obs.order):
            fields = [
                MISSING_TOKEN if hole[i, j] else repr(float(obs.entries[i, j]))
                for j in range(obs.order)
            ]
            fh.write(",".join(fields) + "\n")
