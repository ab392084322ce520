"""Rank transforms, the empirical copula, and Kendall pseudo-observations.

Everything downstream of this module is rank-based: applying a strictly
increasing transform to any data column leaves all outputs unchanged.
Ties are resolved deterministically by midranks and counted so that tests
can warn (continuous margins are the model assumption; midranks are the
documented extension).

Two rank scalings coexist on purpose.  The empirical copula uses ranks/n;
the dependence-function estimators take logs of pseudo-observations and
use ranks/(n+1) so the column maximum stays strictly below 1.  The scaling
is carried on the PseudoObservations type to prevent silent mixing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "Dataset",
    "PseudoObservations",
    "pseudo_observations",
    "empirical_copula",
    "kendall_pseudo",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """n x D matrix of componentwise maxima with optional site labels."""

    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError(f"dataset must be a nonempty 2-d matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "values", _readonly(values))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != values.shape[1]:
                raise ValueError(f"{len(labels)} labels for {values.shape[1]} columns")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PseudoObservations:
    """Normalized midranks in (0, 1), tagged with their scaling."""

    uhat: np.ndarray
    scaling: str  # "over_n" or "over_n_plus_1"
    ties: int = 0

    def __post_init__(self):
        if self.scaling not in ("over_n", "over_n_plus_1"):
            raise ValueError(f"unknown scaling {self.scaling!r}")
        uhat = np.atleast_2d(np.asarray(self.uhat, dtype=float))
        if np.any(uhat <= 0) or np.any(uhat > 1):
            raise ValueError("pseudo-observations must lie in (0, 1]")
        if self.scaling == "over_n_plus_1" and np.any(uhat >= 1):
            raise ValueError("over_n_plus_1 pseudo-observations must lie in (0, 1)")
        object.__setattr__(self, "uhat", _readonly(uhat))

    @property
    def n(self) -> int:
        return self.uhat.shape[0]

    @property
    def dim(self) -> int:
        return self.uhat.shape[1]

    @property
    def has_ties(self) -> bool:
        return self.ties > 0


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.values
    return np.atleast_2d(np.asarray(data, dtype=float))


def pseudo_observations(data, scaling: str = "over_n_plus_1") -> PseudoObservations:
    """Columnwise midranks divided by n ("over_n") or n+1 ("over_n_plus_1").

    Midranks make the transform deterministic under ties; the total number
    of tied entries across columns is recorded on the result.
    """
    if scaling not in ("over_n", "over_n_plus_1"):
        raise ValueError(f"unknown scaling {scaling!r}")
    values = _as_matrix(data)
    n = values.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    if not np.all(np.isfinite(values)):
        raise ValueError("data contains non-finite entries")
    ranks = np.column_stack([rankdata(col, method="average") for col in values.T])
    ties = 0
    for col in values.T:
        ties += n - np.unique(col).size
    denom = float(n) if scaling == "over_n" else float(n + 1)
    return PseudoObservations(uhat=ranks / denom, scaling=scaling, ties=ties)


def empirical_copula(pobs: PseudoObservations, u) -> float | np.ndarray:
    """Empirical copula C_n(u) = (1/n) sum_i 1{Uhat_i <= u componentwise}.

    Requires over_n scaling (ranks/n), matching the definition of C_n.
    Accepts a single point (D,) or a batch (m, D); values lie on the grid
    {0, 1/n, ..., 1} and are nondecreasing in every coordinate.
    """
    if pobs.scaling != "over_n":
        raise ValueError("empirical_copula requires over_n scaling")
    U = np.asarray(u, dtype=float)
    single = U.ndim == 1
    U = np.atleast_2d(U)
    if U.shape[1] != pobs.dim:
        raise ValueError(f"points have dimension {U.shape[1]}, expected {pobs.dim}")
    out = np.all(pobs.uhat[:, None, :] <= U[None, :, :], axis=2).mean(axis=0)
    return float(out[0]) if single else out


def kendall_pseudo(data) -> np.ndarray:
    """Bivariate Kendall pseudo-observations.

    W_i = (1/n) sum_t 1{Y_t1 <= Y_i1 and Y_t2 <= Y_i2}; each W_i lies in
    [1/n, 1] (every point dominates itself) and the vector is invariant
    under strictly increasing marginal transforms.
    """
    values = _as_matrix(data)
    if values.shape[1] != 2:
        raise ValueError(f"kendall_pseudo is bivariate only, got {values.shape[1]} columns")
    y1 = values[:, 0]
    y2 = values[:, 1]
    dominated = (y1[:, None] <= y1[None, :]) & (y2[:, None] <= y2[None, :])
    return dominated.mean(axis=0)
