"""Nonparametric estimators of the dependence function.

Both estimators are closed rank forms of curve integrals of the empirical
copula along u -> (u^{v_1}, ..., u^{v_D}).  An extreme-value copula
satisfies C(u^{v_1}, ..., u^{v_D}) = u^{A(v)}, so integrals of
f(C(u^v)) g(u) du recover A; two choices of (f, g) give the two
estimators.

Route 1 (f(x) = x, g(u) = 1/u).  With Uhat the ranks/(n+1)
pseudo-observations, row i satisfies Uhat_id <= u^{v_d} for all d exactly
when u >= exp(-xi_i(v)), where

    xi_i(v) = min over {d : v_d > 0} of (-log Uhat_id) / v_d.

Hence integral_0^1 C_n(u^v)/u du = (1/n) sum_i integral over
[exp(-xi_i), 1] of du/u = mean_i xi_i(v), exactly, while the population
version is integral_0^1 u^{A-1} du = 1/A.  Matching the two gives

    Pickands:  1 / A_P(v) = mean_i xi_i(v).

Route 2 (f = log with the substitution u = exp(-s)).  The population
integral of log C(u^v) d(-log u) over s in (0, inf) diverges; instead
compare log xi against its population law: under C, xi(v) is exponential
with rate A(v), so E[log xi(v)] = -gamma - log A(v) with gamma the
Euler-Mascheroni constant.  Replacing the expectation by the rank sample
mean gives

    CFG:  log A_C(v) = -gamma - mean_i log xi_i(v).

The integral forms are the test oracle (exact step-function integration);
the closed rank forms are the implementation.  Raw forms need not equal 1
at the simplex vertices; the endpoint corrections subtract vertex-anchored
terms, linearly in v, so corrected estimates are exactly 1 there:

    1 / A_P,c(v)  = 1 / A_P(v) - sum_d v_d (1 / A_P(e_d) - 1)
    log A_C,c(v)  = log A_C(v) - sum_d v_d log A_C(e_d)

Coordinates with v_d = 0 are dropped from the min (the ratio is +inf),
which keeps estimates continuous as v approaches a simplex face.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GridPickands, as_simplex_point, simplex_grid
from .empirical import PseudoObservations

__all__ = [
    "DependenceEstimate",
    "xi_values",
    "pickands_estimator",
    "cfg_estimator",
    "weighted_estimator",
    "estimate_surface",
]

EULER_GAMMA = np.euler_gamma


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DependenceEstimate:
    """Estimated dependence-function values on a simplex grid."""

    grid: np.ndarray
    values: np.ndarray
    method: str
    corrected: bool
    n: int

    def __post_init__(self):
        grid = np.atleast_2d(np.asarray(self.grid, dtype=float))
        values = np.asarray(self.values, dtype=float).ravel()
        if grid.shape[0] != values.size:
            raise ValueError(f"{grid.shape[0]} grid points but {values.size} values")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("estimate values must be finite and strictly positive")
        object.__setattr__(self, "grid", _readonly(grid))
        object.__setattr__(self, "values", _readonly(values))

    @property
    def dim(self) -> int:
        return self.grid.shape[1]

    def as_pickands(self) -> GridPickands:
        """View the tabulated estimate as an (unprojected) dependence function."""
        return GridPickands(self.grid, self.values)


def _require_n_plus_1(pobs: PseudoObservations):
    if pobs.scaling != "over_n_plus_1":
        raise ValueError("estimators require over_n_plus_1 pseudo-observations")


def _neglog(pobs: PseudoObservations) -> np.ndarray:
    uhat = pobs.uhat
    if np.any(uhat <= 0) or np.any(uhat >= 1):
        raise ValueError("pseudo-observations must lie strictly inside (0, 1)")
    return -np.log(uhat)


def _xi_matrix(neglog: np.ndarray, points: np.ndarray) -> np.ndarray:
    """xi_i(v_g) for all rows i and grid points g, shape (n, G)."""
    with np.errstate(divide="ignore"):
        ratios = neglog[:, None, :] / points[None, :, :]
    return ratios.min(axis=2)


def xi_values(pobs: PseudoObservations, v) -> np.ndarray:
    """Per-row curve crossings xi_i(v); all finite and strictly positive."""
    _require_n_plus_1(pobs)
    v = as_simplex_point(v)
    if v.size != pobs.dim:
        raise ValueError(f"point has dimension {v.size}, expected {pobs.dim}")
    return _xi_matrix(_neglog(pobs), v[None, :])[:, 0]


def _pickands_values(neglog: np.ndarray, points: np.ndarray, corrected: bool) -> np.ndarray:
    inv = _xi_matrix(neglog, points).mean(axis=0)
    if corrected:
        vertex_inv = neglog.mean(axis=0)
        inv = inv - points @ (vertex_inv - 1.0)
    return 1.0 / inv


def _cfg_values(neglog: np.ndarray, points: np.ndarray, corrected: bool) -> np.ndarray:
    log_a = -EULER_GAMMA - np.log(_xi_matrix(neglog, points)).mean(axis=0)
    if corrected:
        vertex_log_a = -EULER_GAMMA - np.log(neglog).mean(axis=0)
        log_a = log_a - points @ vertex_log_a
    return np.exp(log_a)


def pickands_estimator(pobs: PseudoObservations, v, corrected: bool = True) -> float:
    """Pickands rank estimator at one simplex point."""
    _require_n_plus_1(pobs)
    v = as_simplex_point(v)
    if v.size != pobs.dim:
        raise ValueError(f"point has dimension {v.size}, expected {pobs.dim}")
    return float(_pickands_values(_neglog(pobs), v[None, :], corrected)[0])


def cfg_estimator(pobs: PseudoObservations, v, corrected: bool = True) -> float:
    """Caperaa-Fougeres-Genest rank estimator at one simplex point."""
    _require_n_plus_1(pobs)
    v = as_simplex_point(v)
    if v.size != pobs.dim:
        raise ValueError(f"point has dimension {v.size}, expected {pobs.dim}")
    return float(_cfg_values(_neglog(pobs), v[None, :], corrected)[0])


def weighted_estimator(
    pobs: PseudoObservations, v, lam: float, corrected: bool = True
) -> float:
    """Convex combination lam * A_P + (1 - lam) * A_CFG with user-chosen lam."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    return lam * pickands_estimator(pobs, v, corrected) + (1.0 - lam) * cfg_estimator(
        pobs, v, corrected
    )


def estimate_surface(
    pobs: PseudoObservations,
    resolution: int,
    method: str = "cfg",
    corrected: bool = True,
) -> DependenceEstimate:
    """Evaluate the chosen estimator on the regular simplex grid {j/k}."""
    _require_n_plus_1(pobs)
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    grid = simplex_grid(pobs.dim, resolution).points
    neglog = _neglog(pobs)
    if method == "pickands":
        values = _pickands_values(neglog, grid, corrected)
    elif method == "cfg":
        values = _cfg_values(neglog, grid, corrected)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'pickands' or 'cfg'")
    return DependenceEstimate(
        grid=grid, values=values, method=method, corrected=corrected, n=pobs.n
    )
