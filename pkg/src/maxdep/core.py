"""Core types for max-stable dependence.

An extreme-value (max-stable) copula in dimension D is determined by its
dependence function A on the unit simplex through

    C(u_1, ..., u_D) = exp(-r * A(v_1, ..., v_D)),
    r = -sum_d log(u_d),  v_d = -log(u_d) / r.

A valid dependence function is exactly one that can be written as

    A(v) = sum_k m_k * max_d(v_d * s_kd)

for atoms s_k on the simplex with nonnegative masses m_k satisfying the
moment constraints sum_k m_k * s_kd = 1 for every coordinate d.  A is then
convex and bounded by max_d(v_d) <= A(v) <= 1, with A = 1 at every vertex.

This module provides the simplex/hypercube validators, parametric closed
forms (logistic, bivariate Husler-Reiss), discrete spectral measures, grid
estimates, and the copula evaluator built on top of them.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import InitVar, dataclass, field

import numpy as np
from scipy.special import ndtr

__all__ = [
    "SIMPLEX_SUM_TOL",
    "MOMENT_TOL",
    "as_simplex_point",
    "as_hypercube_point",
    "std_normal_cdf",
    "PickandsFunction",
    "LogisticPickands",
    "HuslerReissPickands",
    "SpectralPickands",
    "GridPickands",
    "DiscreteSpectralMeasure",
    "vertex_measure",
    "comonotone_measure",
    "logistic_pickands",
    "husler_reiss_pickands",
    "spectral_to_pickands",
    "ev_copula_cdf",
    "EVCopula",
    "SimplexGrid",
    "simplex_grid",
]

#: Construction tolerance on |sum(v) - 1| for simplex points; inputs within
#: tolerance are renormalized, anything further off is rejected.
SIMPLEX_SUM_TOL = 1e-9

#: Default tolerance on the per-coordinate moment residual of a discrete
#: spectral measure.
MOMENT_TOL = 1e-6


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def as_simplex_point(v, tol: float = SIMPLEX_SUM_TOL) -> np.ndarray:
    """Validate and renormalize a point of the unit simplex.

    Requires D >= 2, all coordinates nonnegative and |sum - 1| <= tol.
    Returns a fresh array with coordinates rescaled to sum to 1 exactly
    (up to rounding).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError(f"simplex point must be a vector of length >= 2, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("simplex point has non-finite coordinates")
    if np.any(v < 0):
        raise ValueError(f"simplex point has negative coordinates: {v}")
    total = v.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"simplex coordinates sum to {total}, more than {tol} away from 1")
    return v / total


def as_hypercube_point(u) -> np.ndarray:
    """Validate a point of the unit hypercube [0, 1]^D."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 1:
        raise ValueError(f"hypercube point must be a vector, got shape {u.shape}")
    if not np.all(np.isfinite(u)) or np.any(u < 0) or np.any(u > 1):
        raise ValueError(f"hypercube point outside [0, 1]^D: {u}")
    return np.array(u, dtype=float)


def std_normal_cdf(x):
    """Standard normal CDF Phi.

    Evaluated as Phi(x) = erfc(-x / sqrt(2)) / 2 through scipy's ``ndtr``,
    whose rational erf/erfc kernels are accurate to < 1e-15 absolute error,
    well inside the 1e-12 budget required here (checked against mpmath in
    the test suite).
    """
    return ndtr(x)


# ---------------------------------------------------------------------------
# Dependence functions
# ---------------------------------------------------------------------------


class PickandsFunction(ABC):
    """A dependence function on the unit simplex.

    Subclasses implement ``at`` on a batch of simplex points; ``__call__``
    evaluates a single (validated) point.
    """

    dimension: int

    @abstractmethod
    def at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate on an (m, D) array of simplex points (not validated)."""

    def __call__(self, v) -> float:
        v = as_simplex_point(v)
        if v.size != self.dimension:
            raise ValueError(f"point has dimension {v.size}, expected {self.dimension}")
        return float(self.at(v[None, :])[0])


def logistic_pickands(theta: float, v) -> float:
    """Logistic (Gumbel) dependence function A(v) = (sum_d v_d^theta)^(1/theta).

    theta = 1 is independence (A identically 1); theta -> infinity approaches
    complete dependence max_d(v_d).
    """
    if theta < 1:
        raise ValueError(f"logistic dependence requires theta >= 1, got {theta}")
    v = as_simplex_point(v)
    return float(_logistic_at(theta, v[None, :])[0])


def _logistic_at(theta: float, points: np.ndarray) -> np.ndarray:
    if theta == 1:
        return points.sum(axis=1)
    return np.power(np.power(points, theta).sum(axis=1), 1.0 / theta)


class LogisticPickands(PickandsFunction):
    """Symmetric logistic family in any dimension."""

    def __init__(self, theta: float, dimension: int = 2):
        if theta < 1:
            raise ValueError(f"logistic dependence requires theta >= 1, got {theta}")
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.theta = float(theta)
        self.dimension = int(dimension)

    def at(self, points: np.ndarray) -> np.ndarray:
        return _logistic_at(self.theta, points)

    def __repr__(self):
        return f"LogisticPickands(theta={self.theta}, dimension={self.dimension})"


def husler_reiss_pickands(lam: float, v) -> float:
    """Bivariate Husler-Reiss dependence function.

    A(v1, v2) = v1 * Phi(lam + log(v1/v2)/(2 lam)) + v2 * Phi(lam + log(v2/v1)/(2 lam)).

    The convention matches the bivariate margins of the Smith model with
    lam = sqrt(h' Sigma^{-1} h) / 2 at lag h: lam -> 0 is complete
    dependence, lam -> infinity independence, and A at the barycenter equals
    Phi(lam).
    """
    if lam <= 0:
        raise ValueError(f"husler_reiss requires lam > 0, got {lam}")
    v = as_simplex_point(v)
    if v.size != 2:
        raise ValueError("husler_reiss dependence is bivariate only")
    return float(_husler_reiss_at(lam, v[None, :])[0])


def _husler_reiss_at(lam: float, points: np.ndarray) -> np.ndarray:
    v1 = points[:, 0]
    v2 = points[:, 1]
    with np.errstate(divide="ignore"):
        z = (np.log(v1) - np.log(v2)) / (2.0 * lam)
    # ndtr maps -inf -> 0 and +inf -> 1, which realizes the face limits
    # A(0, v2) = v2 and A(v1, 0) = v1 without special-casing.
    return v1 * ndtr(lam + z) + v2 * ndtr(lam - z)


class HuslerReissPickands(PickandsFunction):
    """Bivariate Husler-Reiss family."""

    dimension = 2

    def __init__(self, lam: float):
        if lam <= 0:
            raise ValueError(f"husler_reiss requires lam > 0, got {lam}")
        self.lam = float(lam)

    def at(self, points: np.ndarray) -> np.ndarray:
        return _husler_reiss_at(self.lam, points)

    def __repr__(self):
        return f"HuslerReissPickands(lam={self.lam})"


# ---------------------------------------------------------------------------
# Discrete spectral measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteSpectralMeasure:
    """Atoms on the simplex with nonnegative masses.

    A valid measure satisfies sum_k masses_k * atoms_kd = 1 for every
    coordinate d (which forces total mass D).  ``moment_tol`` bounds the
    allowed residual at construction; pass ``None`` to skip the check for
    deliberately approximate measures (e.g. Monte Carlo extractions), whose
    residual is then reported by the producing routine.
    """

    atoms: np.ndarray
    masses: np.ndarray
    moment_tol: InitVar[float | None] = MOMENT_TOL

    def __post_init__(self, moment_tol):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        masses = np.asarray(self.masses, dtype=float).ravel()
        if atoms.shape[0] != masses.size:
            raise ValueError(f"{atoms.shape[0]} atoms but {masses.size} masses")
        if atoms.shape[1] < 2:
            raise ValueError("atoms must live on a simplex of dimension >= 2")
        if not np.all(np.isfinite(atoms)) or np.any(atoms < 0):
            raise ValueError("atoms must be finite and nonnegative")
        sums = atoms.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > SIMPLEX_SUM_TOL):
            raise ValueError("atom coordinates must sum to 1 within tolerance")
        atoms = atoms / sums[:, None]
        if not np.all(np.isfinite(masses)) or np.any(masses < 0):
            raise ValueError("masses must be finite and nonnegative")
        object.__setattr__(self, "atoms", _readonly(atoms))
        object.__setattr__(self, "masses", _readonly(masses))
        if moment_tol is not None:
            residual = self.moment_residual
            if residual > moment_tol:
                raise ValueError(
                    f"moment residual {residual:.3e} exceeds tolerance {moment_tol:.1e}"
                )

    @property
    def dimension(self) -> int:
        return self.atoms.shape[1]

    @property
    def natoms(self) -> int:
        return self.masses.size

    @property
    def moments(self) -> np.ndarray:
        """Per-coordinate first moments sum_k m_k s_kd (ideally all 1)."""
        return self.masses @ self.atoms

    @property
    def moment_residual(self) -> float:
        return float(np.max(np.abs(self.moments - 1.0)))

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())


def vertex_measure(dimension: int) -> DiscreteSpectralMeasure:
    """Unit masses at the vertices: the independence measure (A identically 1)."""
    return DiscreteSpectralMeasure(np.eye(dimension), np.ones(dimension))


def comonotone_measure(dimension: int) -> DiscreteSpectralMeasure:
    """Mass D at the barycenter: complete dependence (A(v) = max_d v_d)."""
    atoms = np.full((1, dimension), 1.0 / dimension)
    return DiscreteSpectralMeasure(atoms, np.array([float(dimension)]))


def spectral_to_pickands(measure: DiscreteSpectralMeasure, v) -> float:
    """Dependence function of a discrete spectral measure at one point.

    A(v) = sum_k m_k * max_d(v_d * s_kd); lies in [max_d v_d, 1] for valid
    measures and equals 1 at every vertex.
    """
    v = as_simplex_point(v)
    if v.size != measure.dimension:
        raise ValueError(f"point has dimension {v.size}, expected {measure.dimension}")
    return float(_spectral_at(measure, v[None, :])[0])


def _spectral_at(measure: DiscreteSpectralMeasure, points: np.ndarray) -> np.ndarray:
    atoms = measure.atoms
    masses = measure.masses
    m = points.shape[0]
    # chunk so the (m, K, D) intermediate stays modest for huge atom clouds
    chunk = max(1, int(2e7) // max(1, atoms.size))
    out = np.empty(m)
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        prod = points[lo:hi, None, :] * atoms[None, :, :]
        out[lo:hi] = prod.max(axis=2) @ masses
    return out


class SpectralPickands(PickandsFunction):
    """Dependence function induced by a discrete spectral measure."""

    def __init__(self, measure: DiscreteSpectralMeasure):
        self.measure = measure
        self.dimension = measure.dimension

    def at(self, points: np.ndarray) -> np.ndarray:
        return _spectral_at(self.measure, points)

    def __repr__(self):
        return f"SpectralPickands({self.measure.natoms} atoms, dimension={self.dimension})"


class GridPickands(PickandsFunction):
    """Dependence function tabulated on a simplex grid.

    Bivariate grids are interpolated piecewise-linearly in the first
    coordinate; for D >= 3 evaluation falls back to the nearest grid point
    (the resolution is carried by the grid itself).  Grid estimates may
    violate the [max(v), 1] band before projection; ``bounds_violation``
    reports by how much.
    """

    def __init__(self, grid: np.ndarray, values: np.ndarray):
        grid = np.atleast_2d(np.asarray(grid, dtype=float))
        values = np.asarray(values, dtype=float).ravel()
        if grid.shape[0] != values.size:
            raise ValueError(f"{grid.shape[0]} grid points but {values.size} values")
        if grid.shape[0] == 0:
            raise ValueError("empty grid")
        self.dimension = grid.shape[1]
        if self.dimension == 2:
            order = np.argsort(grid[:, 0], kind="stable")
            grid = grid[order]
            values = values[order]
        self.grid = _readonly(grid)
        self.values = _readonly(values)

    def at(self, points: np.ndarray) -> np.ndarray:
        if self.dimension == 2:
            return np.interp(points[:, 0], self.grid[:, 0], self.values)
        d2 = ((points[:, None, :] - self.grid[None, :, :]) ** 2).sum(axis=2)
        return self.values[np.argmin(d2, axis=1)]

    def bounds_violation(self) -> float:
        """Largest excursion of the tabulated values outside [max(v), 1]."""
        lower = self.grid.max(axis=1)
        over = np.maximum(self.values - 1.0, 0.0)
        under = np.maximum(lower - self.values, 0.0)
        return float(np.max(np.maximum(over, under)))


# ---------------------------------------------------------------------------
# Copula evaluation
# ---------------------------------------------------------------------------


def ev_copula_cdf(A: PickandsFunction, u) -> float | np.ndarray:
    """Extreme-value copula C(u) = exp(-r A(v)) for a dependence function A.

    r = -sum_d log(u_d) and v = -log(u)/r.  By continuity C = 1 when all
    u_d = 1 (r = 0), and C = 0 whenever some u_d = 0 (A is not evaluated).
    Accepts a single point (D,) or a batch (m, D).
    """
    U = np.asarray(u, dtype=float)
    single = U.ndim == 1
    U = np.atleast_2d(U)
    if U.shape[1] != A.dimension:
        raise ValueError(f"points have dimension {U.shape[1]}, expected {A.dimension}")
    if not np.all(np.isfinite(U)) or np.any(U < 0) or np.any(U > 1):
        raise ValueError("copula arguments must lie in [0, 1]")
    out = np.zeros(U.shape[0])
    zero = (U == 0.0).any(axis=1)
    with np.errstate(divide="ignore"):
        logs = -np.log(U)
    r = np.where(zero, np.inf, logs.sum(axis=1))
    unit = ~zero & (r == 0.0)
    out[unit] = 1.0
    interior = ~zero & (r > 0.0)
    if np.any(interior):
        v = logs[interior] / r[interior, None]
        out[interior] = np.exp(-r[interior] * A.at(v))
    return float(out[0]) if single else out


@dataclass(frozen=True)
class EVCopula:
    """Extreme-value copula carrying its dependence function."""

    A: PickandsFunction

    @property
    def dimension(self) -> int:
        return self.A.dimension

    def cdf(self, u) -> float | np.ndarray:
        return ev_copula_cdf(self.A, u)


# ---------------------------------------------------------------------------
# Simplex grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimplexGrid:
    """Regular grid {j/k : sum(j) = k} on the simplex, lexicographic order."""

    dimension: int
    resolution: int
    points: np.ndarray = field(repr=False)

    @property
    def npoints(self) -> int:
        return self.points.shape[0]


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for j in range(total + 1):
        for rest in _compositions(total - j, parts - 1):
            yield (j, *rest)


def simplex_grid(dimension: int, resolution: int) -> SimplexGrid:
    """Enumerate the regular simplex grid of the given resolution.

    Contains binomial(k + D - 1, D - 1) points, including all D vertices.
    """
    if dimension < 2:
        raise ValueError(f"dimension must be >= 2, got {dimension}")
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    pts = np.array(list(_compositions(resolution, dimension)), dtype=float) / resolution
    assert pts.shape[0] == math.comb(resolution + dimension - 1, dimension - 1)
    return SimplexGrid(dimension=dimension, resolution=resolution, points=_readonly(pts))
