"""Projection of pilot estimates onto valid dependence functions.

The projection minimizes a weighted sum of squared deviations between the
pilot values A_n(v_j) and the dependence function of a discrete spectral
measure supported on a fixed simplex grid:

    minimize   sum_j nu_j (A_n(v_j) - sum_k m_k max_d(v_jd s_kd))^2
    subject to m_k >= 0  and  sum_k m_k s_kd = 1 for every d.

This is a convex QP.  It is solved by active-set non-negative least
squares on an augmented system whose equality-constraint rows are scaled
by a penalty rho (escalated x10 from 1e4, cap 1e10), followed by an exact
equality-constrained polish on the identified support and a KKT
certificate of global optimality.  Atom grids always contain the D
vertices, so vertex masses 1 are always feasible.

Among equally good solutions (distinct measures can induce the same
dependence function) the solver's pivoting is deterministic: ties in the
gradient pick the lowest atom index.  Only projected function values, not
masses, are contractual outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DiscreteSpectralMeasure,
    HuslerReissPickands,
    LogisticPickands,
    PickandsFunction,
    SimplexGrid,
    SpectralPickands,
    simplex_grid,
)
from .estimators import DependenceEstimate

__all__ = [
    "SimplexGrid",
    "simplex_grid",
    "nnls",
    "ProjectionResult",
    "SpectralProjector",
    "project_pickands",
    "ParametricFit",
    "fit_parametric_min_distance",
    "parametric_pickands",
    "FAMILY_BOUNDS",
]


class NumericalError(RuntimeError):
    """Solver failed to reach the contracted accuracy."""


def nnls(A: np.ndarray, b: np.ndarray, max_iter: int | None = None):
    """Lawson-Hanson non-negative least squares.

    Minimizes ||A x - b||_2 over x >= 0 by active-set pivoting (most
    positive gradient enters, ties to the lowest index).  Returns
    ``(x, objectives)`` where ``objectives`` holds ||A x - b||^2 after the
    start and after each outer iteration; the sequence is nonincreasing.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"A has {m} rows but b has {b.size} entries")
    if max_iter is None:
        max_iter = 3 * n + 30
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    grad_tol = 10 * np.finfo(float).eps * max(m, n) * max(np.abs(A).max(), 1.0) * max(
        np.abs(b).max(), 1.0
    )
    resid = b - A @ x
    objectives = [float(resid @ resid)]
    for _ in range(max_iter):
        w = A.T @ resid
        w[passive] = -np.inf
        j = int(np.argmax(w))
        if w[j] <= grad_tol:
            break
        passive[j] = True
        for _ in range(max_iter):
            idx = np.flatnonzero(passive)
            z = np.linalg.lstsq(A[:, idx], b, rcond=None)[0]
            if np.all(z > 0):
                x = np.zeros(n)
                x[idx] = z
                break
            xs = x[idx]
            neg = z <= 0
            with np.errstate(invalid="ignore", divide="ignore"):
                steps = xs[neg] / (xs[neg] - z[neg])
            steps = np.where(np.isfinite(steps), steps, 0.0)
            alpha = float(steps.min())
            xs = xs + alpha * (z - xs)
            drop = xs <= 1e-14 * max(1.0, float(np.abs(xs).max()))
            x = np.zeros(n)
            x[idx] = np.where(drop, 0.0, xs)
            passive[idx[drop]] = False
            if not passive.any():
                break
        resid = b - A @ x
        objectives.append(float(resid @ resid))
    return x, np.asarray(objectives)


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of projecting a pilot estimate onto the valid class."""

    measure: DiscreteSpectralMeasure
    objective: float
    constraint_residual: float
    iterations: int
    clipped: bool
    certified: bool

    def pickands(self) -> SpectralPickands:
        return SpectralPickands(self.measure)


class SpectralProjector:
    """Reusable projector for a fixed (evaluation grid, atom grid) pair.

    Precomputes the design matrix so repeated projections (e.g. inside a
    bootstrap) only pay for the solve.
    """

    #: penalty schedule for the equality-constraint rows
    RHO_START = 1e4
    RHO_CAP = 1e10
    MAX_ESCALATIONS = 5
    CONSTRAINT_TOL = 1e-6

    def __init__(
        self,
        eval_points: np.ndarray,
        atom_grid: SimplexGrid,
        eval_weights: np.ndarray | None = None,
    ):
        eval_points = np.atleast_2d(np.asarray(eval_points, dtype=float))
        if eval_points.shape[0] == 0:
            raise ValueError("empty evaluation grid")
        dim = eval_points.shape[1]
        if atom_grid.dimension != dim:
            raise ValueError(
                f"atom grid dimension {atom_grid.dimension} != pilot dimension {dim}"
            )
        atoms = atom_grid.points
        vertex_rows = np.eye(dim)
        for row in vertex_rows:
            if not np.any(np.all(atoms == row, axis=1)):
                raise ValueError("atom grid must contain all simplex vertices")
        if eval_weights is None:
            weights = np.full(eval_points.shape[0], 1.0 / eval_points.shape[0])
        else:
            weights = np.asarray(eval_weights, dtype=float).ravel()
            if weights.size != eval_points.shape[0]:
                raise ValueError("one weight per evaluation point required")
            if np.any(weights < 0) or weights.sum() <= 0:
                raise ValueError("weights must be nonnegative with positive sum")
            weights = weights / weights.sum()
        self.dim = dim
        self.eval_points = eval_points
        self.atoms = atoms
        self.weights = weights
        # design[j, k] = max_d(v_jd * s_kd)
        self.design = (eval_points[:, None, :] * atoms[None, :, :]).max(axis=2)
        self.constraints = atoms.T.copy()  # (D, K)
        self._sqrtw = np.sqrt(weights)
        self._lower = eval_points.max(axis=1)
        # cached pieces of the exact QP: objective 0.5 m' gram m - rhs' m
        self._gram = 2.0 * self.design.T @ (weights[:, None] * self.design)  # (K, K)
        self._rhs_op = 2.0 * self.design.T * weights[None, :]  # (K, J)

    # -- exact equality-constrained least squares on a support ------------

    def _polish(self, support: np.ndarray, full_rhs: np.ndarray):
        S = self.constraints[:, support]
        p = support.size
        kkt = np.zeros((p + self.dim, p + self.dim))
        kkt[:p, :p] = self._gram[np.ix_(support, support)]
        kkt[:p, p:] = S.T
        kkt[p:, :p] = S
        rhs = np.concatenate([full_rhs[support], np.ones(self.dim)])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        masses = sol[:p]
        lam = sol[p:]
        return masses, lam

    def _kkt_gap(self, support, masses_p, lam, full_rhs):
        grad = self._gram[:, support] @ masses_p - full_rhs + self.constraints.T @ lam
        return grad

    def project(self, values: np.ndarray) -> ProjectionResult:
        """Project pilot values given on the evaluation grid."""
        values = np.asarray(values, dtype=float).ravel()
        if values.size != self.eval_points.shape[0]:
            raise ValueError("one pilot value per evaluation point required")
        target = np.clip(values, self._lower, 1.0)
        clipped = bool(np.any(target != values))

        full_rhs = self._rhs_op @ target  # (K,)
        scale = max(1.0, float(np.abs(full_rhs).max()))
        gtol = 1e-9 * scale
        rho = self.RHO_START
        iterations = 0
        fallback = None
        for _ in range(self.MAX_ESCALATIONS + 1):
            aug = np.vstack([self._sqrtw[:, None] * self.design, rho * self.constraints])
            rhs = np.concatenate([self._sqrtw * target, rho * np.ones(self.dim)])
            masses, objectives = nnls(aug, rhs)
            iterations += len(objectives) - 1
            result = self._refine(masses, full_rhs, gtol)
            if result is not None:
                masses_full, lam, its = result
                iterations += its
                residual = float(np.abs(self.constraints @ masses_full - 1.0).max())
                if residual <= self.CONSTRAINT_TOL:
                    return self._finish(masses_full, target, residual, iterations, clipped, True)
            residual = float(np.abs(self.constraints @ masses - 1.0).max())
            if fallback is None or residual < fallback[1]:
                fallback = (masses, residual)
            if rho >= self.RHO_CAP:
                break
            rho *= 10.0
        masses, residual = fallback
        if residual <= self.CONSTRAINT_TOL:
            return self._finish(masses, target, residual, iterations, clipped, False)
        raise NumericalError(
            f"projection did not reach constraint residual {self.CONSTRAINT_TOL:.0e}; "
            f"best residual {residual:.3e} after penalty cap"
        )

    def _refine(self, masses: np.ndarray, full_rhs: np.ndarray, gtol: float):
        """Exact active-set refinement seeded by the penalty solution.

        Returns (masses, lam, iterations) once the KKT conditions certify a
        global minimum, or None if refinement stalls (caller escalates rho).
        """
        k = self.atoms.shape[0]
        support = np.flatnonzero(masses > 0)
        if support.size == 0:
            # seed with the vertices, which are always feasible
            support = np.array(
                [int(np.argmax(np.all(self.atoms == row, axis=1))) for row in np.eye(self.dim)]
            )
        for it in range(2 * k + 4):
            masses_p, lam = self._polish(support, full_rhs)
            negative = masses_p < -1e-11
            if np.any(negative):
                if support.size - int(negative.sum()) < 1:
                    return None
                support = support[~negative]
                continue
            masses_p = np.maximum(masses_p, 0.0)
            grad = self._kkt_gap(support, masses_p, lam, full_rhs)
            grad[support] = np.inf
            worst = int(np.argmin(grad))
            if grad[worst] >= -gtol:
                masses_full = np.zeros(k)
                masses_full[support] = masses_p
                return masses_full, lam, it + 1
            support = np.sort(np.concatenate([support, [worst]]))
        return None

    def _finish(self, masses, target, residual, iterations, clipped, certified):
        keep = masses > 0
        if not np.any(keep):
            raise NumericalError("projection produced an empty measure")
        measure = DiscreteSpectralMeasure(
            self.atoms[keep], masses[keep], moment_tol=None
        )
        fitted = self.design @ masses
        objective = float(self.weights @ (fitted - target) ** 2)
        return ProjectionResult(
            measure=measure,
            objective=objective,
            constraint_residual=residual,
            iterations=iterations,
            clipped=clipped,
            certified=certified,
        )


def project_pickands(
    pilot: DependenceEstimate,
    atom_grid: SimplexGrid,
    eval_weights: np.ndarray | None = None,
) -> ProjectionResult:
    """Project a pilot estimate onto dependence functions with discrete
    spectral measures on ``atom_grid``.

    The distance is the weighted sum of squared deviations over the pilot's
    own evaluation grid; weights default to uniform (mass 1/J per point) and
    are normalized to sum to one.  Pilot values are clipped into
    [max_d(v_d), 1] beforehand (flagged on the result), which cannot move
    them farther from the feasible class.
    """
    projector = SpectralProjector(pilot.grid, atom_grid, eval_weights)
    return projector.project(pilot.values)


# ---------------------------------------------------------------------------
# Minimum-distance parametric fitting
# ---------------------------------------------------------------------------

FAMILY_BOUNDS = {"logistic": (1.0, 50.0), "husler_reiss": (0.01, 10.0)}

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ParametricFit:
    family: str
    parameter: float
    objective: float
    at_bound: bool


def parametric_pickands(family: str, parameter: float, dimension: int) -> PickandsFunction:
    """Instantiate a parametric dependence function by family name."""
    if family == "logistic":
        return LogisticPickands(parameter, dimension)
    if family == "husler_reiss":
        if dimension != 2:
            raise ValueError("husler_reiss family is bivariate only")
        return HuslerReissPickands(parameter)
    raise ValueError(f"unknown family {family!r}")


def fit_parametric_min_distance(
    pilot: DependenceEstimate,
    family: str,
    bounds: tuple[float, float] | None = None,
    eval_weights: np.ndarray | None = None,
    scan_points: int = 64,
    xtol: float = 1e-6,
) -> ParametricFit:
    """Weighted least-squares parameter fit of a closed-form family.

    The objective (same weighted squared error as the projection, over the
    pilot grid) is scanned on ``scan_points`` equispaced parameters to
    locate the minimum; golden-section search then refines it to absolute
    tolerance ``xtol``.  A fit ending on a bound is flagged.
    """
    if family not in FAMILY_BOUNDS:
        raise ValueError(f"unknown family {family!r}")
    if family == "husler_reiss" and pilot.dim != 2:
        raise ValueError("husler_reiss family is bivariate only")
    lo, hi = bounds if bounds is not None else FAMILY_BOUNDS[family]
    dlo, dhi = FAMILY_BOUNDS[family]
    if not (dlo <= lo < hi <= dhi):
        raise ValueError(f"bounds {(lo, hi)} outside the {family} domain {(dlo, dhi)}")
    if eval_weights is None:
        weights = np.full(pilot.grid.shape[0], 1.0 / pilot.grid.shape[0])
    else:
        weights = np.asarray(eval_weights, dtype=float).ravel()
        weights = weights / weights.sum()
    grid = pilot.grid
    values = pilot.values

    def objective(p: float) -> float:
        fitted = parametric_pickands(family, p, pilot.dim).at(grid)
        return float(weights @ (values - fitted) ** 2)

    scan = np.linspace(lo, hi, scan_points)
    scanned = np.array([objective(p) for p in scan])
    best = int(np.argmin(scanned))
    a = scan[max(best - 1, 0)]
    b = scan[min(best + 1, scan_points - 1)]

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = objective(d)
    param = (a + b) / 2.0
    obj = objective(param)
    at_bound = False
    for bound in (lo, hi):
        if abs(param - bound) <= max(10 * xtol, 1e-5) and objective(bound) <= obj:
            param, obj, at_bound = bound, objective(bound), True
    return ParametricFit(family=family, parameter=float(param), objective=obj, at_bound=at_bound)
