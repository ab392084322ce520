"""Shared fixtures and independent oracles for the test suite.

Oracles here deliberately avoid the library code paths they are checking:
brute-force counting for the empirical copula, exact step-function
integration for the estimator identity, exhaustive subset enumeration for
the projection QP, and a Clayton (non-max-stable) sampler for power runs.
"""

from __future__ import annotations

import itertools

import numpy as np

from maxdep.core import DiscreteSpectralMeasure
from maxdep._util import rng_stream


def clayton_sample(n: int, tau: float, seed) -> np.ndarray:
    """Bivariate Clayton copula sample (not max-stable) with Kendall's tau.

    Marshall-Olkin: V ~ Gamma(1/theta), U_d = (1 + E_d/V)^(-1/theta) with
    theta = 2 tau / (1 - tau).
    """
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    theta = 2.0 * tau / (1.0 - tau)
    rng = rng_stream(seed)
    v = rng.gamma(1.0 / theta, 1.0, n)
    e = rng.standard_exponential((n, 2))
    return (1.0 + e / v[:, None]) ** (-1.0 / theta)


def brute_force_copula(uhat: np.ndarray, u: np.ndarray) -> float:
    """Double-loop empirical copula count, the oracle for empirical_copula."""
    n, dim = uhat.shape
    count = 0
    for i in range(n):
        if all(uhat[i, d] <= u[d] for d in range(dim)):
            count += 1
    return count / n


def copula_curve_integral(uhat: np.ndarray, v: np.ndarray) -> float:
    """Exact integral of C_n(u^{v_1}, ..., u^{v_D}) / u over (0, 1].

    The integrand's numerator is a step function of u: row i enters the
    count at u_i* = max over active d of Uhat_id^(1/v_d).  Integrating the
    constant pieces against du/u gives sums of log-interval lengths; the
    count on each piece is a definitional indicator count evaluated at the
    geometric midpoint.  Independent of the xi-based closed form it
    verifies.
    """
    uhat = np.asarray(uhat, dtype=float)
    v = np.asarray(v, dtype=float)
    active = v > 0
    breaks = np.max(uhat[:, active] ** (1.0 / v[active]), axis=1)
    knots = np.unique(np.concatenate([breaks, [1.0]]))
    if knots.size < 2:
        return 0.0
    lows, highs = knots[:-1], knots[1:]
    mids = np.sqrt(lows * highs)
    points = np.ones((mids.size, v.size))
    points[:, active] = mids[:, None] ** v[active][None, :]
    counts = np.all(uhat[:, None, :] <= points[None, :, :], axis=2).mean(axis=0)
    return float(counts @ (np.log(highs) - np.log(lows)))


def random_spectral_measure(rng: np.random.Generator, dim: int, extra_atoms: int) -> DiscreteSpectralMeasure:
    """Random valid discrete spectral measure.

    Draws Dirichlet atoms with random masses scaled so every coordinate
    moment stays <= 1, then tops the moments up to exactly 1 with vertex
    masses.  Always satisfies the constraints by construction.
    """
    atoms = rng.dirichlet(np.ones(dim), size=extra_atoms)
    masses = rng.random(extra_atoms) + 0.05
    moments = masses @ atoms
    scale = 0.9 * rng.random() / max(moments.max(), 1e-12)
    masses = masses * scale
    vertex_masses = 1.0 - masses @ atoms
    all_atoms = np.vstack([atoms, np.eye(dim)])
    all_masses = np.concatenate([masses, vertex_masses])
    return DiscreteSpectralMeasure(all_atoms, all_masses)


def fixed_spectral_models() -> list[DiscreteSpectralMeasure]:
    """Three hand-checked discrete spectral models used across the suite."""
    three_atom = DiscreteSpectralMeasure(
        np.array([[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]]), np.array([1.0, 0.5, 0.5])
    )
    independence3 = DiscreteSpectralMeasure(np.eye(3), np.ones(3))
    mixed3 = DiscreteSpectralMeasure(
        np.array([[1 / 3, 1 / 3, 1 / 3], [1, 0, 0], [0, 1, 0], [0, 0, 1]]),
        np.array([1.5, 0.5, 0.5, 0.5]),
    )
    return [three_atom, independence3, mixed3]


def enumerate_qp_minimum(
    design: np.ndarray,
    constraints: np.ndarray,
    weights: np.ndarray,
    target: np.ndarray,
) -> float:
    """Global minimum of the projection QP by exhaustive support enumeration.

    For every nonempty atom subset, solves the equality-constrained least
    squares via its KKT system and keeps feasible solutions (masses >= 0,
    constraints satisfied); returns the smallest objective found.
    """
    n_eval, n_atoms = design.shape
    dim = constraints.shape[0]
    best = np.inf
    for size in range(1, n_atoms + 1):
        for subset in itertools.combinations(range(n_atoms), size):
            idx = np.array(subset)
            g = design[:, idx]
            s = constraints[:, idx]
            p = idx.size
            kkt = np.zeros((p + dim, p + dim))
            kkt[:p, :p] = 2.0 * g.T @ (weights[:, None] * g)
            kkt[:p, p:] = s.T
            kkt[p:, :p] = s
            rhs = np.concatenate([2.0 * g.T @ (weights * target), np.ones(dim)])
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            masses = sol[:p]
            if np.any(masses < -1e-9):
                continue
            masses = np.maximum(masses, 0.0)
            if np.max(np.abs(s @ masses - 1.0)) > 1e-7:
                continue
            obj = float(weights @ (g @ masses - target) ** 2)
            best = min(best, obj)
    return best
