"""Tests of max-stability and parametric goodness of fit.

All statistics are rank-based, so strictly increasing marginal transforms
leave every statistic and (seed fixed) every p-value unchanged.  Resampled
p-values use the (1 + #{replicate >= observed}) / (B + 1) convention and
per-replicate RNG streams keyed by (seed, replicate index), so reports are
identical under any degree of parallelism.

Three routes to the max-stability null are implemented:

* ``kendall_moment_test``: for a bivariate extreme-value copula the
  Kendall distribution of W = C(U1, U2) is K(w) = w - (1 - tau) w log w.
  Its density is K'(w) = tau - (1 - tau) log w, so

      E[W]   = integral w K'(w) dw   = tau/2 + (1 - tau)/4 = (1 + tau)/4,
      E[W^2] = integral w^2 K'(w) dw = tau/3 + (1 - tau)/9 = (1 + 2 tau)/9,

  and tau cancels from -1 + 8 E[W] - 9 E[W^2] = -1 + 2(1 + tau)
  - (1 + 2 tau) = 0: a linear moment relation every max-stable bivariate
  law must satisfy, whatever its strength of dependence.  The plug-in
  combination is studentized by its jackknife standard deviation and
  referred to the standard normal.
* ``cvm_maxstability_test``: Cramer-von Mises distances between C_n(u) and
  C_n^m(u^{1/m}) summed over an m-set, with multiplier resampling of the
  limiting process (empirical-copula partial derivatives by central finite
  differences, bandwidth 1/sqrt(n), clamped at the cube boundary).
* ``estimator_comparison_test``: distance between the empirical copula and
  the EV copula of the corrected, projected dependence-function estimate;
  the projected spectral measure doubles as an exactly simulable null
  model for the bootstrap.

``gof_parametric_test`` compares the corrected CFG surface against a
fitted parametric family, with a parametric bootstrap for the p-value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._util import SeedLike, parallel_map, rng_stream
from .core import (
    DiscreteSpectralMeasure,
    SpectralPickands,
    ev_copula_cdf,
    simplex_grid,
    std_normal_cdf,
)
from .empirical import Dataset, PseudoObservations, kendall_pseudo, pseudo_observations
from .estimators import estimate_surface
from .projection import (
    SpectralProjector,
    fit_parametric_min_distance,
    parametric_pickands,
)
from .simulate import sample_logistic_ev, sample_spectral_ev

__all__ = [
    "TestReport",
    "kendall_moment_test",
    "cvm_maxstability_test",
    "estimator_comparison_test",
    "gof_parametric_test",
]


@dataclass(frozen=True)
class TestReport:
    """Named statistic with its resampled (or asymptotic) p-value."""

    __test__ = False  # stop pytest from collecting this as a test class

    name: str
    statistic: float
    p_value: float
    replicates: int
    seed: SeedLike | None
    details: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not np.isfinite(self.statistic):
            raise ValueError("statistic must be finite")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")
        if self.replicates < 0:
            raise ValueError("replicate count must be >= 0")


def _as_dataset(data) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=float))


def _resampled_p(replicates: np.ndarray, observed: float) -> float:
    return float((1 + np.sum(replicates >= observed)) / (replicates.size + 1))


# ---------------------------------------------------------------------------
# Kendall moment test
# ---------------------------------------------------------------------------


def kendall_moment_test(data) -> TestReport:
    """Max-stability test from the first two Kendall moments (bivariate).

    The statistic is sqrt(n) * (-1 + 8 mean(W) - 9 mean(W^2)) / sigma_hat
    with sigma_hat the jackknife standard deviation of the plug-in moment
    combination; the p-value is two-sided standard normal.
    """
    ds = _as_dataset(data)
    if ds.dim != 2:
        raise ValueError("kendall_moment_test is bivariate only")
    n = ds.n
    warns = []
    if n < 20:
        warns.append(f"n = {n} is small; normal approximation may be poor (n >= 20 recommended)")
    ties = sum(n - np.unique(col).size for col in ds.values.T)
    if ties:
        warns.append(f"{ties} tied entries resolved by midranks")

    w = kendall_pseudo(ds)
    theta_hat = -1.0 + 8.0 * w.mean() - 9.0 * (w**2).mean()

    # leave-one-out recomputation in closed form from the dominance matrix
    y1, y2 = ds.values[:, 0], ds.values[:, 1]
    dom = ((y1[:, None] <= y1[None, :]) & (y2[:, None] <= y2[None, :])).astype(float)
    c = dom.sum(axis=0)  # c_i = #{t : Y_t <= Y_i}
    row = dom.sum(axis=1)  # row_i = #{t : Y_i <= Y_t}
    s = dom @ c  # s_i = sum_t c_t * 1{Y_i <= Y_t}
    c_tot = c.sum()
    q_tot = (c**2).sum()
    sum1 = (c_tot - c) - (row - 1.0)
    sum2 = (q_tot - c**2) - 2.0 * (s - c) + (row - 1.0)
    m = n - 1
    loo = -1.0 + 8.0 * sum1 / m**2 - 9.0 * sum2 / m**3
    sigma = math.sqrt((n - 1) * np.sum((loo - loo.mean()) ** 2))
    if sigma == 0.0:
        raise ValueError(
            "jackknife variance is zero (degenerate data); "
            f"moment combination {theta_hat:.6g} cannot be studentized"
        )
    stat = math.sqrt(n) * theta_hat / sigma
    p = 2.0 * (1.0 - std_normal_cdf(abs(stat)))
    return TestReport(
        name="kendall_moment",
        statistic=float(stat),
        p_value=float(p),
        replicates=0,
        seed=None,
        details={
            "moment_combination": float(theta_hat),
            "mean_w": float(w.mean()),
            "mean_w2": float((w**2).mean()),
            "jackknife_sd": float(sigma),
        },
        warnings=tuple(warns),
    )


# ---------------------------------------------------------------------------
# Multiplier machinery for the empirical copula process
# ---------------------------------------------------------------------------


def _cn(uhat: np.ndarray, points: np.ndarray) -> np.ndarray:
    return np.all(uhat[:, None, :] <= points[None, :, :], axis=2).mean(axis=0)


def _partial_derivatives(uhat: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Central finite-difference estimates of the copula partials, (D, m).

    Bandwidth 1/sqrt(n); evaluation points are clamped into [0, 1] and the
    estimates clipped into [0, 1] (copula partials lie there).
    """
    n, dim = uhat.shape
    h = 1.0 / math.sqrt(n)
    out = np.empty((dim, points.shape[0]))
    for d in range(dim):
        up = points.copy()
        down = points.copy()
        up[:, d] = np.minimum(points[:, d] + h, 1.0)
        down[:, d] = np.maximum(points[:, d] - h, 0.0)
        out[d] = (_cn(uhat, up) - _cn(uhat, down)) / (2.0 * h)
    return np.clip(out, 0.0, 1.0)


class _MultiplierEngine:
    """Multiplier replicates of sqrt(n)(C_n - C) at arbitrary point sets."""

    def __init__(self, pobs: PseudoObservations, n_boot: int, seed: SeedLike):
        if pobs.scaling != "over_n":
            raise ValueError("multiplier engine requires over_n pseudo-observations")
        self.uhat = pobs.uhat
        self.n = pobs.n
        self.dim = pobs.dim
        # replicate b uses stream (seed, b)
        self.xi = np.empty((n_boot, self.n))
        for b in range(n_boot):
            self.xi[b] = rng_stream(seed, b).standard_normal(self.n)
        self.xi_sum = self.xi.sum(axis=1)

    def copula_process(self, points: np.ndarray) -> np.ndarray:
        """(B, m) multiplier replicates of the empirical copula process."""
        uhat = self.uhat
        sqn = math.sqrt(self.n)
        ind = np.all(uhat[:, None, :] <= points[None, :, :], axis=2).astype(float)
        cn = ind.mean(axis=0)
        alpha = (self.xi @ ind - np.outer(self.xi_sum, cn)) / sqn
        deriv = _partial_derivatives(uhat, points)
        out = alpha
        for d in range(self.dim):
            ind_d = (uhat[:, d][:, None] <= points[:, d][None, :]).astype(float)
            g_d = ind_d.mean(axis=0)
            alpha_d = (self.xi @ ind_d - np.outer(self.xi_sum, g_d)) / sqn
            out = out - deriv[d][None, :] * alpha_d
        return out


def cvm_maxstability_test(
    data,
    m_set: tuple[int, ...] = (2, 3, 4, 5),
    n_boot: int = 500,
    seed: SeedLike = 0,
) -> TestReport:
    """Cramer-von Mises max-stability test via the copula scaling relation.

    Per aggregation level m the statistic is
    sum_i (C_n(Uhat_i) - C_n^m(Uhat_i^{1/m}))^2; levels are summed.  The
    null distribution is approximated by multiplier resampling of the
    delta-method linearization
    D(u) = C(u)-process - m C_n(u^{1/m})^{m-1} * C(u^{1/m})-process.
    """
    ds = _as_dataset(data)
    if n_boot < 1:
        raise ValueError(f"need n_boot >= 1, got {n_boot}")
    m_set = tuple(int(m) for m in m_set)
    if any(m < 2 for m in m_set) or not m_set:
        raise ValueError("m_set must contain integers >= 2")
    pobs = pseudo_observations(ds, "over_n")
    warns = []
    if ds.n < 50:
        warns.append(f"n = {ds.n} is small (n >= 50 recommended)")
    if pobs.has_ties:
        warns.append(f"{pobs.ties} tied entries resolved by midranks")
    uhat = pobs.uhat
    n = ds.n

    engine = _MultiplierEngine(pobs, n_boot, seed)
    base_cn = _cn(uhat, uhat)
    base_proc = engine.copula_process(uhat)

    per_m_stats = {}
    reps = np.zeros(n_boot)
    total = 0.0
    for m in m_set:
        roots = uhat ** (1.0 / m)
        cn_m = _cn(uhat, roots)
        stat_m = float(np.sum((base_cn - cn_m**m) ** 2))
        per_m_stats[m] = stat_m
        total += stat_m
        proc_m = engine.copula_process(roots)
        linearized = base_proc - m * (cn_m ** (m - 1))[None, :] * proc_m
        reps += (linearized**2).sum(axis=1) / n
    p = _resampled_p(reps, total)
    return TestReport(
        name="cvm_maxstability",
        statistic=total,
        p_value=p,
        replicates=n_boot,
        seed=seed,
        details={"per_m": {str(m): per_m_stats[m] for m in m_set}, "m_set": list(m_set)},
        warnings=tuple(warns),
    )


# ---------------------------------------------------------------------------
# Estimator-based comparison test
# ---------------------------------------------------------------------------


def _comparison_statistic(
    values: np.ndarray, resolution: int, method: str, projector: SpectralProjector
) -> float:
    """Full pipeline: ranks -> corrected surface -> projection -> CvM distance."""
    pobs_n = pseudo_observations(values, "over_n")
    pobs_p = pseudo_observations(values, "over_n_plus_1")
    pilot = estimate_surface(pobs_p, resolution, method=method, corrected=True)
    result = projector.project(pilot.values)
    fitted = ev_copula_cdf(SpectralPickands(result.measure), pobs_n.uhat)
    empirical = _cn(pobs_n.uhat, pobs_n.uhat)
    return float(np.sum((empirical - fitted) ** 2))


def estimator_comparison_test(
    data,
    method: str = "cfg",
    n_boot: int = 500,
    seed: SeedLike = 0,
    resolution: int | None = None,
    n_jobs: int | None = None,
) -> TestReport:
    """Max-stability test comparing C_n with the EV copula of the
    corrected, validity-projected dependence-function estimate.

    The projected spectral measure is simulated exactly to bootstrap the
    null: each replicate resamples a dataset of the same size and reruns
    the full estimate-project-compare pipeline.
    """
    ds = _as_dataset(data)
    if n_boot < 1:
        raise ValueError(f"need n_boot >= 1, got {n_boot}")
    if resolution is None:
        resolution = 50 if ds.dim == 2 else 20
    warns = []
    if ds.n < 50:
        warns.append(f"n = {ds.n} is small (n >= 50 recommended)")
    pobs_p = pseudo_observations(ds, "over_n_plus_1")
    if pobs_p.has_ties:
        warns.append(f"{pobs_p.ties} tied entries resolved by midranks")

    grid = simplex_grid(ds.dim, resolution)
    projector = SpectralProjector(grid.points, grid)
    pilot = estimate_surface(pobs_p, resolution, method=method, corrected=True)
    null_fit = projector.project(pilot.values)
    null_measure = null_fit.measure
    pobs_n = pseudo_observations(ds, "over_n")
    fitted = ev_copula_cdf(SpectralPickands(null_measure), pobs_n.uhat)
    observed = float(np.sum((_cn(pobs_n.uhat, pobs_n.uhat) - fitted) ** 2))

    n = ds.n

    def one_replicate(b: int) -> float:
        sample = sample_spectral_ev(null_measure, n, seed=_combine(seed, b))
        return _comparison_statistic(sample, resolution, method, projector)

    reps = np.asarray(parallel_map(one_replicate, range(n_boot), n_jobs))
    p = _resampled_p(reps, observed)
    return TestReport(
        name="estimator_comparison",
        statistic=observed,
        p_value=p,
        replicates=n_boot,
        seed=seed,
        details={
            "method": method,
            "resolution": resolution,
            "projection_objective": null_fit.objective,
            "projection_residual": null_fit.constraint_residual,
        },
        warnings=tuple(warns),
    )


def _combine(seed: SeedLike, index: int) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed), int(index))
    return (*[int(s) for s in seed], int(index))


# ---------------------------------------------------------------------------
# Parametric goodness of fit
# ---------------------------------------------------------------------------


def _hr_null_measure(lam: float, resolution: int = 200) -> DiscreteSpectralMeasure:
    """Discrete spectral measure approximating the Husler-Reiss model.

    The exact dependence surface is projected onto atoms of the given grid
    resolution; the result is an exactly simulable stand-in for the fitted
    model (sup error decays with the grid).
    """
    grid = simplex_grid(2, resolution)
    values = parametric_pickands("husler_reiss", lam, 2).at(grid.points)
    projector = SpectralProjector(grid.points, grid)
    return projector.project(values).measure


def gof_parametric_test(
    data,
    family: str,
    n_boot: int = 500,
    seed: SeedLike = 0,
    resolution: int = 50,
    n_jobs: int | None = None,
) -> TestReport:
    """Goodness-of-fit test of a parametric dependence-function family.

    Fits the family to the corrected CFG surface by minimum distance; the
    statistic is the uniform-grid mean of squared deviations.  The p-value
    comes from a parametric bootstrap: resample from the fitted model
    (exactly for logistic; through a resolution-200 spectral discretization
    for husler_reiss), refit and recompute each time.
    """
    ds = _as_dataset(data)
    if n_boot < 1:
        raise ValueError(f"need n_boot >= 1, got {n_boot}")
    if family == "husler_reiss" and ds.dim != 2:
        raise ValueError("husler_reiss family is bivariate only")
    if family not in ("logistic", "husler_reiss"):
        raise ValueError(f"unsupported family {family!r}")
    warns = []
    pobs_p = pseudo_observations(ds, "over_n_plus_1")
    if pobs_p.has_ties:
        warns.append(f"{pobs_p.ties} tied entries resolved by midranks")

    pilot = estimate_surface(pobs_p, resolution, method="cfg", corrected=True)
    fit = fit_parametric_min_distance(pilot, family)
    if fit.at_bound:
        warns.append(f"fitted {family} parameter {fit.parameter:g} sits on a bound")
    observed = fit.objective

    n, dim = ds.n, ds.dim
    if family == "logistic":
        def draw(b: int) -> np.ndarray:
            return sample_logistic_ev(n, dim, fit.parameter, seed=_combine(seed, b))
    else:
        null_measure = _hr_null_measure(fit.parameter)

        def draw(b: int) -> np.ndarray:
            return sample_spectral_ev(null_measure, n, seed=_combine(seed, b))

    def one_replicate(b: int) -> float:
        sample = draw(b)
        pobs_b = pseudo_observations(sample, "over_n_plus_1")
        pilot_b = estimate_surface(pobs_b, resolution, method="cfg", corrected=True)
        return fit_parametric_min_distance(pilot_b, family).objective

    reps = np.asarray(parallel_map(one_replicate, range(n_boot), n_jobs))
    p = _resampled_p(reps, observed)
    return TestReport(
        name="gof_parametric",
        statistic=observed,
        p_value=p,
        replicates=n_boot,
        seed=seed,
        details={
            "family": family,
            "parameter": fit.parameter,
            "at_bound": fit.at_bound,
            "resolution": resolution,
        },
        warnings=tuple(warns),
    )
