"""Simulation of max-stable fields and extreme-value copula samples.

Fields are built from the Poisson spectral construction

    Z(x) = max_j S_j * max{0, W_j(x)},

with S_j = 1/Gamma_j for a unit-rate Poisson arrival sequence Gamma_j and
iid spectral processes W_j normalized so E[max{0, W(x)}] = 1, which makes
every margin unit-Frechet.  Two spectral families are implemented:

* schlather: W(x) = sqrt(2*pi) * max{0, eps(x)} with eps a standard
  Gaussian vector over the sites.  Gaussians are unbounded, so the
  stopping rule truncates at a configurable standard-normal bound B
  (default 5); the per-point error probability is <= D * (1 - Phi(B)).
* smith: W(x) = c * phi_Sigma(x - P) with P uniform on the padded site
  bounding box and c the window volume, so E[W(x)] = 1 up to the kernel
  mass outside the pad.  The kernel maximum gives an exact stopping bound.

A degenerate constant spectrum (W identically 1, complete dependence) is
included for exact checks.

Copula-scale samplers: the logistic family via a positive-stable mixture
and exact sampling from any discrete spectral measure via

    Z_d = max_k s_kd * m_k / E_k,   E_k iid unit exponential,

whose law is exactly the extreme-value distribution of the measure.

All randomness flows through numbered streams: realization i of a run
seeded with s uses stream (s, i), so outputs are bitwise reproducible for
any degree of parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import SeedLike, rng_stream
from .core import DiscreteSpectralMeasure, as_simplex_point

__all__ = [
    "SiteLayout",
    "SchlatherConfig",
    "SmithConfig",
    "ConstantConfig",
    "FieldSample",
    "SimulationError",
    "simulate_field",
    "positive_stable",
    "sample_logistic_ev",
    "sample_spectral_ev",
    "monte_carlo_pickands",
    "SpectralRecovery",
    "empirical_spectral_measure",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)

#: eigenvalues below this are treated as exactly zero when factoring
#: near-singular correlation matrices (e.g. correlation identically 1)
_EIG_CLIP = 1e-12

#: hard cap on Poisson points per realization before giving up
_POINT_CAP = 1_000_000

_CHUNK = 64


class SimulationError(RuntimeError):
    """Simulation failed to terminate or was configured degenerately."""


@dataclass(frozen=True)
class SiteLayout:
    """D distinct sites in R^p, p in {1, 2}."""

    coordinates: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coordinates, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise ValueError(f"coordinates must be a (D, p) array, got shape {coords.shape}")
        if coords.shape[1] not in (1, 2):
            raise ValueError(f"spatial dimension must be 1 or 2, got {coords.shape[1]}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        for i in range(coords.shape[0]):
            for j in range(i + 1, coords.shape[0]):
                if np.all(coords[i] == coords[j]):
                    raise ValueError(f"sites {i} and {j} coincide")
        coords = np.array(coords)
        coords.setflags(write=False)
        object.__setattr__(self, "coordinates", coords)

    @property
    def nsites(self) -> int:
        return self.coordinates.shape[0]

    @property
    def space_dim(self) -> int:
        return self.coordinates.shape[1]

    def distances(self) -> np.ndarray:
        diff = self.coordinates[:, None, :] - self.coordinates[None, :, :]
        return np.sqrt((diff**2).sum(axis=2))


@dataclass(frozen=True)
class SchlatherConfig:
    """Gaussian spectral process with the given correlation kernel.

    ``corr_range`` may be ``inf`` for correlation identically 1 (a single
    effective site).  ``truncation`` is the standard-normal bound B used by
    the stopping rule.
    """

    corr_range: float
    correlation: str = "exponential"
    truncation: float = 5.0

    def __post_init__(self):
        if not self.corr_range > 0:
            raise ValueError(f"corr_range must be > 0, got {self.corr_range}")
        if self.correlation not in ("exponential", "gaussian"):
            raise ValueError(f"unknown correlation kind {self.correlation!r}")
        if not self.truncation > 0:
            raise ValueError(f"truncation must be > 0, got {self.truncation}")

    def correlation_at(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        scaled = np.where(np.isinf(self.corr_range), 0.0, h / self.corr_range)
        if self.correlation == "exponential":
            return np.exp(-scaled)
        return np.exp(-(scaled**2))


@dataclass(frozen=True)
class SmithConfig:
    """Gaussian density kernel moved by a uniform point on a padded window.

    ``padding`` is in multiples of sqrt(largest eigenvalue of the
    covariance); kernel mass outside the pad is the documented bias.
    """

    covariance: np.ndarray
    padding: float = 5.0

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape[0] != cov.shape[1] or cov.shape[0] not in (1, 2):
            raise ValueError(f"covariance must be 1x1 or 2x2, got shape {cov.shape}")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        eigvals = np.linalg.eigvalsh(cov)
        if np.any(eigvals <= 0):
            raise ValueError("covariance must be positive definite")
        if not self.padding > 0:
            raise ValueError(f"padding must be > 0, got {self.padding}")
        cov = np.array(cov)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class ConstantConfig:
    """Degenerate spectrum W identically 1: complete dependence."""


SpectralProcessConfig = SchlatherConfig | SmithConfig | ConstantConfig


@dataclass(frozen=True)
class FieldSample:
    """n independent field realizations on unit-Frechet margins."""

    values: np.ndarray
    model: str
    seed: SeedLike
    sites: SiteLayout | None = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite and strictly positive")
        values = np.array(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# Spectral-process drawing
# ---------------------------------------------------------------------------


def _symmetric_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric square root with tiny eigenvalues clipped to zero.

    Keeps degenerate correlation matrices (correlation identically 1)
    usable: the factor then reproduces exactly identical coordinates.
    """
    eigvals, eigvecs = np.linalg.eigh(matrix)
    eigvals = np.where(eigvals < _EIG_CLIP, 0.0, eigvals)
    if np.any(np.diag(matrix) > 0) and np.all(eigvals == 0):
        raise ValueError("correlation matrix is numerically zero")
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


class _SpectralSampler:
    """Draws of the nonnegative spectral vector (W+(x_1), ..., W+(x_D))."""

    def __init__(self, config: SpectralProcessConfig, sites: SiteLayout):
        self.config = config
        self.sites = sites
        d = sites.nsites
        if isinstance(config, SchlatherConfig):
            corr = config.correlation_at(sites.distances())
            self.factor = _symmetric_sqrt(corr)
            self.bound = _SQRT_2PI * config.truncation
            self.exact_bound = False
            self.model = "schlather"
        elif isinstance(config, SmithConfig):
            cov = config.covariance
            p = cov.shape[0]
            if sites.space_dim != p:
                raise ValueError(
                    f"covariance is {p}-dimensional but sites live in R^{sites.space_dim}"
                )
            eigmax = float(np.linalg.eigvalsh(cov).max())
            pad = config.padding * math.sqrt(eigmax)
            coords = sites.coordinates
            self.low = coords.min(axis=0) - pad
            self.high = coords.max(axis=0) + pad
            self.volume = float(np.prod(self.high - self.low))
            self.prec = np.linalg.inv(cov)
            self.norm = 1.0 / ((2.0 * math.pi) ** (p / 2.0) * math.sqrt(np.linalg.det(cov)))
            self.bound = self.volume * self.norm
            self.exact_bound = True
            self.model = "smith"
        elif isinstance(config, ConstantConfig):
            self.bound = 1.0
            self.exact_bound = True
            self.model = "constant"
        else:
            raise TypeError(f"unknown config type {type(config).__name__}")
        self.dim = d

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if isinstance(self.config, SchlatherConfig):
            eps = rng.standard_normal((count, self.dim)) @ self.factor.T
            return _SQRT_2PI * np.maximum(0.0, eps)
        if isinstance(self.config, SmithConfig):
            pts = rng.uniform(self.low, self.high, (count, self.sites.space_dim))
            diff = self.sites.coordinates[None, :, :] - pts[:, None, :]
            quad = np.einsum("cdp,pq,cdq->cd", diff, self.prec, diff)
            return self.volume * self.norm * np.exp(-0.5 * quad)
        return np.ones((count, self.dim))


def simulate_field(
    config: SpectralProcessConfig, sites: SiteLayout, n: int, seed: SeedLike
) -> FieldSample:
    """Simulate n independent max-stable field realizations at the sites.

    Realization i consumes stream (seed, i); the Poisson sequence for one
    realization stops once S_j * bound falls below the current minimum of
    the field, where bound dominates the spectral vector (exactly for
    smith/constant, up to the truncation probability for schlather).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    sampler = _SpectralSampler(config, sites)
    d = sites.nsites
    out = np.empty((n, d))
    for i in range(n):
        rng = rng_stream(seed, i)
        z = np.zeros(d)
        gamma = 0.0
        npoints = 0
        while True:
            incr = rng.standard_exponential(_CHUNK)
            gammas = gamma + np.cumsum(incr)
            gamma = float(gammas[-1])
            w = sampler.draw(rng, _CHUNK)
            z = np.maximum(z, (w / gammas[:, None]).max(axis=0))
            npoints += _CHUNK
            if sampler.bound / gamma < z.min():
                break
            if npoints >= _POINT_CAP:
                raise SimulationError(
                    f"realization {i} did not terminate after {npoints} points "
                    f"(bound {sampler.bound:.3g}, current min {z.min():.3g}); "
                    "increase the truncation bound or check the configuration"
                )
        out[i] = z
    return FieldSample(values=out, model=sampler.model, seed=seed, sites=sites)


# ---------------------------------------------------------------------------
# Copula-scale samplers
# ---------------------------------------------------------------------------


def positive_stable(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Positive stable variables with Laplace transform exp(-t^alpha).

    Chambers-Mallows-Stuck transform: with T uniform on (0, pi) and E a
    unit exponential,

        V = [sin(alpha T) / sin(T)^(1/alpha)]
            * [sin((1 - alpha) T) / E]^((1 - alpha)/alpha).

    Moments of log V (checked in tests): E[log V] = gamma*(1/alpha - 1),
    Var[log V] = (pi^2/6)*(1/alpha^2 - 1).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    t = math.pi * (1.0 - rng.random(size))
    e = rng.standard_exponential(size)
    ratio = (1.0 - alpha) / alpha
    return (
        np.sin(alpha * t)
        / np.sin(t) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * t) / e) ** ratio
    )


def sample_logistic_ev(n: int, dim: int, theta: float, seed: SeedLike) -> np.ndarray:
    """Exact iid sample from the logistic extreme-value copula.

    Rows U satisfy U_d = exp(-(E_d / V)^(1/theta)) with V positive stable
    of index 1/theta and E_d iid unit exponentials; theta = 1
    short-circuits to independent uniforms.
    """
    if theta < 1:
        raise ValueError(f"theta must be >= 1, got {theta}")
    if n < 1 or dim < 2:
        raise ValueError("need n >= 1 and dim >= 2")
    rng = rng_stream(seed)
    if theta == 1:
        return rng.random((n, dim))
    alpha = 1.0 / theta
    v = positive_stable(alpha, n, rng)
    e = rng.standard_exponential((n, dim))
    return np.exp(-np.power(e / v[:, None], alpha))


def sample_spectral_ev(
    measure: DiscreteSpectralMeasure, n: int, seed: SeedLike
) -> np.ndarray:
    """Exact iid sample from the EV copula of a discrete spectral measure.

    Z_d = max_k s_kd m_k / E_k has joint law exp(-sum_k m_k max_d(s_kd/z_d));
    margins are mapped to uniform by U_d = exp(-c_d / Z_d) with c_d the
    measure's d-th moment (1 for valid measures, so slightly off-constraint
    measures still return exactly uniform margins).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    moments = measure.moments
    if np.any(moments <= 0):
        raise ValueError("measure has a coordinate with zero total moment")
    scaled = measure.atoms * measure.masses[:, None]  # (K, D)
    k = measure.natoms
    rng = rng_stream(seed)
    out = np.empty((n, measure.dimension))
    chunk = max(1, int(2e7) // max(1, scaled.size))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        e = rng.standard_exponential((hi - lo, k))
        z = (scaled[None, :, :] / e[:, :, None]).max(axis=1)
        out[lo:hi] = np.exp(-moments / z)
    return out


# ---------------------------------------------------------------------------
# Monte Carlo dependence function and spectral recovery
# ---------------------------------------------------------------------------

_MC_CHUNK = 8192


def monte_carlo_pickands(
    config: SpectralProcessConfig,
    sites: SiteLayout,
    v,
    n_draws: int,
    seed: SeedLike,
) -> tuple[float, float]:
    """Monte Carlo evaluation A(v) = E[max_d v_d W+(x_d)].

    Uses n_draws independent spectral vectors (no Poisson points) and
    returns (estimate, standard error).
    """
    if n_draws < 100:
        raise ValueError(f"need at least 100 draws, got {n_draws}")
    v = as_simplex_point(v)
    if v.size != sites.nsites:
        raise ValueError(f"v has dimension {v.size}, expected {sites.nsites}")
    sampler = _SpectralSampler(config, sites)
    rng = rng_stream(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_draws:
        count = min(_MC_CHUNK, n_draws - done)
        vals = (sampler.draw(rng, count) * v[None, :]).max(axis=1)
        total += float(vals.sum())
        total_sq += float((vals**2).sum())
        done += count
    mean = total / n_draws
    var = max(0.0, (total_sq - n_draws * mean**2) / (n_draws - 1))
    return mean, math.sqrt(var / n_draws)


@dataclass(frozen=True)
class SpectralRecovery:
    """Monte Carlo spectral measure with its moment-residual report."""

    measure: DiscreteSpectralMeasure
    moment_residual: np.ndarray
    moment_se: np.ndarray
    n_draws: int

    @property
    def max_residual(self) -> float:
        return float(np.abs(self.moment_residual).max())


def empirical_spectral_measure(
    config: SpectralProcessConfig,
    sites: SiteLayout,
    n_draws: int,
    seed: SeedLike,
) -> SpectralRecovery:
    """Recover the spectral measure from draws of the spectral process.

    With R = sum_d W+(x_d), draws with R > 0 become atoms W+/R with masses
    R/n_draws.  Moment residuals are O(1/sqrt(n_draws)) and reported, not
    repaired; pass the measure through the projection module to enforce the
    constraints exactly.
    """
    if n_draws < 100:
        raise ValueError(f"need at least 100 draws, got {n_draws}")
    if sites.nsites < 2:
        raise ValueError("spectral recovery needs at least 2 sites")
    sampler = _SpectralSampler(config, sites)
    rng = rng_stream(seed)
    atoms = []
    masses = []
    sums = np.zeros(sites.nsites)
    sq_sums = np.zeros(sites.nsites)
    done = 0
    while done < n_draws:
        count = min(_MC_CHUNK, n_draws - done)
        w = sampler.draw(rng, count)
        sums += w.sum(axis=0)
        sq_sums += (w**2).sum(axis=0)
        r = w.sum(axis=1)
        pos = r > 0
        if np.any(pos):
            atoms.append(w[pos] / r[pos, None])
            masses.append(r[pos] / n_draws)
        done += count
    if not atoms:
        raise SimulationError("all spectral draws were zero; degenerate configuration")
    measure = DiscreteSpectralMeasure(
        np.vstack(atoms), np.concatenate(masses), moment_tol=None
    )
    mean = sums / n_draws
    var = np.maximum(0.0, (sq_sums - n_draws * mean**2) / (n_draws - 1))
    return SpectralRecovery(
        measure=measure,
        moment_residual=mean - 1.0,
        moment_se=np.sqrt(var / n_draws),
        n_draws=n_draws,
    )
