"""Rank-based nonparametric inference for max-stable dependence.

Estimation of dependence functions for extreme-value copulas, projection
onto the valid class via discrete spectral measures, simulation of
max-stable fields and copula samples, and hypothesis tests of
max-stability and goodness of fit.  Everything downstream of the rank
transform is invariant under strictly increasing changes of the margins.
"""

__version__ = "0.1.0"

from .core import (
    DiscreteSpectralMeasure,
    EVCopula,
    GridPickands,
    HuslerReissPickands,
    LogisticPickands,
    PickandsFunction,
    SimplexGrid,
    SpectralPickands,
    as_hypercube_point,
    as_simplex_point,
    comonotone_measure,
    ev_copula_cdf,
    husler_reiss_pickands,
    logistic_pickands,
    simplex_grid,
    spectral_to_pickands,
    std_normal_cdf,
    vertex_measure,
)
from .empirical import (
    Dataset,
    PseudoObservations,
    empirical_copula,
    kendall_pseudo,
    pseudo_observations,
)
from .estimators import (
    DependenceEstimate,
    cfg_estimator,
    estimate_surface,
    pickands_estimator,
    weighted_estimator,
    xi_values,
)
from .projection import (
    ParametricFit,
    ProjectionResult,
    SpectralProjector,
    fit_parametric_min_distance,
    nnls,
    parametric_pickands,
    project_pickands,
)
from .simulate import (
    ConstantConfig,
    FieldSample,
    SchlatherConfig,
    SiteLayout,
    SmithConfig,
    SpectralRecovery,
    empirical_spectral_measure,
    monte_carlo_pickands,
    positive_stable,
    sample_logistic_ev,
    sample_spectral_ev,
    simulate_field,
)
from .testing import (
    TestReport,
    cvm_maxstability_test,
    estimator_comparison_test,
    gof_parametric_test,
    kendall_moment_test,
)

__all__ = [
    "__version__",
    # core
    "DiscreteSpectralMeasure",
    "EVCopula",
    "GridPickands",
    "HuslerReissPickands",
    "LogisticPickands",
    "PickandsFunction",
    "SimplexGrid",
    "SpectralPickands",
    "as_hypercube_point",
    "as_simplex_point",
    "comonotone_measure",
    "ev_copula_cdf",
    "husler_reiss_pickands",
    "logistic_pickands",
    "simplex_grid",
    "spectral_to_pickands",
    "std_normal_cdf",
    "vertex_measure",
    # empirical
    "Dataset",
    "PseudoObservations",
    "empirical_copula",
    "kendall_pseudo",
    "pseudo_observations",
    # estimators
    "DependenceEstimate",
    "cfg_estimator",
    "estimate_surface",
    "pickands_estimator",
    "weighted_estimator",
    "xi_values",
    # projection
    "ParametricFit",
    "ProjectionResult",
    "SpectralProjector",
    "fit_parametric_min_distance",
    "nnls",
    "parametric_pickands",
    "project_pickands",
    # simulate
    "ConstantConfig",
    "FieldSample",
    "SchlatherConfig",
    "SiteLayout",
    "SmithConfig",
    "SpectralRecovery",
    "empirical_spectral_measure",
    "monte_carlo_pickands",
    "positive_stable",
    "sample_logistic_ev",
    "sample_spectral_ev",
    "simulate_field",
    # testing
    "TestReport",
    "cvm_maxstability_test",
    "estimator_comparison_test",
    "gof_parametric_test",
    "kendall_moment_test",
]
