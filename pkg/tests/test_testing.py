import math

import numpy as np
import pytest
from scipy.integrate import quad

from maxdep._util import parallel_map
from maxdep.core import LogisticPickands, ev_copula_cdf, simplex_grid
from maxdep.empirical import kendall_pseudo, pseudo_observations
from maxdep.estimators import estimate_surface
from maxdep.projection import SpectralProjector
from maxdep.simulate import sample_logistic_ev, sample_spectral_ev
from maxdep.testing import (
    TestReport,
    _MultiplierEngine,
    cvm_maxstability_test,
    estimator_comparison_test,
    gof_parametric_test,
    kendall_moment_test,
)

from helpers import clayton_sample


# ---------------------------------------------------------------------------
# Kendall moment test
# ---------------------------------------------------------------------------


def _ev_kendall_moment(j: int, tau: float) -> float:
    """E[W^j] by quadrature from K(w) = w - (1 - tau) w log w."""

    def survival(w):
        if w <= 0.0:
            return 1.0
        return 1.0 - (w - (1.0 - tau) * w * math.log(w))

    if j == 1:
        val, _ = quad(survival, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    else:
        val, _ = quad(lambda w: 2.0 * w * survival(w), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    return val


@pytest.mark.parametrize("tau", [0.0, 0.25, 0.5, 0.75])
def test_kendall_moment_identity_by_quadrature(tau):
    ew = _ev_kendall_moment(1, tau)
    ew2 = _ev_kendall_moment(2, tau)
    # closed forms: E[W] = (1 + tau)/4, E[W^2] = (1 + 2 tau)/9
    assert ew == pytest.approx((1.0 + tau) / 4.0, abs=1e-12)
    assert ew2 == pytest.approx((1.0 + 2.0 * tau) / 9.0, abs=1e-12)
    assert abs(-1.0 + 8.0 * ew - 9.0 * ew2) <= 1e-10


def test_kendall_sample_moments_logistic():
    u = sample_logistic_ev(5000, 2, 2.0, seed=31)
    w = kendall_pseudo(u)
    assert w.mean() == pytest.approx(0.375, abs=0.02)
    assert (w**2).mean() == pytest.approx(2.0 / 9.0, abs=0.02)


def test_kendall_moment_test_on_logistic_data():
    report = kendall_moment_test(sample_logistic_ev(1000, 2, 2.0, seed=32))
    assert report.name == "kendall_moment"
    assert report.p_value > 0.05  # typical seed; calibration lives in acceptance
    assert report.replicates == 0
    assert "jackknife_sd" in report.details


def test_kendall_moment_test_rejects_clayton():
    report = kendall_moment_test(clayton_sample(1000, 0.5, seed=33))
    assert report.p_value < 0.05


def test_kendall_moment_test_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        kendall_moment_test(rng.random((50, 3)))
    with pytest.raises(ValueError):
        kendall_moment_test(np.ones((30, 2)))  # degenerate: zero jackknife variance
    report = kendall_moment_test(rng.random((10, 2)))
    assert any("small" in w for w in report.warnings)


def test_kendall_jackknife_matches_brute_force_leave_one_out():
    rng = np.random.default_rng(123)
    data = rng.random((40, 2))
    n = data.shape[0]
    loos = []
    for i in range(n):
        w = kendall_pseudo(np.delete(data, i, axis=0))
        loos.append(-1.0 + 8.0 * w.mean() - 9.0 * (w**2).mean())
    loos = np.asarray(loos)
    sigma = math.sqrt((n - 1) * np.sum((loos - loos.mean()) ** 2))
    w = kendall_pseudo(data)
    theta = -1.0 + 8.0 * w.mean() - 9.0 * (w**2).mean()
    expected = math.sqrt(n) * theta / sigma
    assert kendall_moment_test(data).statistic == pytest.approx(expected, rel=1e-10)


def test_kendall_moment_test_rank_invariance_bitwise():
    data = np.random.default_rng(34).standard_normal((80, 2))
    transformed = data.copy()
    transformed[:, 0] = np.exp(transformed[:, 0])
    a = kendall_moment_test(data)
    b = kendall_moment_test(transformed)
    assert a.statistic == b.statistic
    assert a.p_value == b.p_value


# ---------------------------------------------------------------------------
# CvM max-stability test
# ---------------------------------------------------------------------------


def test_cvm_comonotone_statistic_is_rank_grid_small():
    n = 10
    data = np.column_stack([np.arange(1.0, n + 1), np.arange(1.0, n + 1)])
    report = cvm_maxstability_test(data, m_set=(2, 3, 4, 5), n_boot=10, seed=0)
    # both C_n terms equal the common marginal rank up to grid effects
    assert report.statistic <= 2 * 4 / n
    # brute-force cross-check of the m = 2 term
    uhat = pseudo_observations(data, "over_n").uhat
    stat2 = 0.0
    for i in range(n):
        cn = np.mean(np.all(uhat <= uhat[i], axis=1))
        cn_root = np.mean(np.all(uhat <= np.sqrt(uhat[i]), axis=1))
        stat2 += (cn - cn_root**2) ** 2
    assert report.details["per_m"]["2"] == pytest.approx(stat2, abs=1e-12)


def test_cvm_determinism_and_p_range():
    data = sample_logistic_ev(100, 2, 2.0, seed=35)
    a = cvm_maxstability_test(data, n_boot=100, seed=36)
    b = cvm_maxstability_test(data, n_boot=100, seed=36)
    assert a.statistic == b.statistic and a.p_value == b.p_value
    assert 0.0 < a.p_value <= 1.0
    c = cvm_maxstability_test(data, n_boot=100, seed=37)
    assert c.p_value != a.p_value or c.statistic == a.statistic


def test_cvm_validation():
    data = sample_logistic_ev(60, 2, 2.0, seed=38)
    with pytest.raises(ValueError):
        cvm_maxstability_test(data, n_boot=0)
    with pytest.raises(ValueError):
        cvm_maxstability_test(data, m_set=(1, 2))
    report = cvm_maxstability_test(np.asarray(data), m_set=(2,), n_boot=50, seed=1)
    assert list(report.details["m_set"]) == [2]


def test_cvm_rank_invariance_bitwise():
    data = np.random.default_rng(39).standard_normal((60, 2))
    transformed = data.copy()
    transformed[:, 1] = np.exp(transformed[:, 1])
    a = cvm_maxstability_test(data, n_boot=50, seed=40)
    b = cvm_maxstability_test(transformed, n_boot=50, seed=40)
    assert a.statistic == b.statistic and a.p_value == b.p_value


def test_multiplier_engine_variance_matches_sampling_variance():
    # process-approximation smoke test at a fixed point
    n, point = 5000, np.array([[0.4, 0.7]])
    theta = 2.0
    data = sample_logistic_ev(n, 2, theta, seed=41)
    pobs = pseudo_observations(data, "over_n")
    engine = _MultiplierEngine(pobs, n_boot=500, seed=42)
    var_mult = float(np.var(engine.copula_process(point)[:, 0], ddof=1))

    truth = ev_copula_cdf(LogisticPickands(theta, 2), point[0])
    draws = []
    for i in range(200):
        sample = sample_logistic_ev(n, 2, theta, seed=(43, i))
        cn = np.mean(np.all(pseudo_observations(sample, "over_n").uhat <= point[0], axis=1))
        draws.append(math.sqrt(n) * (cn - truth))
    var_emp = float(np.var(draws, ddof=1))
    assert var_mult / var_emp < 1.5
    assert var_emp / var_mult < 1.5


# ---------------------------------------------------------------------------
# estimator comparison test
# ---------------------------------------------------------------------------


def test_estimator_comparison_comonotone_statistic_near_zero():
    n = 10
    data = np.column_stack([np.arange(1.0, n + 1), np.arange(1.0, n + 1)])
    report = estimator_comparison_test(data, n_boot=5, seed=0, resolution=10)
    assert report.statistic <= 0.05


def test_estimator_comparison_determinism_across_workers(monkeypatch):
    data = sample_logistic_ev(80, 2, 2.0, seed=44)
    a = estimator_comparison_test(data, n_boot=24, seed=45, n_jobs=1)
    b = estimator_comparison_test(data, n_boot=24, seed=45, n_jobs=2)
    assert a.statistic == b.statistic
    assert a.p_value == b.p_value
    monkeypatch.setenv("MAXDEP_THREADS", "2")
    c = estimator_comparison_test(data, n_boot=24, seed=45)
    assert c.p_value == a.p_value


def test_estimator_comparison_rank_invariance_bitwise():
    data = np.random.default_rng(46).standard_normal((70, 2))
    transformed = data.copy()
    transformed[:, 0] = np.exp(transformed[:, 0])
    a = estimator_comparison_test(data, n_boot=20, seed=47)
    b = estimator_comparison_test(transformed, n_boot=20, seed=47)
    assert a.statistic == b.statistic and a.p_value == b.p_value


def test_estimator_comparison_trivariate():
    data = sample_logistic_ev(60, 3, 2.5, seed=57)
    report = estimator_comparison_test(data, n_boot=10, seed=58, resolution=8)
    assert report.details["resolution"] == 8
    assert 0.0 < report.p_value <= 1.0
    # default resolution for D = 3 is 20
    report_default = estimator_comparison_test(data, n_boot=3, seed=58)
    assert report_default.details["resolution"] == 20


def test_gof_logistic_trivariate():
    data = sample_logistic_ev(80, 3, 2.0, seed=59)
    report = gof_parametric_test(data, "logistic", n_boot=10, seed=60, resolution=8)
    assert report.details["family"] == "logistic"
    assert report.details["parameter"] == pytest.approx(2.0, abs=0.8)
    assert 0.0 < report.p_value <= 1.0


def test_estimator_comparison_report_fields():
    data = sample_logistic_ev(60, 2, 2.0, seed=48)
    report = estimator_comparison_test(data, n_boot=10, seed=49)
    assert report.name == "estimator_comparison"
    assert report.details["resolution"] == 50
    assert report.details["projection_residual"] <= 1e-6
    assert 0.0 < report.p_value <= 1.0


# ---------------------------------------------------------------------------
# parametric goodness of fit
# ---------------------------------------------------------------------------


def test_gof_logistic_fields_and_determinism():
    data = sample_logistic_ev(150, 2, 2.0, seed=50)
    a = gof_parametric_test(data, "logistic", n_boot=30, seed=51)
    b = gof_parametric_test(data, "logistic", n_boot=30, seed=51)
    assert a.details["parameter"] == b.details["parameter"]
    assert a.p_value == b.p_value
    assert a.details["family"] == "logistic"
    assert a.details["parameter"] == pytest.approx(2.0, abs=0.45)


def test_gof_boundary_fit_escalates_to_warning():
    rng = np.random.default_rng(52)
    x = rng.random(200)
    # negative dependence pushes the estimated surface above 1, pinning theta at 1
    data = np.column_stack([x, -x + 0.01 * rng.random(200)])
    report = gof_parametric_test(data, "logistic", n_boot=10, seed=53)
    assert report.details["at_bound"]
    assert report.details["parameter"] == 1.0
    assert any("bound" in w for w in report.warnings)


def test_gof_husler_reiss_runs_bivariate_only():
    rng = np.random.default_rng(54)
    with pytest.raises(ValueError):
        gof_parametric_test(rng.random((60, 3)), "husler_reiss", n_boot=5, seed=0)
    with pytest.raises(ValueError):
        gof_parametric_test(rng.random((60, 2)), "gaussian", n_boot=5, seed=0)
    data = sample_logistic_ev(100, 2, 3.0, seed=55)
    report = gof_parametric_test(data, "husler_reiss", n_boot=10, seed=56)
    assert report.details["family"] == "husler_reiss"
    assert 0.0 < report.p_value <= 1.0


# ---------------------------------------------------------------------------
# calibration runs (seeded rejection rates; the slowest tests in the suite)
# ---------------------------------------------------------------------------


def test_kendall_calibration_rates():
    null_p = np.array([
        kendall_moment_test(sample_logistic_ev(1000, 2, 2.0, seed=(910, i))).p_value
        for i in range(100)
    ])
    assert np.mean(null_p > 0.05) >= 0.90
    alt_p = np.array([
        kendall_moment_test(clayton_sample(1000, 0.5, seed=(911, i))).p_value
        for i in range(100)
    ])
    assert np.mean(alt_p < 0.05) >= 0.80


def _gof_size_run(i):
    data = sample_logistic_ev(200, 2, 2.0, seed=(920, i))
    return gof_parametric_test(data, "logistic", n_boot=500, seed=(921, i), n_jobs=1).p_value


def test_gof_logistic_size_calibration():
    pvals = np.asarray(parallel_map(_gof_size_run, range(200), n_jobs=0))
    rate = float(np.mean(pvals < 0.05))
    assert 0.01 <= rate <= 0.12, f"gof size {rate}"


def _gof_power_run(i):
    data = sample_logistic_ev(500, 2, 3.0, seed=(930, i))
    return gof_parametric_test(data, "husler_reiss", n_boot=500, seed=(931, i), n_jobs=1).p_value


def test_gof_power_against_wrong_family():
    # logistic theta=3 data tested against husler_reiss: the families differ
    # in shape, so the test should reject a nontrivial fraction of the time
    pvals = np.asarray(parallel_map(_gof_power_run, range(200), n_jobs=0))
    rate = float(np.mean(pvals < 0.05))
    assert rate >= 0.3, f"gof power {rate}"


_SELF_CONSISTENCY_MEASURE = None


def _self_consistency_run(i):
    global _SELF_CONSISTENCY_MEASURE
    if _SELF_CONSISTENCY_MEASURE is None:
        base = sample_logistic_ev(200, 2, 2.0, seed=940)
        pilot = estimate_surface(pseudo_observations(base, "over_n_plus_1"), 50, "cfg", True)
        grid = simplex_grid(2, 50)
        _SELF_CONSISTENCY_MEASURE = SpectralProjector(grid.points, grid).project(pilot.values).measure
    data = sample_spectral_ev(_SELF_CONSISTENCY_MEASURE, 200, seed=(941, i))
    return estimator_comparison_test(data, n_boot=500, seed=(942, i), n_jobs=1).p_value


def test_estimator_comparison_self_consistency_calibration():
    # data drawn exactly from the projected null model: p roughly uniform
    pvals = np.asarray(parallel_map(_self_consistency_run, range(200), n_jobs=0))
    rate = float(np.mean(pvals < 0.05))
    assert 0.01 <= rate <= 0.12, f"self-consistency size {rate}"


# ---------------------------------------------------------------------------
# report type
# ---------------------------------------------------------------------------


def test_report_validation():
    with pytest.raises(ValueError):
        TestReport(name="x", statistic=float("nan"), p_value=0.5, replicates=0, seed=None)
    with pytest.raises(ValueError):
        TestReport(name="x", statistic=0.0, p_value=1.5, replicates=0, seed=None)
