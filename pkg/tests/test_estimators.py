import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxdep.empirical import pseudo_observations
from maxdep.estimators import (
    DependenceEstimate,
    cfg_estimator,
    estimate_surface,
    pickands_estimator,
    weighted_estimator,
    xi_values,
)
from maxdep.simulate import sample_logistic_ev

from helpers import copula_curve_integral


def _comonotone_pobs():
    data = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    return pseudo_observations(data, "over_n_plus_1")


def test_xi_values_examples():
    pobs = _comonotone_pobs()
    # vertex: single active coordinate
    assert np.allclose(xi_values(pobs, [1.0, 0.0]), -np.log([0.25, 0.5, 0.75]))
    data = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    pobs2 = pseudo_observations(data, "over_n_plus_1")
    # Uhat_i = (0.25, 0.25): both ratios 2*log(4)
    assert xi_values(pobs2, [0.5, 0.5])[0] == pytest.approx(2 * math.log(4), abs=1e-12)


def test_xi_values_min_over_active_coordinates():
    pobs = pseudo_observations(np.array([[2.0, 1.0], [1.0, 2.0], [3.0, 3.0]]), "over_n_plus_1")
    # row 0 has Uhat = (0.5, 0.25): min(2 log 2, 2 log 4) = 2 log 2
    assert xi_values(pobs, [0.5, 0.5])[0] == pytest.approx(2 * math.log(2), abs=1e-12)


def test_xi_requires_n_plus_1_scaling():
    pobs = pseudo_observations(np.array([[1.0, 2.0], [2.0, 1.0]]), "over_n")
    with pytest.raises(ValueError):
        xi_values(pobs, [0.5, 0.5])


def test_pickands_estimator_hand_values():
    pobs = _comonotone_pobs()
    neglog = [-math.log(0.25), -math.log(0.5), -math.log(0.75)]
    mean_xi = 2.0 * sum(neglog) / 3.0
    raw = pickands_estimator(pobs, [0.5, 0.5], corrected=False)
    assert raw == pytest.approx(1.0 / mean_xi, abs=1e-12)
    assert raw == pytest.approx(0.63368, abs=1e-4)
    corrected = pickands_estimator(pobs, [0.5, 0.5], corrected=True)
    mean_vertex = sum(neglog) / 3.0
    assert corrected == pytest.approx(1.0 / (mean_xi - (mean_vertex - 1.0)), abs=1e-12)
    assert corrected == pytest.approx(0.55896, abs=1e-4)


def test_cfg_estimator_hand_values():
    pobs = _comonotone_pobs()
    neglog = [-math.log(0.25), -math.log(0.5), -math.log(0.75)]
    mean_log_xi = math.log(2.0) + sum(math.log(x) for x in neglog) / 3.0
    raw = cfg_estimator(pobs, [0.5, 0.5], corrected=False)
    assert raw == pytest.approx(math.exp(-np.euler_gamma - mean_log_xi), abs=1e-12)
    assert raw == pytest.approx(0.430947, abs=1e-6)


def test_corrected_estimators_are_one_at_vertices():
    rng = np.random.default_rng(21)
    for dim in (2, 3):
        pobs = pseudo_observations(rng.random((40, dim)), "over_n_plus_1")
        for d in range(dim):
            vertex = np.zeros(dim)
            vertex[d] = 1.0
            assert abs(pickands_estimator(pobs, vertex, corrected=True) - 1.0) <= 1e-12
            assert abs(cfg_estimator(pobs, vertex, corrected=True) - 1.0) <= 1e-12


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_integral_identity_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 40))
    dim = int(rng.integers(2, 4))
    pobs = pseudo_observations(rng.random((n, dim)), "over_n_plus_1")
    for _ in range(3):
        v = rng.dirichlet(np.ones(dim))
        xi = xi_values(pobs, v)
        assert abs(copula_curve_integral(pobs.uhat, v) - xi.mean()) <= 1e-10


def test_rank_invariance_of_estimators():
    rng = np.random.default_rng(4)
    data = rng.standard_normal((60, 2))
    transformed = data.copy()
    transformed[:, 0] = np.exp(transformed[:, 0])
    a = pseudo_observations(data, "over_n_plus_1")
    b = pseudo_observations(transformed, "over_n_plus_1")
    v = np.array([0.35, 0.65])
    assert pickands_estimator(a, v) == pickands_estimator(b, v)
    assert cfg_estimator(a, v) == cfg_estimator(b, v)


def test_exchangeability_under_column_permutation():
    rng = np.random.default_rng(8)
    data = rng.random((50, 3))
    perm = [2, 0, 1]
    a = pseudo_observations(data, "over_n_plus_1")
    b = pseudo_observations(data[:, perm], "over_n_plus_1")
    v = np.array([0.2, 0.3, 0.5])
    assert cfg_estimator(a, v) == pytest.approx(cfg_estimator(b, v[perm]), abs=1e-14)
    assert pickands_estimator(a, v) == pytest.approx(pickands_estimator(b, v[perm]), abs=1e-14)


def test_estimate_surface_shapes_and_vertex_values():
    rng = np.random.default_rng(2)
    pobs2 = pseudo_observations(rng.random((30, 2)), "over_n_plus_1")
    surf = estimate_surface(pobs2, 2, method="cfg", corrected=True)
    assert surf.grid.shape == (3, 2)
    assert surf.values[0] == pytest.approx(1.0, abs=1e-12)  # vertex (0, 1)
    assert surf.values[2] == pytest.approx(1.0, abs=1e-12)  # vertex (1, 0)
    pobs3 = pseudo_observations(rng.random((30, 3)), "over_n_plus_1")
    assert estimate_surface(pobs3, 2, method="pickands").grid.shape == (6, 3)
    with pytest.raises(ValueError):
        estimate_surface(pobs2, 2, method="bogus")


def test_estimator_sanity_envelope():
    u = sample_logistic_ev(200, 2, 2.0, seed=77)
    pobs = pseudo_observations(u, "over_n_plus_1")
    for method in ("pickands", "cfg"):
        surf = estimate_surface(pobs, 10, method=method, corrected=False)
        assert np.all(surf.values > 0.3)
        assert np.all(surf.values < 1.3)


def test_cfg_large_sample_accuracy():
    u = sample_logistic_ev(2000, 2, 2.0, seed=123)
    pobs = pseudo_observations(u, "over_n_plus_1")
    assert cfg_estimator(pobs, [0.5, 0.5], corrected=True) == pytest.approx(2 ** -0.5, abs=0.02)


@pytest.mark.parametrize("theta", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("dim", [2, 3])
def test_cfg_consistency_across_family(theta, dim):
    from maxdep.core import logistic_pickands

    bary = np.full(dim, 1.0 / dim)
    target = logistic_pickands(theta, bary)
    hits = 0
    for i in range(100):
        u = sample_logistic_ev(2000, dim, theta, seed=(124, int(theta * 10), dim, i))
        pobs = pseudo_observations(u, "over_n_plus_1")
        hits += abs(cfg_estimator(pobs, bary, corrected=True) - target) <= 0.03
    assert hits >= 95


def test_weighted_estimator_is_convex_combination():
    u = sample_logistic_ev(100, 2, 2.0, seed=5)
    pobs = pseudo_observations(u, "over_n_plus_1")
    v = [0.4, 0.6]
    p = pickands_estimator(pobs, v)
    c = cfg_estimator(pobs, v)
    assert weighted_estimator(pobs, v, 1.0) == p
    assert weighted_estimator(pobs, v, 0.0) == c
    assert weighted_estimator(pobs, v, 0.3) == pytest.approx(0.3 * p + 0.7 * c, abs=1e-15)
    with pytest.raises(ValueError):
        weighted_estimator(pobs, v, 1.5)


def test_dependence_estimate_validation():
    with pytest.raises(ValueError):
        DependenceEstimate(
            grid=np.array([[0.5, 0.5]]), values=np.array([-0.1]),
            method="cfg", corrected=False, n=10,
        )
    est = DependenceEstimate(
        grid=np.array([[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]),
        values=np.array([1.0, 0.8, 1.0]),
        method="cfg", corrected=True, n=10,
    )
    assert est.as_pickands()([0.5, 0.5]) == pytest.approx(0.8)
