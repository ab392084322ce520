import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxdep.empirical import (
    Dataset,
    PseudoObservations,
    empirical_copula,
    kendall_pseudo,
    pseudo_observations,
)

from helpers import brute_force_copula


def test_pseudo_observations_examples():
    col = np.array([[10.0], [5.0], [7.0]])
    data = np.hstack([col, col])  # need >= 1 column; ranks are columnwise
    pobs = pseudo_observations(data, "over_n_plus_1")
    assert pobs.uhat[:, 0].tolist() == [0.75, 0.25, 0.5]
    pobs_n = pseudo_observations(data, "over_n")
    assert pobs_n.uhat[:, 0].tolist() == pytest.approx([1.0, 1 / 3, 2 / 3])


def test_pseudo_observations_midranks_under_ties():
    data = np.array([[1.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    pobs = pseudo_observations(data, "over_n_plus_1")
    assert pobs.uhat[:, 0].tolist() == [0.375, 0.375, 0.75]
    assert pobs.ties == 1
    assert pobs.has_ties


def test_pseudo_observations_rank_invariance():
    data = np.array([[10.0, 1.0], [5.0, 2.0], [7.0, 3.0]])
    transformed = data.copy()
    transformed[:, 0] = np.exp(transformed[:, 0])
    a = pseudo_observations(data, "over_n_plus_1")
    b = pseudo_observations(transformed, "over_n_plus_1")
    assert np.array_equal(a.uhat, b.uhat)


def test_pseudo_observations_errors():
    with pytest.raises(ValueError):
        pseudo_observations(np.array([[1.0, 2.0]]))  # n < 2
    with pytest.raises(ValueError):
        pseudo_observations(np.array([[1.0, np.inf], [2.0, 3.0]]))
    with pytest.raises(ValueError):
        pseudo_observations(np.array([[1.0, 2.0], [3.0, 4.0]]), scaling="bogus")


@given(st.integers(0, 10**6), st.integers(2, 40), st.integers(2, 4))
@settings(max_examples=30, deadline=None)
def test_tie_free_columns_are_exact_rank_grids(seed, n, dim):
    rng = np.random.default_rng(seed)
    data = rng.random((n, dim))
    pobs = pseudo_observations(data, "over_n_plus_1")
    expected = np.arange(1, n + 1) / (n + 1)
    for d in range(dim):
        assert np.array_equal(np.sort(pobs.uhat[:, d]), expected)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[1.0, np.nan], [2.0, 3.0]]))
    ds = Dataset(np.array([[1.0, 2.0], [3.0, 4.0]]), labels=("a", "b"))
    assert ds.n == 2 and ds.dim == 2
    with pytest.raises(ValueError):
        Dataset(np.array([[1.0, 2.0], [3.0, 4.0]]), labels=("only-one",))


def test_pseudo_observations_type_guards():
    with pytest.raises(ValueError):
        PseudoObservations(np.array([[0.5, 1.0]]), scaling="over_n_plus_1")
    PseudoObservations(np.array([[0.5, 1.0]]), scaling="over_n")  # 1 allowed here


# ---------------------------------------------------------------------------
# empirical copula
# ---------------------------------------------------------------------------


def test_empirical_copula_examples():
    data = np.array([[1.0, 1.0], [2.0, 3.0], [3.0, 2.0]])
    pobs = pseudo_observations(data, "over_n")
    assert empirical_copula(pobs, [1.0, 1.0]) == 1.0
    assert empirical_copula(pobs, [0.2, 0.9]) == 0.0  # below smallest rank 1/3
    # only the row with both ranks 1/3 is counted at (0.67, 0.67)
    assert empirical_copula(pobs, [0.67, 0.67]) == pytest.approx(1 / 3)


def test_empirical_copula_requires_over_n():
    data = np.array([[1.0, 1.0], [2.0, 3.0], [3.0, 2.0]])
    pobs = pseudo_observations(data, "over_n_plus_1")
    with pytest.raises(ValueError):
        empirical_copula(pobs, [0.5, 0.5])


@given(st.integers(0, 10**6), st.integers(2, 50), st.integers(2, 3))
@settings(max_examples=30, deadline=None)
def test_empirical_copula_matches_brute_force(seed, n, dim):
    rng = np.random.default_rng(seed)
    data = rng.random((n, dim))
    pobs = pseudo_observations(data, "over_n")
    for _ in range(5):
        u = rng.random(dim)
        assert empirical_copula(pobs, u) == pytest.approx(
            brute_force_copula(pobs.uhat, u), abs=1e-15
        )


def test_empirical_copula_monotone_and_gridded():
    rng = np.random.default_rng(3)
    pobs = pseudo_observations(rng.random((25, 2)), "over_n")
    u = rng.random((40, 2))
    vals = empirical_copula(pobs, u)
    assert np.all((vals * 25) % 1.0 == pytest.approx(0.0, abs=1e-9))
    bumped = np.minimum(u + 0.1, 1.0)
    assert np.all(empirical_copula(pobs, bumped) >= vals)


# ---------------------------------------------------------------------------
# Kendall pseudo-observations
# ---------------------------------------------------------------------------


def test_kendall_pseudo_examples():
    comonotone = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    assert kendall_pseudo(comonotone).tolist() == pytest.approx([1 / 3, 2 / 3, 1.0])
    counter = np.array([[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]])
    assert kendall_pseudo(counter).tolist() == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    assert kendall_pseudo(np.array([[4.2, 1.7]])).tolist() == [1.0]


def test_kendall_pseudo_requires_two_columns():
    with pytest.raises(ValueError):
        kendall_pseudo(np.random.default_rng(0).random((5, 3)))


def test_kendall_pseudo_rank_invariance_and_copula_link():
    rng = np.random.default_rng(9)
    data = rng.random((30, 2))
    w = kendall_pseudo(data)
    transformed = data.copy()
    transformed[:, 1] = np.exp(transformed[:, 1])
    assert np.array_equal(w, kendall_pseudo(transformed))
    # W_i equals the empirical copula at the row's own over_n ranks
    pobs = pseudo_observations(data, "over_n")
    link = empirical_copula(pobs, pobs.uhat)
    assert np.allclose(w, link, atol=1e-15)
