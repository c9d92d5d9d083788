import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MOVIE_F, MOVIE_MU
from mvnrec.dataset import from_dense
from mvnrec.errors import CapacityError, UndefinedStatisticsError
from mvnrec.stats import (
    ItemStatistics,
    compute_statistics,
    cooccurrence_matrix,
    correlation_matrix,
    covariance_matrix,
    load_statistics,
    mean_vector,
    save_statistics,
    shrink_covariance,
    shrink_mean,
)


def random_binary(seed, n=20, m=10):
    rng = np.random.default_rng(seed)
    return (rng.random((n, m)) < 0.4).astype(float)


def test_mean_two_point(tiny_ds):
    assert np.allclose(mean_vector(tiny_ds), [0.5, 0.5])


def test_mean_constant_column():
    ds = from_dense([[1, 0], [1, 1], [1, 0]])
    assert mean_vector(ds)[0] == 1.0


def test_mean_empty_dataset():
    ds = from_dense(np.zeros((0, 0)))
    with pytest.raises(UndefinedStatisticsError):
        mean_vector(ds)


def test_covariance_two_point(tiny_ds):
    sigma = covariance_matrix(tiny_ds, mean_vector(tiny_ds))
    assert np.allclose(sigma, [[0.25, -0.25], [-0.25, 0.25]])


def test_covariance_from_worked_cooccurrence():
    # diagonal of the co-occurrence matrix is the mean for binary data
    assert np.allclose(np.diag(MOVIE_F), MOVIE_MU)
    sigma = MOVIE_F - np.outer(MOVIE_MU, MOVIE_MU)
    assert sigma[0, 2] == pytest.approx(0.28 - 0.44 * 0.35, abs=1e-12)
    assert sigma[0, 2] == pytest.approx(0.126, abs=1e-12)


def test_constant_column_zero_covariance():
    ds = from_dense([[1, 0], [1, 1], [1, 0]])
    sigma = covariance_matrix(ds, mean_vector(ds))
    assert np.allclose(sigma[0, :], 0.0)
    assert np.allclose(sigma[:, 0], 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_covariance_equals_cooccurrence_identity(seed):
    ds = from_dense(random_binary(seed))
    mu = mean_vector(ds)
    f = cooccurrence_matrix(ds)
    sigma = covariance_matrix(ds, mu)
    direct = np.zeros_like(sigma)
    r = ds.interactions.toarray()
    for i in range(ds.n_items):
        for j in range(ds.n_items):
            direct[i, j] = np.mean((r[:, i] - mu[i]) * (r[:, j] - mu[j]))
    assert np.max(np.abs(sigma - (f - np.outer(mu, mu)))) < 1e-10
    assert np.max(np.abs(sigma - direct)) < 1e-10


def test_correlation_two_point(tiny_ds):
    sigma = covariance_matrix(tiny_ds, mean_vector(tiny_ds))
    assert np.allclose(correlation_matrix(sigma), [[1, -1], [-1, 1]])


def test_correlation_diagonal_sigma():
    c = correlation_matrix(np.diag([0.3, 0.0, 1.2]))
    expected = np.diag([1.0, 0.0, 1.0])
    assert np.allclose(c, expected)


def test_correlation_zero_variance_row():
    ds = from_dense([[1, 0], [1, 1], [1, 0]])
    c = correlation_matrix(covariance_matrix(ds, mean_vector(ds)))
    assert np.allclose(c[0, :], 0.0)
    assert c[1, 1] == 1.0


def test_shrink_covariance_endpoints_and_hand_case():
    sigma = np.array([[0.25, -0.25], [-0.25, 0.25]])
    assert np.allclose(shrink_covariance(sigma, 0.0), sigma)
    assert np.allclose(shrink_covariance(sigma, 1.0), 0.25 * np.eye(2))
    assert np.allclose(shrink_covariance(sigma, 0.5),
                       [[0.25, -0.125], [-0.125, 0.25]])


def test_shrink_mean_endpoints_and_hand_case():
    mu = np.array([0.8, 0.2])
    assert np.allclose(shrink_mean(mu, 0.0), mu)
    assert np.allclose(shrink_mean(mu, 1.0), [0.5, 0.5])
    assert np.allclose(shrink_mean(mu, 0.5), [0.65, 0.35])


def test_shrink_domain_errors():
    with pytest.raises(ValueError):
        shrink_covariance(np.eye(2), 1.5)
    with pytest.raises(ValueError):
        shrink_mean(np.ones(2), -0.1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0, 1))
def test_shrinkage_preserves_totals(seed, coeff):
    ds = from_dense(random_binary(seed))
    mu = mean_vector(ds)
    sigma = covariance_matrix(ds, mu)
    assert np.trace(shrink_covariance(sigma, coeff)) == pytest.approx(np.trace(sigma))
    assert shrink_mean(mu, coeff).sum() == pytest.approx(mu.sum())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0, 1))
def test_shrunk_covariance_stays_psd(seed, alpha):
    ds = from_dense(random_binary(seed))
    sigma = shrink_covariance(covariance_matrix(ds, mean_vector(ds)), alpha)
    assert np.linalg.eigvalsh(sigma).min() >= -1e-8


def test_capacity_guard():
    ds = from_dense(np.ones((2, 5)))
    with pytest.raises(CapacityError):
        covariance_matrix(ds, mean_vector(ds), max_items=4)


def test_statistics_roundtrip(tmp_path):
    ds = from_dense(random_binary(11))
    stats = compute_statistics(ds, alpha=0.25, beta=0.1)
    path = tmp_path / "stats.bin"
    save_statistics(stats, path)
    back = load_statistics(path)
    assert isinstance(back, ItemStatistics)
    assert np.allclose(back.mean, stats.mean)
    assert np.allclose(back.covariance, stats.covariance)
    assert back.alpha == stats.alpha and back.beta == stats.beta
