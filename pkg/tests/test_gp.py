import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from integral_gp import gp
from integral_gp.integral_cov import JITTER, assemble_K, prior_variance
from integral_gp.supports import KernelSpec, Supports
from oracles import gp_dense, lml_dense, phi_ref


def _data(seed=0, n=15, dim=2):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0, 6, (n, dim))
    H = rng.uniform(0.1, 1.5, (n, dim)) * (rng.random((n, dim)) < 0.5)
    y = np.sin(A[:, 0]) + 0.3 * A[:, -1] + 0.05 * rng.normal(size=n)
    return Supports(A, H, y)


K1 = KernelSpec("matern32", 1.2, (1.5, 2.0), 0.1)


def test_posterior_matches_dense_reference():
    train = _data()
    query = _data(1, 9)
    model = gp.fit(K1, train)
    post = model.predict(query)
    K = assemble_K(K1, train) + JITTER * K1.amplitude * np.eye(len(train))
    Ks = assemble_K(K1, train, query)
    mean, var = gp_dense(K, Ks, prior_variance(K1, query), train.values, np.full(len(train), 0.1))
    np.testing.assert_allclose(post.mean, mean, rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(post.std, np.sqrt(var), rtol=1e-7, atol=1e-9)


def test_full_covariance_diagonal_matches_std():
    train, query = _data(), _data(2, 7)
    post = gp.fit(K1, train).predict(query, want_cov=True)
    np.testing.assert_allclose(np.sqrt(np.clip(np.diag(post.cov), 0, None)), post.std, rtol=1e-8, atol=1e-10)
    assert np.allclose(post.cov, post.cov.T)


def test_noise_free_interpolates_point_training_data():
    train = _data().as_points()
    k = KernelSpec("matern52", 1.0, (1.0, 1.0), 0.0)
    post = gp.fit(k, train).predict(train)
    np.testing.assert_allclose(post.mean, train.values, atol=1e-6)
    assert np.all(post.std < 1e-3)


def test_prior_mean_is_data_mean_far_away():
    train = _data()
    far = Supports([[1e4, 1e4]])
    post = gp.fit(K1, train).predict(far)
    assert post.mean[0] == pytest.approx(train.values.mean(), rel=1e-12)
    assert post.std[0] == pytest.approx(np.sqrt(K1.amplitude), rel=1e-9)


def test_lml_matches_multivariate_normal():
    train = _data()
    K = assemble_K(K1, train) + JITTER * K1.amplitude * np.eye(len(train))
    assert gp.lml(K1, train) == pytest.approx(lml_dense(K, train.values, np.full(len(train), 0.1)), rel=1e-10)


def test_heteroscedastic_noise_vector():
    train = _data()
    noise = np.linspace(0.05, 0.5, len(train))
    K = assemble_K(K1, train) + JITTER * K1.amplitude * np.eye(len(train))
    assert gp.lml(K1, train, noise) == pytest.approx(lml_dense(K, train.values, noise), rel=1e-10)
    m = gp.fit(K1, train, noise)
    np.testing.assert_array_equal(m.noise_vec, noise)


@pytest.mark.parametrize("tag", ["se", "exp", "matern32", "matern52"])
def test_lml_gradient_by_finite_difference(tag):
    train = _data(3, 12)
    theta = np.array([1.3, 0.9, 1.7, 0.2])
    _, g = gp.lml_and_grad(KernelSpec.from_theta(tag, theta), train)
    for i in range(len(theta)):
        h = 1e-6 * theta[i]
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        fd = (gp.lml(KernelSpec.from_theta(tag, tp), train) - gp.lml(KernelSpec.from_theta(tag, tm), train)) / (2 * h)
        assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_gradient_single_entry_and_fixed_noise():
    train = _data()
    g = gp.lml_grad(K1, train)
    assert gp.lml_grad(K1, train, wrt=1) == g[1]
    g2 = gp.lml_grad(K1, train, noise_vec=np.full(len(train), 0.2))
    assert g2[-1] == 0.0


def test_model_is_immutable():
    m = gp.fit(K1, _data())
    with pytest.raises(ValueError):
        m.alpha[0] = 1.0
    with pytest.raises(Exception):
        m.prior_mean = 3.0


def test_duplicate_points_factorise_with_jitter():
    A = np.zeros((4, 1))
    train = Supports(A, None, [1.0, 1.0, 1.0, 1.0])
    k = KernelSpec("se", 1.0, (1.0,), 0.0)
    m = gp.fit(k, train)
    assert m.jitter >= JITTER
    assert np.allclose(m.predict(train).mean, 1.0)


def test_indefinite_covariance_reports_pivot():
    with pytest.raises(gp.IllConditionedError, match="pivot"):
        gp._cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]), 1.0)


def test_input_validation():
    train = _data()
    with pytest.raises(ValueError):
        gp.fit(K1, train, noise_vec=np.ones(3))
    with pytest.raises(ValueError):
        gp.fit(KernelSpec("exp", 1.0, (1.0,)), train)
    with pytest.raises(ValueError):
        gp.fit(K1, train, noise_vec=-np.ones(len(train)))


def test_negative_variance_warning_category_exists():
    assert issubclass(gp.ConditioningWarning, RuntimeWarning)
    m = gp.fit(K1, _data())
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        m.predict(_data(5, 4))


@given(seed=st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_posterior_variance_below_prior(seed):
    train, query = _data(seed, 10), _data(seed + 1, 5)
    post = gp.fit(K1, train).predict(query)
    assert np.all(post.std**2 <= prior_variance(K1, query) * (1 + 1e-12))
    assert np.all(post.std >= 0)


@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 10))
@settings(max_examples=20, deadline=None)
def test_mean_equivariant_to_affine_value_maps(seed, scale):
    train, query = _data(seed, 10), _data(seed + 1, 4)
    k = KernelSpec("matern32", 1.0, (1.0, 1.0), 0.1)
    k2 = KernelSpec("matern32", scale**2, (1.0, 1.0), 0.1 * scale)
    m1 = gp.fit(k, train).predict(query).mean
    m2 = gp.fit(k2, train.with_values(scale * train.values + 3.0)).predict(query).mean
    np.testing.assert_allclose(m2, scale * m1 + 3.0, rtol=1e-8, atol=1e-8 * scale)


def test_jitter_escalates_for_semidefinite_matrix():
    # rank one, smallest eigenvalue exactly zero up to rounding
    v = np.linspace(1.0, 2.0, 6)
    K = np.outer(v, v) - 1e-9 * np.eye(6)
    L, jitter = gp._cholesky(K, 1.0)
    assert jitter > JITTER
    np.testing.assert_allclose(L @ L.T, K + jitter * np.eye(6), atol=1e-12)


def test_single_point_weights():
    k = KernelSpec("exp", 1.0, (1.0,), 0.0)
    m = gp.fit(k, Supports([[0.0]], None, [5.0]))
    assert m.prior_mean == 5.0
    assert m.alpha[0] == 0.0  # (y - mean) / (1 + jitter) with the data mean as prior


def test_all_point_data_matches_point_code_path():
    # with zero extents the integral covariance reduces to the point kernel
    rng = np.random.default_rng(8)
    A = rng.uniform(0, 5, (12, 2))
    train = Supports(A, None, np.cos(A[:, 0]))
    query = Supports(rng.uniform(0, 5, (6, 2)))
    k = KernelSpec("matern52", 1.3, (0.9, 1.4), 0.05)
    post = gp.fit(k, train).predict(query)
    def kpt(X, Y):
        d = (X[:, None, :] - Y[None, :, :]) / np.array(k.length_scales)
        return k.amplitude * np.prod(phi_ref("matern52", d), axis=-1)

    K = kpt(A, A) + JITTER * k.amplitude * np.eye(12)
    mean, var = gp_dense(K, kpt(A, query.centroids), np.full(6, k.amplitude), train.values, np.full(12, 0.05))
    np.testing.assert_allclose(post.mean, mean, rtol=1e-10)
    np.testing.assert_allclose(post.std**2, var, rtol=1e-8, atol=1e-12)
