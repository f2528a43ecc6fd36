"""Benchmark Gaussian targets: covariance builders and densities."""

import math

import numpy as np
import pytest
from scipy import stats

from conftest import fd_gradient, grad_close
from visa.models.gaussian import GaussianTarget, make_dense_cov, make_diag_cov
from visa.rng import make_rng


def test_make_diag_cov_endpoints_d2():
    np.testing.assert_allclose(make_diag_cov(2), [0.1, 1.0], rtol=1e-15)


def test_make_diag_cov_d128_linear_spacing():
    var = make_diag_cov(128)
    assert var[0] == pytest.approx(0.1, rel=1e-12)
    assert var[-1] == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(np.diff(var), np.diff(var)[0], rtol=1e-9)
    # entry i (1-based) = min + (i-1) (max-min) / (D-1)
    i = np.arange(128)
    np.testing.assert_allclose(var, 0.1 + i * 0.9 / 127.0, rtol=1e-12)


def test_make_diag_cov_constant_when_equal_limits():
    np.testing.assert_allclose(make_diag_cov(5, 0.3, 0.3), np.full(5, 0.3), rtol=1e-12)


def test_make_diag_cov_validation():
    with pytest.raises(ValueError):
        make_diag_cov(1)
    with pytest.raises(ValueError):
        make_diag_cov(4, 1.0, 0.1)
    with pytest.raises(ValueError):
        make_diag_cov(4, 0.0, 1.0)


def test_make_dense_cov_structure():
    cov = make_dense_cov(16, make_rng(0))
    np.testing.assert_allclose(cov, cov.T, rtol=1e-15)
    assert np.min(np.linalg.eigvalsh(cov)) >= 0.1 - 1e-12
    assert np.linalg.norm(cov - 0.1 * np.eye(16)) == pytest.approx(1.0, abs=1e-12)


def test_make_dense_cov_pd_many_seeds():
    for seed in range(100):
        cov = make_dense_cov(32, make_rng(seed))
        np.linalg.cholesky(cov)  # raises if not positive definite


def test_log_density_matches_direct_formula():
    rng = make_rng(1)
    cov = make_dense_cov(6, rng)
    mean = rng.normal(size=6)
    target = GaussianTarget(cov=cov, mean=mean)
    ref = stats.multivariate_normal(mean=mean, cov=cov)
    for _ in range(10):
        z = rng.normal(size=6)
        assert target.log_density(z) == pytest.approx(ref.logpdf(z), rel=1e-10)


def test_log_density_diagonal_case():
    var = make_diag_cov(4)
    target = GaussianTarget.from_diag(var)
    z = np.array([0.1, -0.2, 0.5, 1.0])
    direct = float(
        -0.5 * np.sum(z * z / var) - 0.5 * np.sum(np.log(2.0 * math.pi * var))
    )
    assert target.log_density(z) == pytest.approx(direct, rel=1e-12)


def test_grad_log_density_matches_finite_differences():
    rng = make_rng(2)
    target = GaussianTarget(cov=make_dense_cov(5, rng))
    z = rng.normal(size=5)
    approx = fd_gradient(lambda x: target.log_density(x), z, eps=1e-6)
    assert grad_close(approx, target.grad_log_density(z), 1e-7)


def test_sample_moments():
    rng = make_rng(3)
    cov = make_dense_cov(3, rng)
    target = GaussianTarget(cov=cov)
    zs = target.sample(200_000, rng)
    np.testing.assert_allclose(zs.mean(axis=0), np.zeros(3), atol=0.01)
    np.testing.assert_allclose(np.cov(zs.T), cov, atol=0.01)


def test_as_model_counts_and_gradients():
    target = GaussianTarget.from_diag(make_diag_cov(3))
    model = target.as_model()
    assert model.dim == 3
    assert model.has_gradient
    z = np.array([0.5, 0.0, -0.5])
    assert model.log_joint(z) == target.log_density(z)
    assert model.eval_count == 1
    np.testing.assert_array_equal(model.grad_log_joint(z), target.grad_log_density(z))
    assert model.eval_count == 1
