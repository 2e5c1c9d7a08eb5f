import itertools

import numpy as np
import pytest

from skewlap_dpm.laplace import (
    FactorizationError,
    LaplaceFit,
    ModeNotFoundError,
    find_mode,
    fit_laplace,
    gaussian_from_hessian,
    initial_params,
    sample_gaussian,
)
from skewlap_dpm.model import DPMTarget, ModelConfig, gradient, log_unnorm_posterior

from conftest import QuadraticTarget, central_diff

CFG2 = ModelConfig(K=2, alpha=1.0, sigma=1.0, m0=0.0, s0=1.0)
Y3 = np.array([-1.0, 0.0, 1.0])


def test_mode_beats_grid_search():
    target = DPMTarget(CFG2, Y3)
    mode = find_mode(target, initial_params(CFG2, Y3))
    R = np.linspace(-4, 4, 21)
    th = np.linspace(-3, 3, 21)
    best = max(target.logpdf(np.array(p)) for p in itertools.product(R, th, th))
    assert target.logpdf(mode) >= best
    assert np.max(np.abs(target.grad(mode))) <= 1e-6


def test_mode_from_other_starts(rng):
    target = DPMTarget(CFG2, Y3)
    for _ in range(5):
        mode = find_mode(target, rng.normal(0, 2, 3))
        assert np.max(np.abs(gradient(CFG2, mode, Y3))) <= 1e-6


def test_stationary_start_returned_unchanged():
    target = DPMTarget(CFG2, np.array([0.0]))
    x0 = np.zeros(3)
    assert np.array_equal(find_mode(target, x0), x0)


def test_non_finite_start_rejected():
    with pytest.raises(ValueError):
        find_mode(DPMTarget(CFG2, Y3), np.array([0.0, np.nan, 0.0]))


def test_iteration_cap_raises():
    cfg = ModelConfig(K=6, alpha=1.0)
    y = np.random.default_rng(0).normal(0, 3, 80)
    with pytest.raises(ModeNotFoundError) as info:
        find_mode(DPMTarget(cfg, y), initial_params(cfg, y) + 3.0, tol=1e-12, max_iter=2)
    assert info.value.best.shape == (cfg.dim,)
    assert info.value.grad_norm > 1e-12


def test_quadratic_target_gives_identity():
    t = QuadraticTarget(np.array([1.0, -2.0, 0.5]), np.eye(3))
    fit = gaussian_from_hessian(t, find_mode(t, np.zeros(3)))
    assert np.allclose(fit.mode, t.mean, atol=1e-8)
    assert np.allclose(fit.cov, np.eye(3), atol=1e-10)
    assert fit.jitter == 0.0


def test_jitter_escalation():
    # one direction is flat: -H has a zero eigenvalue, so a ridge is needed
    t = QuadraticTarget(np.zeros(2), np.diag([1.0, 0.0]))
    fit = gaussian_from_hessian(t, np.zeros(2))
    assert 1e-8 <= fit.jitter <= 1e-2
    assert np.all(np.diag(fit.chol) > 0)


def test_indefinite_hessian_fails():
    t = QuadraticTarget(np.zeros(2), np.diag([1.0, -1.0]))
    with pytest.raises(FactorizationError):
        gaussian_from_hessian(t, np.zeros(2))


def test_covariance_matches_fd_hessian():
    fit = fit_laplace(CFG2, Y3)
    negH = -central_diff(lambda z: gradient(CFG2, z, Y3), fit.mode)
    negH = 0.5 * (negH + negH.T)
    ref = np.linalg.inv(negH)
    assert np.max(np.abs(fit.cov - ref) / np.abs(ref).max()) < 1e-3
    assert np.all(np.diag(fit.chol) > 0)
    assert np.allclose(fit.chol @ fit.chol.T, fit.cov)


def _one_d_fit(var=4.0, mode=1.5):
    c = np.array([[var]])
    return LaplaceFit(mode=np.array([mode]), cov=c, chol=np.sqrt(c), jitter=0.0, opt_iters=0, grad_norm_at_mode=0.0)


def test_sampling_moments():
    fit = _one_d_fit()
    X = sample_gaussian(fit, 2000, seed=3)
    assert X.shape == (2000, 1)
    assert abs(X.mean() - 1.5) < 0.15
    assert abs(X.var(ddof=1) - 4.0) < 0.5


def test_sampling_determinism_and_single_row():
    fit = fit_laplace(CFG2, Y3)
    assert np.array_equal(sample_gaussian(fit, 50, seed=9), sample_gaussian(fit, 50, seed=9))
    one = sample_gaussian(fit, 1, seed=1)
    assert one.shape == (1, 3) and np.all(np.isfinite(one))
    with pytest.raises(ValueError):
        sample_gaussian(fit, 0)


def test_laplace_logpdf_matches_scipy():
    from scipy import stats

    fit = fit_laplace(CFG2, Y3)
    X = sample_gaussian(fit, 5, seed=2)
    ref = stats.multivariate_normal(fit.mode, fit.cov).logpdf(X)
    assert np.allclose(fit.logpdf(X), ref)


def test_restarts_never_worse():
    rng = np.random.default_rng(4)
    cfg = ModelConfig(K=8, alpha=0.5)
    y = np.concatenate([rng.normal(-2, 0.5, 30), rng.normal(2, 0.5, 30)])
    base = fit_laplace(cfg, y)
    multi = fit_laplace(cfg, y, restarts=4, seed=1)
    assert multi.log_density_at_mode >= base.log_density_at_mode - 1e-9
    assert multi.log_density_at_mode == pytest.approx(log_unnorm_posterior(cfg, multi.mode, y))
