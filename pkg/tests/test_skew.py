import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from skewlap_dpm.laplace import fit_laplace, gaussian_from_hessian, sample_gaussian
from skewlap_dpm.model import DPMTarget, ModelConfig
from skewlap_dpm.skew import (
    SkewWeightContext,
    sample_skew_laplace,
    skew_laplace_logpdf,
    skew_weight,
    skew_weights,
)

from skew_targets import GaussianTarget, skew_laplace_density_1d, skew_normal_context

COV3 = np.array([[1.0, 0.3, 0.0], [0.3, 2.0, -0.4], [0.0, -0.4, 0.5]])


@pytest.fixture(scope="module")
def dpm_ctx():
    rng = np.random.default_rng(5)
    y = np.concatenate([rng.normal(-1.5, 0.6, 25), rng.normal(1.0, 0.8, 15)])
    cfg = ModelConfig(K=4, alpha=0.7)
    return SkewWeightContext(fit_laplace(cfg, y), DPMTarget(cfg, y))


@pytest.fixture(scope="module")
def gauss_ctx():
    t = GaussianTarget([0.5, -1.0, 2.0], COV3)
    return SkewWeightContext(gaussian_from_hessian(t, t.mean), t)


def test_weight_half_at_mode(dpm_ctx):
    assert skew_weight(dpm_ctx, dpm_ctx.fit.mode) == 0.5


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=7, max_size=7))
def test_weight_reflection_identity(dpm_ctx, offset):
    p = dpm_ctx.fit.mode + np.array(offset)
    w = skew_weight(dpm_ctx, p)
    w_ref = skew_weight(dpm_ctx, 2 * dpm_ctx.fit.mode - p)
    assert 0.0 <= w <= 1.0
    assert abs(w + w_ref - 1.0) < 1e-12


def test_batch_weights_match_scalar(dpm_ctx):
    X = sample_gaussian(dpm_ctx.fit, 20, seed=0)
    assert np.allclose(skew_weights(dpm_ctx, X), [skew_weight(dpm_ctx, x) for x in X], atol=1e-12)


def test_symmetric_target_weights_are_half(gauss_ctx):
    X = sample_gaussian(gauss_ctx.fit, 50, seed=1)
    assert np.allclose(skew_weights(gauss_ctx, X), 0.5, atol=1e-12)


def test_extreme_weights_stay_in_unit_interval(dpm_ctx):
    far = dpm_ctx.fit.mode + 1e3
    w = skew_weight(dpm_ctx, far)
    assert 0.0 <= w <= 1.0 and np.isfinite(w)


def test_symmetric_target_matches_gaussian_ks(gauss_ctx):
    lap = sample_gaussian(gauss_ctx.fit, 2000, seed=11)
    sk = sample_skew_laplace(gauss_ctx, 2000, seed=12)
    for j in range(3):
        assert stats.ks_2samp(lap[:, j], sk[:, j]).statistic < 0.05


def test_forced_keep_returns_proposal_stream(dpm_ctx):
    sk = sample_skew_laplace(dpm_ctx, 100, seed=7, weight_fn=lambda X: np.ones(len(X)))
    assert np.array_equal(sk, sample_gaussian(dpm_ctx.fit, 100, seed=7))


def test_forced_reflect_mirrors_stream(dpm_ctx):
    sk = sample_skew_laplace(dpm_ctx, 100, seed=7, weight_fn=lambda X: np.zeros(len(X)))
    assert np.allclose(sk, 2 * dpm_ctx.fit.mode - sample_gaussian(dpm_ctx.fit, 100, seed=7))


def test_keep_rate_bookkeeping(dpm_ctx):
    d = sample_skew_laplace(dpm_ctx, 500, seed=3, details=True)
    assert d.keep_rate == pytest.approx(d.kept.mean())
    assert np.array_equal(d.draws[d.kept], d.proposals[d.kept])
    assert np.allclose(d.draws[~d.kept], 2 * dpm_ctx.fit.mode - d.proposals[~d.kept])
    assert np.array_equal(d.draws, sample_skew_laplace(dpm_ctx, 500, seed=3))


def test_bad_sample_size(dpm_ctx):
    with pytest.raises(ValueError):
        sample_skew_laplace(dpm_ctx, 0)


def test_dimension_mismatch():
    t = GaussianTarget([0.0, 0.0], np.eye(2))
    t3 = GaussianTarget([0.0, 0.0, 0.0], np.eye(3))
    with pytest.raises(ValueError):
        SkewWeightContext(gaussian_from_hessian(t, t.mean), t3)


def test_skew_density_integrates_to_one():
    ctx = skew_normal_context()
    m, s = ctx.fit.mode[0], np.sqrt(ctx.fit.cov[0, 0])
    f = lambda x: np.exp(skew_laplace_logpdf(ctx, np.array([[x]]))[0])
    assert integrate.quad(f, m - 12 * s, m + 12 * s, limit=200)[0] == pytest.approx(1.0, abs=1e-8)


def test_one_d_cdf_matches_quadrature():
    ctx = skew_normal_context()
    draws = sample_skew_laplace(ctx, 5000, seed=2024)[:, 0]
    _, f, Z = skew_laplace_density_1d(ctx, 0.0)
    m, s = ctx.fit.mode[0], np.sqrt(ctx.fit.cov[0, 0])
    xs = np.linspace(m - 5 * s, m + 5 * s, 201)
    cdf = np.array([integrate.quad(f, m - 12 * s, x, limit=200)[0] for x in xs]) / Z
    ecdf = np.searchsorted(np.sort(draws), xs, side="right") / draws.size
    assert np.max(np.abs(ecdf - cdf)) < 0.03
