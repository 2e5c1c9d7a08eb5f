"""Skew-symmetric correction of the Laplace approximation.

The corrected density is ``2 * f_lap(x) * w(x)`` where ``w`` compares the
unnormalized posterior at ``x`` and at its reflection through the mode. Exact
i.i.d. draws come from proposing under ``f_lap`` and reflecting the proposal
with probability ``1 - w``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .laplace import LaplaceFit, _gaussian_draws


@dataclass
class SkewWeightContext:
    """A Laplace fit together with the log target it approximates.

    ``target`` needs ``logpdf``; ``logpdf_batch`` is used when present.
    """

    fit: LaplaceFit
    target: object

    def __post_init__(self):
        if getattr(self.target, "dim", self.fit.dim) != self.fit.dim:
            raise ValueError("target and Laplace fit have different dimensions")

    def log_target(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        batch = getattr(self.target, "logpdf_batch", None)
        if batch is not None:
            return np.asarray(batch(X), dtype=float)
        return np.array([self.target.logpdf(x) for x in X])


@dataclass
class SkewDraws:
    draws: np.ndarray
    proposals: np.ndarray
    weights: np.ndarray
    kept: np.ndarray

    @property
    def keep_rate(self) -> float:
        return float(np.mean(self.kept))


def _weights(ctx: SkewWeightContext, X) -> np.ndarray:
    X = np.atleast_2d(X)
    reflected = 2.0 * ctx.fit.mode - X
    diff = ctx.log_target(X) - ctx.log_target(reflected)
    # 1 / (1 + exp(l(2m - x) - l(x))); nan only if both sides are -inf
    return np.clip(np.nan_to_num(expit(diff), nan=0.5), 0.0, 1.0)


def skew_weight(ctx: SkewWeightContext, p) -> float:
    """Skewing factor ``w(p)`` in [0, 1]; equals 1/2 at the mode."""
    return float(_weights(ctx, np.asarray(p, dtype=float))[0])


def skew_weights(ctx: SkewWeightContext, X) -> np.ndarray:
    return _weights(ctx, X)


def sample_skew_laplace(
    ctx: SkewWeightContext, N: int, seed=None, weight_fn=None, details: bool = False
):
    """``N`` i.i.d. draws from the skew-Laplace density.

    Proposals are the same stream :func:`~skewlap_dpm.laplace.sample_gaussian`
    produces for ``seed``; acceptance uniforms are drawn afterwards from the
    same generator. ``weight_fn`` overrides the skewing factor (rows in, weights
    out) and is meant for tests.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = np.random.default_rng(seed)
    proposals = _gaussian_draws(ctx.fit, int(N), rng)
    u = rng.random(int(N))
    w = _weights(ctx, proposals) if weight_fn is None else np.asarray(weight_fn(proposals), float)
    kept = u < w
    draws = np.where(kept[:, None], proposals, 2.0 * ctx.fit.mode - proposals)
    if details:
        return SkewDraws(draws=draws, proposals=proposals, weights=w, kept=kept)
    return draws


def skew_laplace_logpdf(ctx: SkewWeightContext, X) -> np.ndarray:
    """Log density ``log 2 + log f_lap + log w`` at the rows of ``X``."""
    X = np.atleast_2d(X)
    with np.errstate(divide="ignore"):
        return np.log(2.0) + ctx.fit.logpdf(X) + np.log(_weights(ctx, X))
