"""Truncated Dirichlet process mixture target in unconstrained coordinates.

The parameter vector is laid out as ``[R_1..R_{K-1}, theta_1..theta_K]`` where
``R_h`` is the logit of the stick proportion ``V_h``. The last mixture weight is
the stick remainder, so the ``K`` weights always sum to one.

All mixture quantities are evaluated in log space with one max-subtraction per
observation, which keeps the kernel ordinates usable when ``|y - theta|`` is
many kernel widths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

LOG_2PI = float(np.log(2.0 * np.pi))


class DimensionError(ValueError):
    """Raised when a parameter vector does not match its model configuration."""


@dataclass(frozen=True)
class ModelConfig:
    """Truncation level, kernel scale, Gaussian base measure and DP concentration."""

    K: int
    alpha: float = 1.0
    sigma: float = 1.0
    m0: float = 0.0
    s0: float = 1.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f"truncation level K must be an integer >= 2, got {self.K}")
        for name in ("alpha", "sigma", "s0"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")
        if not np.isfinite(self.m0):
            raise ValueError("m0 must be finite")

    @property
    def dim(self) -> int:
        return 2 * self.K - 1

    def split(self, x):
        """Return ``(R, theta)`` views of a flat parameter vector."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError(
                f"expected parameter dimension {self.dim} for K={self.K}, got {x.shape[-1]}"
            )
        return x[..., : self.K - 1], x[..., self.K - 1 :]


@dataclass
class UnconstrainedParams:
    """Logit sticks ``R`` (length K-1) and component locations ``theta`` (length K)."""

    R: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.R = np.atleast_1d(np.asarray(self.R, dtype=float))
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if self.R.size != self.theta.size - 1:
            raise DimensionError("R must have exactly one entry fewer than theta")
        if not (np.all(np.isfinite(self.R)) and np.all(np.isfinite(self.theta))):
            raise ValueError("unconstrained parameters must be finite")

    @property
    def K(self) -> int:
        return self.theta.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.R, self.theta])

    @classmethod
    def from_flat(cls, cfg: ModelConfig, x) -> "UnconstrainedParams":
        R, theta = cfg.split(x)
        return cls(R.copy(), theta.copy())


@dataclass
class StickWeights:
    V: np.ndarray
    pi: np.ndarray
    log_V: np.ndarray
    log_1mV: np.ndarray
    log_pi: np.ndarray


@dataclass
class Responsibilities:
    logm: np.ndarray
    r: np.ndarray
    A: np.ndarray


def _flat(cfg: ModelConfig, p) -> np.ndarray:
    if isinstance(p, UnconstrainedParams):
        p = p.flat()
    x = np.asarray(p, dtype=float)
    if x.ndim != 1 or x.size != cfg.dim:
        raise DimensionError(
            f"expected a flat vector of length {cfg.dim} for K={cfg.K}, got shape {x.shape}"
        )
    return x


def stick_transform(R) -> StickWeights:
    """Map logit sticks to stick proportions and truncated stick-breaking weights.

    Works on a single vector of length K-1 or on a stack of shape (..., K-1).
    """
    R = np.asarray(R, dtype=float)
    V = expit(R)
    # log V = -log(1 + e^{-R}), log(1 - V) = -log(1 + e^{R}); both overflow-safe
    log_V = -np.logaddexp(0.0, -R)
    log_1mV = -np.logaddexp(0.0, R)
    zeros = np.zeros(R.shape[:-1] + (1,))
    log_rest = np.concatenate([zeros, np.cumsum(log_1mV, axis=-1)], axis=-1)
    log_pi = log_rest.copy()
    log_pi[..., :-1] += log_V
    return StickWeights(V=V, pi=np.exp(log_pi), log_V=log_V, log_1mV=log_1mV, log_pi=log_pi)


def weights_from_sticks(V) -> np.ndarray:
    """Stick-breaking weights from raw proportions, last weight = remainder."""
    V = np.asarray(V, dtype=float)
    rest = np.concatenate([np.ones(V.shape[:-1] + (1,)), np.cumprod(1.0 - V, axis=-1)], axis=-1)
    pi = rest.copy()
    pi[..., :-1] *= V
    return pi


def log_normal_pdf(x, mean, sd):
    z = (np.asarray(x) - mean) / sd
    return -0.5 * z * z - np.log(sd) - 0.5 * LOG_2PI


def responsibilities(cfg: ModelConfig, sticks: StickWeights, theta, y) -> Responsibilities:
    y = np.asarray(y, dtype=float)
    log_phi = log_normal_pdf(y[:, None], theta[None, :], cfg.sigma)
    log_joint = sticks.log_pi[None, :] + log_phi
    shift = log_joint.max(axis=1, keepdims=True)
    w = np.exp(log_joint - shift)
    total = w.sum(axis=1, keepdims=True)
    r = w / total
    logm = (shift + np.log(total))[:, 0]
    # tail sums S_ij = sum_{h >= j} r_ih
    tail = np.cumsum(r[:, ::-1], axis=1)[:, ::-1]
    A = r[:, :-1] - sticks.V[None, :] * tail[:, :-1]
    return Responsibilities(logm=logm, r=r, A=A)


def _log_prior(cfg, sticks, theta):
    stick_part = np.sum(sticks.log_V + cfg.alpha * sticks.log_1mV)
    return stick_part + np.sum(log_normal_pdf(theta, cfg.m0, cfg.s0))


def log_unnorm_posterior(cfg: ModelConfig, p, y) -> float:
    """Unnormalized log posterior of the truncated mixture in ``(R, theta)``.

    Includes the normalizing constants of the Gaussian base measure and kernel,
    so the value is a proper log joint density up to the Beta normalizers.
    """
    R, theta = cfg.split(_flat(cfg, p))
    y = _check_data(y)
    sticks = stick_transform(R)
    resp = responsibilities(cfg, sticks, theta, y)
    return float(_log_prior(cfg, sticks, theta) + resp.logm.sum())


def gradient(cfg: ModelConfig, p, y) -> np.ndarray:
    R, theta = cfg.split(_flat(cfg, p))
    y = _check_data(y)
    sticks = stick_transform(R)
    resp = responsibilities(cfg, sticks, theta, y)
    V = sticks.V
    g_R = 1.0 - (1.0 + cfg.alpha) * V + resp.A.sum(axis=0)
    e = (y[:, None] - theta[None, :]) / cfg.sigma**2
    g_theta = -(theta - cfg.m0) / cfg.s0**2 + np.sum(resp.r * e, axis=0)
    return np.concatenate([g_R, g_theta])


def hessian(cfg: ModelConfig, p, y) -> np.ndarray:
    """Exact Hessian of :func:`log_unnorm_posterior`, assembled block by block."""
    R, theta = cfg.split(_flat(cfg, p))
    y = _check_data(y)
    K = cfg.K
    sticks = stick_transform(R)
    resp = responsibilities(cfg, sticks, theta, y)
    V, r, A = sticks.V, resp.r, resp.A
    e = (y[:, None] - theta[None, :]) / cfg.sigma**2
    re = r * e

    # R-R block: -sum_i A_ij A_ik, plus -V_j sum_i A_ik above the diagonal
    colA = A.sum(axis=0)
    H_RR = -(A.T @ A)
    upper = np.triu(-V[:, None] * colA[None, :], k=1)
    H_RR += upper + upper.T
    H_RR[np.diag_indices(K - 1)] += (1.0 - 2.0 * V) * colA - (1.0 + cfg.alpha) * V * (1.0 - V)

    # theta-theta block: -sum_i r_ih r_ik e_ih e_ik, diagonal adds sum_i r_ih (e_ih^2 - 1/sigma^2)
    H_tt = -(re.T @ re)
    H_tt[np.diag_indices(K)] += (
        np.sum(r * e * e, axis=0) - r.sum(axis=0) / cfg.sigma**2 - 1.0 / cfg.s0**2
    )

    # R-theta block: sum_i r_ih e_ih (dlog pi_h / dR_j - A_ij)
    j = np.arange(K - 1)[:, None]
    h = np.arange(K)[None, :]
    dlogpi = np.where(j == h, 1.0 - V[:, None], 0.0) + np.where(j < h, -V[:, None], 0.0)
    H_Rt = dlogpi * re.sum(axis=0)[None, :] - A.T @ re

    H = np.empty((2 * K - 1, 2 * K - 1))
    H[: K - 1, : K - 1] = H_RR
    H[K - 1 :, K - 1 :] = H_tt
    H[: K - 1, K - 1 :] = H_Rt
    H[K - 1 :, : K - 1] = H_Rt.T
    return H


def log_unnorm_posterior_batch(cfg: ModelConfig, X, y, chunk_elems: int = 500_000) -> np.ndarray:
    """Vectorized :func:`log_unnorm_posterior` over the rows of ``X``.

    Expands ``-(y - theta)^2 / 2 sigma^2`` so the per-observation term
    ``-y^2 / 2 sigma^2`` leaves the log-sum-exp; the remaining exponent is
    affine in ``y``. Agrees with the scalar path to ~1e-12 at moderate scales.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    R, theta = cfg.split(X)
    y = _check_data(y)
    s2 = cfg.sigma**2
    sticks = stick_transform(R)
    prior = np.sum(sticks.log_V + cfg.alpha * sticks.log_1mV, axis=1)
    prior += np.sum(log_normal_pdf(theta, cfg.m0, cfg.s0), axis=1)
    intercept = sticks.log_pi - 0.5 * theta**2 / s2
    slope = theta / s2
    const = -0.5 * np.sum(y**2) / s2 - y.size * (np.log(cfg.sigma) + 0.5 * LOG_2PI)
    out = np.empty(X.shape[0])
    step = max(1, chunk_elems // (y.size * cfg.K))
    for start in range(0, X.shape[0], step):
        sl = slice(start, start + step)
        # (draws, K, n) keeps the reductions over K vectorized along n
        L = slope[sl, :, None] * y[None, None, :]
        L += intercept[sl, :, None]
        shift = L.max(axis=1)
        L -= shift[:, None, :]
        np.exp(L, out=L)
        out[sl] = prior[sl] + const + np.sum(shift + np.log(L.sum(axis=1)), axis=1)
    return out


def _check_data(y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.ndim != 1 or y.size < 1:
        raise ValueError("data must be a non-empty 1-D array")
    if not np.all(np.isfinite(y)):
        raise ValueError("data must be finite")
    return y


class DPMTarget:
    """Bundles a model configuration with data as a log-density target.

    Laplace fitting and the skew correction only need ``logpdf``, ``grad`` and
    ``hess`` on flat vectors, so any object with the same methods (and ``dim``)
    can stand in for this one.
    """

    def __init__(self, cfg: ModelConfig, y):
        self.cfg = cfg
        self.y = _check_data(y)

    @property
    def dim(self) -> int:
        return self.cfg.dim

    def logpdf(self, x) -> float:
        return log_unnorm_posterior(self.cfg, x, self.y)

    def logpdf_batch(self, X) -> np.ndarray:
        return log_unnorm_posterior_batch(self.cfg, X, self.y)

    def grad(self, x) -> np.ndarray:
        return gradient(self.cfg, x, self.y)

    def hess(self, x) -> np.ndarray:
        return hessian(self.cfg, x, self.y)
