"""Gaussian (Laplace) approximation at the posterior mode."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .model import DPMTarget, ModelConfig

log = logging.getLogger(__name__)

JITTER_START = 1e-8
JITTER_MAX = 1e-2


class ModeNotFoundError(RuntimeError):
    """Optimizer stopped before reaching the gradient tolerance.

    Carries the best point found and its gradient sup-norm.
    """

    def __init__(self, message, best, grad_norm):
        super().__init__(message)
        self.best = best
        self.grad_norm = grad_norm


class FactorizationError(RuntimeError):
    pass


@dataclass
class LaplaceFit:
    """Mode and covariance of the Gaussian approximation.

    ``mode`` is the flat unconstrained vector; ``chol`` is the lower Cholesky
    factor of ``cov`` and is what the samplers use.
    """

    mode: np.ndarray
    cov: np.ndarray
    chol: np.ndarray
    jitter: float
    opt_iters: int
    grad_norm_at_mode: float
    log_density_at_mode: float = float("nan")

    @property
    def dim(self) -> int:
        return self.mode.size

    def logpdf(self, X) -> np.ndarray:
        """Log density of the Gaussian approximation at the rows of ``X``."""
        X = np.atleast_2d(X)
        z = linalg.solve_triangular(self.chol, (X - self.mode).T, lower=True)
        half_logdet = np.sum(np.log(np.diag(self.chol)))
        return -0.5 * np.sum(z * z, axis=0) - half_logdet - 0.5 * self.dim * np.log(2 * np.pi)


def initial_params(cfg: ModelConfig, y) -> np.ndarray:
    """Components at empirical quantiles of the data, sticks at the prior mean."""
    y = np.asarray(y, dtype=float)
    levels = (np.arange(1, cfg.K + 1) - 0.5) / cfg.K
    theta = np.quantile(y, levels)
    R = np.full(cfg.K - 1, np.log(1.0 / cfg.alpha))
    return np.concatenate([R, theta])


def _sup(g) -> float:
    return float(np.max(np.abs(g)))


def find_mode(target, init, tol: float = 1e-6, max_iter: int = 10000) -> np.ndarray:
    """Maximize ``target.logpdf`` from ``init``.

    Runs L-BFGS on the negative log density, then polishes with Newton steps
    on the exact Hessian. Every accepted step is checked to not decrease the
    log density. Returns a point whose gradient sup-norm is at most ``tol``.
    """
    x, _ = _find_mode(target, init, tol, max_iter)
    return x


def _find_mode(target, init, tol, max_iter):
    x = np.array(init, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial point must be finite")
    g = target.grad(x)
    if _sup(g) <= tol:
        return x, 0

    res = optimize.minimize(
        lambda z: -target.logpdf(z),
        x,
        jac=lambda z: -target.grad(z),
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-15, "maxcor": 20},
    )
    iters = int(res.nit)
    if np.all(np.isfinite(res.x)) and -res.fun >= target.logpdf(x):
        x = res.x
    f = target.logpdf(x)
    g = target.grad(x)

    while _sup(g) > tol:
        if iters >= max_iter:
            raise ModeNotFoundError(
                f"gradient sup-norm {_sup(g):.3g} > {tol:.3g} after {iters} iterations", x, _sup(g)
            )
        iters += 1
        step = _newton_direction(target.hess(x), g)
        accepted = False
        t = 1.0
        for _ in range(60):
            x_new = x + t * step
            f_new = target.logpdf(x_new)
            if f_new >= f:
                accepted = True
                break
            # near the optimum the increase can drown in rounding
            if f_new >= f - 8 * np.finfo(float).eps * abs(f):
                g_new = target.grad(x_new)
                if _sup(g_new) < _sup(g):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            raise ModeNotFoundError(
                f"line search failed with gradient sup-norm {_sup(g):.3g}", x, _sup(g)
            )
        x, f = x_new, max(f, f_new)
        g = target.grad(x)
    log.debug("mode found after %d iterations, |g|=%.3g", iters, _sup(g))
    return x, iters


def _newton_direction(H, g):
    """Ascent direction solving (-H + lam I) d = g, with lam raised until -H + lam I is PD."""
    P = -0.5 * (H + H.T)
    lam = 0.0
    scale = max(1.0, float(np.max(np.abs(np.diag(P)))))
    while True:
        try:
            c = linalg.cho_factor(P + lam * np.eye(len(g)), lower=True)
            return linalg.cho_solve(c, g)
        except linalg.LinAlgError:
            lam = 1e-8 * scale if lam == 0.0 else lam * 10.0
            if lam > 1e12 * scale:
                return g / scale


def gaussian_from_hessian(target, mode, grad_norm: float | None = None, opt_iters: int = 0) -> LaplaceFit:
    """Covariance of the Laplace approximation from the negative inverse Hessian.

    If ``-H`` is not numerically positive definite, a ridge ``lam * I`` is added,
    starting at 1e-8 and multiplied by 10 up to 1e-2.
    """
    mode = np.asarray(mode, dtype=float)
    H = np.asarray(target.hess(mode), dtype=float)
    P = -0.5 * (H + H.T)
    d = mode.size
    lam = 0.0
    while True:
        try:
            L = linalg.cholesky(P + lam * np.eye(d), lower=True)
            break
        except linalg.LinAlgError:
            lam = JITTER_START if lam == 0.0 else lam * 10.0
            if lam > JITTER_MAX * (1 + 1e-9):
                raise FactorizationError(
                    "negative Hessian not positive definite even with jitter 1e-2; "
                    "the mode is probably not a local maximum"
                )
    eye = np.eye(d)
    cov = linalg.cho_solve((L, True), eye)
    cov = 0.5 * (cov + cov.T)
    chol = linalg.cholesky(cov, lower=True)
    if grad_norm is None:
        grad_norm = _sup(target.grad(mode))
    if lam > 0:
        log.info("Laplace covariance needed jitter %.1e", lam)
    return LaplaceFit(
        mode=mode,
        cov=cov,
        chol=chol,
        jitter=lam,
        opt_iters=opt_iters,
        grad_norm_at_mode=grad_norm,
        log_density_at_mode=float(target.logpdf(mode)),
    )


def _gaussian_draws(fit: LaplaceFit, N: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((N, fit.dim))
    return fit.mode + z @ fit.chol.T


def sample_gaussian(fit: LaplaceFit, N: int, seed=None) -> np.ndarray:
    """``N`` i.i.d. draws ``mode + chol @ z`` as an ``(N, dim)`` array."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return _gaussian_draws(fit, int(N), np.random.default_rng(seed))


def fit_laplace(
    cfg: ModelConfig,
    y,
    tol: float = 1e-6,
    max_iter: int = 10000,
    restarts: int = 0,
    seed=None,
    init=None,
) -> LaplaceFit:
    """Mode search plus Gaussian approximation for the truncated mixture posterior.

    With ``restarts > 0`` the search is repeated from starts whose locations are
    jittered by half the data standard deviation, and the highest mode wins.
    """
    target = DPMTarget(cfg, y)
    starts = [initial_params(cfg, y) if init is None else np.asarray(init, dtype=float)]
    if restarts:
        rng = np.random.default_rng(seed)
        spread = 0.5 * float(np.std(target.y)) or 0.5
        for _ in range(restarts):
            s = starts[0].copy()
            s[cfg.K - 1 :] += rng.normal(0.0, spread, cfg.K)
            starts.append(s)

    best = None
    last_err = None
    for s in starts:
        try:
            x, iters = _find_mode(target, s, tol, max_iter)
        except ModeNotFoundError as err:
            last_err = err
            continue
        f = target.logpdf(x)
        if best is None or f > best[1]:
            best = (x, f, iters)
    if best is None:
        raise last_err
    x, _, iters = best
    return gaussian_from_hessian(target, x, opt_iters=iters)
