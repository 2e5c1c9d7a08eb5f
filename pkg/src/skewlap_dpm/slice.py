"""Conditional slice sampler for the untruncated DP mixture of Gaussians.

Dependent-slice variant: ``u_i ~ U(0, pi_{c_i})``, so each allocation only has
to consider the finitely many components whose weight exceeds its slice. The
DP concentration is updated with the auxiliary-variable Gamma-mixture step of
Escobar and West for a Gamma(shape, rate) prior.

Cluster labels are stored 0-based.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, weights_from_sticks


class SliceSamplerError(RuntimeError):
    pass


@dataclass
class SliceState:
    c: np.ndarray
    u: np.ndarray
    V: np.ndarray
    theta: np.ndarray
    alpha: float
    # concentration the current sticks were drawn under (alpha moves last in a sweep)
    stick_alpha: float = float("nan")

    @property
    def H(self) -> int:
        return self.V.size

    @property
    def pi(self) -> np.ndarray:
        """Weights of the ``H`` instantiated components (no remainder term)."""
        rest = np.concatenate([[1.0], np.cumprod(1.0 - self.V)[:-1]])
        return self.V * rest

    def counts(self) -> np.ndarray:
        return np.bincount(self.c, minlength=self.H)

    def check(self, n: int | None = None):
        """Raise :class:`SliceSamplerError` if a state invariant fails."""
        pi = self.pi
        if n is not None and self.c.size != n:
            raise SliceSamplerError("label vector has wrong length")
        if np.any(self.c < 0) or np.any(self.c >= self.H):
            raise SliceSamplerError("label outside instantiated components")
        if not np.all(self.u < pi[self.c]):
            raise SliceSamplerError("slice variable not below its component weight")
        if not (1.0 - pi.sum() < self.u.min()):
            raise SliceSamplerError("instantiated mass does not cover the smallest slice")
        if np.any((self.V <= 0) | (self.V >= 1)):
            raise SliceSamplerError("stick proportion outside (0, 1)")
        if not self.alpha > 0:
            raise SliceSamplerError("non-positive concentration")


@dataclass
class SliceSnapshot:
    V: np.ndarray
    theta: np.ndarray
    alpha: float
    stick_alpha: float
    n_occupied: int

    @property
    def H(self) -> int:
        return self.V.size


@dataclass
class ChainOutput:
    draws: list
    timestamps: np.ndarray
    wall_time: float
    seed: object
    burn_in: int = 0
    alpha_prior: tuple | None = None

    def __len__(self):
        return len(self.draws)

    @property
    def kept(self) -> list:
        return self.draws[self.burn_in :]


def escobar_west_alpha(alpha, k, n, shape, rate, rng) -> float:
    """Concentration update given ``k`` occupied clusters among ``n`` observations."""
    eta = rng.beta(alpha + 1.0, n)
    b = rate - np.log(eta)
    odds = (shape + k - 1.0) / (n * b)
    a = shape + k if rng.random() < odds / (1.0 + odds) else shape + k - 1.0
    return float(rng.gamma(a, 1.0 / b))


def slice_sweep(
    state: SliceState,
    cfg: ModelConfig,
    y,
    rng: np.random.Generator,
    alpha_prior=None,
    likelihood: bool = True,
) -> SliceState:
    """One sweep: atoms, sticks, slices, extension, allocations, concentration.

    ``alpha_prior`` is a ``(shape, rate)`` pair; ``None`` keeps alpha fixed.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    sig2, s02 = cfg.sigma**2, cfg.s0**2
    alpha = state.alpha

    # components above the largest occupied label are prior draws; drop them
    H = int(state.c.max()) + 1
    c = state.c
    counts = np.bincount(c, minlength=H)

    # (a) atoms
    if likelihood:
        prec = 1.0 / s02 + counts / sig2
        mean = (cfg.m0 / s02 + np.bincount(c, weights=y, minlength=H) / sig2) / prec
    else:
        prec = np.full(H, 1.0 / s02)
        mean = np.full(H, cfg.m0)
    theta = mean + rng.standard_normal(H) / np.sqrt(prec)

    # (b) sticks
    above = np.cumsum(counts[::-1])[::-1] - counts
    V = rng.beta(1.0 + counts, alpha + above)
    V = np.clip(V, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)

    # (c) slices
    pi = weights_from_sticks(V)[:-1]
    u = pi[c] * rng.random(n)

    # (d) extend until the leftover stick is smaller than every slice
    u_min = u.min()
    rest = float(np.prod(1.0 - V))
    V, theta = list(V), list(theta)
    while rest >= u_min:
        v = min(max(rng.beta(1.0, alpha), np.finfo(float).tiny), 1.0 - np.finfo(float).epsneg)
        V.append(v)
        theta.append(cfg.m0 + cfg.s0 * rng.standard_normal())
        rest *= 1.0 - v
    V, theta = np.asarray(V), np.asarray(theta)
    pi = weights_from_sticks(V)[:-1]

    # (e) allocations, Gumbel-max over the admissible set
    admissible = pi[None, :] > u[:, None]
    if not np.all(admissible.any(axis=1)):
        raise SliceSamplerError("empty allocation set")
    if likelihood:
        logits = -0.5 * (y[:, None] - theta[None, :]) ** 2 / sig2
    else:
        logits = np.zeros((n, V.size))
    logits = np.where(admissible, logits, -np.inf)
    gumbel = -np.log(-np.log(rng.random(logits.shape)))
    c = np.argmax(logits + gumbel, axis=1)

    # (f) concentration
    k = np.unique(c).size
    new_alpha = alpha
    if alpha_prior is not None:
        new_alpha = escobar_west_alpha(alpha, k, n, alpha_prior[0], alpha_prior[1], rng)

    return SliceState(c=c, u=u, V=V, theta=theta, alpha=new_alpha, stick_alpha=alpha)


def initial_state(cfg: ModelConfig, y, alpha: float, rng: np.random.Generator) -> SliceState:
    """All observations in one cluster; the first sweep fills in the rest."""
    n = np.asarray(y).size
    V = np.array([rng.beta(1.0, alpha)])
    theta = np.array([float(np.mean(y))])
    u = V[0] * rng.random(n)
    return SliceState(c=np.zeros(n, dtype=int), u=u, V=V, theta=theta, alpha=alpha, stick_alpha=alpha)


def run_slice(
    cfg: ModelConfig,
    y,
    iters: int,
    burn_in: int = 0,
    seed=None,
    alpha_prior=None,
    likelihood: bool = True,
    check_invariants: bool = False,
) -> ChainOutput:
    """Run ``iters`` sweeps and keep a snapshot after each one.

    alpha starts at the prior mean ``shape / rate`` when ``alpha_prior`` is
    given, otherwise it stays at ``cfg.alpha``.
    """
    if not (iters > burn_in >= 0):
        raise ValueError("need iters > burn_in >= 0")
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    alpha = cfg.alpha if alpha_prior is None else alpha_prior[0] / alpha_prior[1]
    state = initial_state(cfg, y, alpha, rng)
    draws = []
    stamps = np.empty(iters)
    t0 = time.perf_counter()
    for it in range(iters):
        state = slice_sweep(state, cfg, y, rng, alpha_prior=alpha_prior, likelihood=likelihood)
        if check_invariants:
            state.check(y.size)
        draws.append(
            SliceSnapshot(
                V=state.V,
                theta=state.theta,
                alpha=state.alpha,
                stick_alpha=state.stick_alpha,
                n_occupied=int(np.unique(state.c).size),
            )
        )
        stamps[it] = time.perf_counter() - t0
    return ChainOutput(
        draws=draws,
        timestamps=stamps,
        wall_time=float(stamps[-1]),
        seed=seed,
        burn_in=burn_in,
        alpha_prior=alpha_prior,
    )


def complete_to_truncation(snapshot: SliceSnapshot, K_out: int, rng, m0: float = 0.0, s0: float = 1.0):
    """Fixed-size ``(V[K_out-1], theta[K_out])`` representation of a slice draw.

    Short snapshots are padded with prior sticks Beta(1, alpha) and prior atoms
    N(m0, s0^2). Long ones keep the first ``K_out - 1`` sticks and give the
    remainder weight the atom of the heaviest component it absorbs.
    """
    if K_out < 2:
        raise ValueError("K_out must be at least 2")
    H = snapshot.H
    V = np.asarray(snapshot.V, dtype=float)
    theta = np.asarray(snapshot.theta, dtype=float)
    if H >= K_out:
        tail_w = weights_from_sticks(V)[K_out - 1 : H]
        last = theta[K_out - 1 + int(np.argmax(tail_w))]
        return V[: K_out - 1].copy(), np.concatenate([theta[: K_out - 1], [last]])
    a = snapshot.stick_alpha if np.isfinite(snapshot.stick_alpha) else snapshot.alpha
    V_pad = rng.beta(1.0, a, K_out - 1 - H)
    theta_pad = m0 + s0 * rng.standard_normal(K_out - H)
    return np.concatenate([V, V_pad]), np.concatenate([theta, theta_pad])


def truncated_draws(chain: ChainOutput, K_out: int, rng, m0=0.0, s0=1.0, kept_only: bool = True):
    """Stack post-burn-in snapshots as ``(V, theta)`` arrays of shape (draws, K_out-1) and (draws, K_out)."""
    snaps = chain.kept if kept_only else chain.draws
    Vs = np.empty((len(snaps), K_out - 1))
    thetas = np.empty((len(snaps), K_out))
    for i, s in enumerate(snaps):
        Vs[i], thetas[i] = complete_to_truncation(s, K_out, rng, m0, s0)
    return Vs, thetas
