"""Mixture-density ordinates of posterior draws on a shared grid."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, UnconstrainedParams, log_normal_pdf, stick_transform, weights_from_sticks


@dataclass(frozen=True)
class Grid:
    points: np.ndarray
    dx: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a grid needs at least two points")
        steps = np.diff(pts)
        if np.any(steps <= 0) or np.max(np.abs(steps - self.dx)) > 1e-12 * max(1.0, abs(self.dx)):
            raise ValueError("grid points must be equally spaced and increasing")

    def __len__(self):
        return self.points.size

    @classmethod
    def linspace(cls, lo: float, hi: float, n_points: int) -> "Grid":
        pts = np.linspace(lo, hi, int(n_points))
        return cls(points=pts, dx=(hi - lo) / (int(n_points) - 1))

    def integrate(self, f) -> np.ndarray:
        """Riemann sum ``sum_r f(x_r) dx`` along the last axis."""
        return np.sum(f, axis=-1) * self.dx


@dataclass
class DensityEnsemble:
    """Density ordinates, one row per posterior draw."""

    grid: Grid
    ords: np.ndarray
    method_tag: str = ""

    def __post_init__(self):
        self.ords = np.atleast_2d(np.asarray(self.ords, dtype=float))
        if self.ords.shape[1] != len(self.grid):
            raise ValueError("ordinate rows must match the grid length")

    @property
    def n_draws(self) -> int:
        return self.ords.shape[0]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([repr(float(x)) for x in self.grid.points])
            for row in self.ords:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, method_tag: str = "") -> "DensityEnsemble":
        rows = np.loadtxt(path, delimiter=",", ndmin=2)
        pts = rows[0]
        return cls(Grid(pts, float(pts[1] - pts[0])), rows[1:], method_tag)


def make_grid(y, n_points: int = 400, pad_sd: float = 4.0, sigma: float = 1.0) -> Grid:
    """Equally spaced grid over the data range, widened by ``pad_sd * sigma`` each side.

    ``pad_sd=0`` gives the plain ``[min(y), max(y)]`` grid used for real data.
    """
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    y = np.asarray(y, dtype=float)
    lo, hi = float(np.min(y)), float(np.max(y))
    if hi <= lo:
        raise ValueError("data range is degenerate (max == min)")
    pad = pad_sd * sigma
    return Grid.linspace(lo - pad, hi + pad, n_points)


def mixture_ordinates(pi, theta, sigma: float, grid: Grid, chunk_elems: int = 4_000_000) -> np.ndarray:
    """Rows of ``sum_h pi_h N(x_r | theta_h, sigma^2)`` for stacked weights/atoms."""
    pi = np.atleast_2d(pi)
    theta = np.atleast_2d(theta)
    x = grid.points
    out = np.empty((pi.shape[0], x.size))
    step = max(1, chunk_elems // (x.size * pi.shape[1]))
    for s in range(0, pi.shape[0], step):
        sl = slice(s, s + step)
        kern = np.exp(log_normal_pdf(x[None, :, None], theta[sl, None, :], sigma))
        out[sl] = np.einsum("dxk,dk->dx", kern, pi[sl])
    return out


def ordinates(cfg: ModelConfig, draw, grid: Grid) -> np.ndarray:
    """Mixture density of one draw on the grid.

    ``draw`` is a flat unconstrained vector (length 2K-1) or a ``(V, theta)``
    pair of stick proportions and atoms.
    """
    if isinstance(draw, tuple):
        V, theta = draw
        pi = weights_from_sticks(np.asarray(V, dtype=float))
    else:
        flat = draw.flat() if isinstance(draw, UnconstrainedParams) else np.asarray(draw, dtype=float)
        R, theta = cfg.split(flat)
        pi = stick_transform(R).pi
    return mixture_ordinates(pi, np.asarray(theta, dtype=float), cfg.sigma, grid)[0]


def ensemble_from_unconstrained(cfg: ModelConfig, X, grid: Grid, method_tag: str = "") -> DensityEnsemble:
    R, theta = cfg.split(np.atleast_2d(X))
    return DensityEnsemble(grid, mixture_ordinates(stick_transform(R).pi, theta, cfg.sigma, grid), method_tag)


def ensemble_from_sticks(V, theta, sigma: float, grid: Grid, method_tag: str = "") -> DensityEnsemble:
    return DensityEnsemble(grid, mixture_ordinates(weights_from_sticks(V), theta, sigma, grid), method_tag)


def posterior_mean_density(ens: DensityEnsemble) -> np.ndarray:
    if ens.n_draws < 1:
        raise ValueError("ensemble has no draws")
    return ens.ords.mean(axis=0)
