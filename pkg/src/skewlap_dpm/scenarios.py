"""Simulation scenarios: finite Gaussian / Student-t location mixtures.

1: four Gaussian components at (-3, 0, 1.5, 3), weights from Beta(1, 2) products
2: 100 Gaussian components, locations N(0, 1.5^2), weights proportional to h^-2
3, 4: as 1 and 2 with unit-scale Student-t(5) kernels
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats

SCENARIO1_LOCATIONS = np.array([-3.0, 0.0, 1.5, 3.0])
N_ZIPF = 100
T_DOF = 5


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    n: int
    seed: int | None = None

    def __post_init__(self):
        if self.id not in (1, 2, 3, 4):
            raise ValueError(f"unknown scenario id {self.id}; expected 1-4")
        if self.n < 1:
            raise ValueError("n must be at least 1")


@dataclass
class Scenario:
    """A realized scenario: mixture weights, locations and kernel family."""

    spec: ScenarioSpec
    p: np.ndarray
    mu: np.ndarray
    sigma: float = 1.0

    @property
    def kernel(self) -> str:
        return "gaussian" if self.spec.id in (1, 2) else "student_t5"

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.mu) / self.sigma
        if self.kernel == "gaussian":
            k = stats.norm.pdf(z) / self.sigma
        else:
            k = stats.t.pdf(z, T_DOF) / self.sigma
        return k @ self.p

    __call__ = density

    def metadata(self) -> dict:
        return {
            "id": self.spec.id,
            "n": self.spec.n,
            "seed": self.spec.seed,
            "kernel": self.kernel,
            "p": self.p.tolist(),
            "mu": self.mu.tolist(),
        }


def scenario1_weights(V) -> np.ndarray:
    """Normalized cumulative products of the stick draws."""
    prods = np.cumprod(np.asarray(V, dtype=float))
    return prods / prods.sum()


def zipf_weights(H: int = N_ZIPF) -> np.ndarray:
    w = 1.0 / np.arange(1, H + 1) ** 2
    return w / w.sum()


def realize(spec: ScenarioSpec, rng: np.random.Generator, V=None) -> Scenario:
    """Draw the scenario's random mixture parameters. ``V`` overrides the Beta draws."""
    if spec.id in (1, 3):
        if V is None:
            V = rng.beta(1.0, 2.0, size=4)
        return Scenario(spec, scenario1_weights(V), SCENARIO1_LOCATIONS.copy())
    mu = rng.normal(0.0, 1.5, size=N_ZIPF)
    return Scenario(spec, zipf_weights(), mu)


def generate(spec: ScenarioSpec, V=None):
    """Sample ``n`` observations; returns ``(y, truth)`` with ``truth`` callable on x."""
    rng = np.random.default_rng(spec.seed)
    truth = realize(spec, rng, V=V)
    labels = rng.choice(truth.p.size, size=spec.n, p=truth.p)
    if truth.kernel == "gaussian":
        noise = rng.standard_normal(spec.n)
    else:
        noise = rng.standard_t(T_DOF, size=spec.n)
    y = truth.mu[labels] + truth.sigma * noise
    return y, truth


def true_density(truth: Scenario, x) -> np.ndarray:
    return truth.density(x)


def export_dataset(y, truth: Scenario, path):
    """Write ``y`` as a one-column CSV and the mixture parameters next to it as JSON."""
    path = str(path)
    np.savetxt(path, np.asarray(y), header="y", comments="", fmt="%.17g")
    with open(path.rsplit(".", 1)[0] + ".json", "w") as fh:
        json.dump(truth.metadata(), fh, indent=2)
