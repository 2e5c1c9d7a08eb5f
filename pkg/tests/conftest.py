import numpy as np
import pytest


def random_instance(rng, K, n):
    """A model config, a flat parameter vector and data drawn at random."""
    from skewlap_dpm.model import ModelConfig

    cfg = ModelConfig(
        K=K,
        alpha=float(rng.uniform(0.3, 3.0)),
        sigma=float(rng.uniform(0.5, 1.5)),
        m0=float(rng.normal(0, 0.5)),
        s0=float(rng.uniform(0.5, 2.0)),
    )
    x = np.concatenate([rng.normal(0, 1.0, K - 1), rng.normal(0, 1.5, K)])
    y = rng.normal(0, 2.0, n)
    return cfg, x, y


def central_diff(f, x, rel_step=1e-5):
    """Central differences of ``f`` (scalar or vector valued) along each coordinate."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = rel_step * (1.0 + abs(x[j]))
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def rel_err(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12))


class QuadraticTarget:
    """l(x) = -0.5 (x - m)' P (x - m), exact derivatives."""

    def __init__(self, mean, prec):
        self.mean = np.asarray(mean, dtype=float)
        self.prec = np.asarray(prec, dtype=float)

    @property
    def dim(self):
        return self.mean.size

    def logpdf(self, x):
        d = np.asarray(x) - self.mean
        return float(-0.5 * d @ self.prec @ d)

    def grad(self, x):
        return -self.prec @ (np.asarray(x) - self.mean)

    def hess(self, x):
        return -self.prec.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
