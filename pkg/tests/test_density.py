import numpy as np
import pytest
from scipy import stats

from skewlap_dpm.datasets import load
from skewlap_dpm.density import (
    DensityEnsemble,
    Grid,
    ensemble_from_unconstrained,
    make_grid,
    mixture_ordinates,
    ordinates,
    posterior_mean_density,
)
from skewlap_dpm.laplace import fit_laplace, sample_gaussian
from skewlap_dpm.model import ModelConfig
from skewlap_dpm.scenarios import ScenarioSpec, generate


def test_small_grid():
    g = make_grid([0.0, 1.0], n_points=3, pad_sd=0.0)
    assert np.allclose(g.points, [0, 0.5, 1]) and g.dx == 0.5


def test_grid_spacing():
    g = make_grid([-1.3, 2.2], n_points=400, pad_sd=4.0, sigma=1.0)
    assert abs(g.dx * 399 - (g.points[-1] - g.points[0])) < 1e-10
    assert g.points[0] == pytest.approx(-5.3)


def test_real_data_grid_endpoints():
    z = load("faithful").standardized
    g = make_grid(z, pad_sd=0.0)
    assert g.points[0] == z.min() and g.points[-1] == pytest.approx(z.max(), abs=1e-12)


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid([1.0, 1.0])
    with pytest.raises(ValueError):
        make_grid([0.0, 1.0], n_points=1)
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 1.0, 3.0]), 1.0)


def test_collapsed_mixture_value():
    cfg = ModelConfig(K=2)
    grid = Grid.linspace(-8, 8, 801)
    f = ordinates(cfg, (np.array([0.5]), np.array([0.0, 0.0])), grid)
    assert f[400] == pytest.approx(0.398942, abs=1e-6)
    assert grid.integrate(f) == pytest.approx(1.0, abs=1e-4)


def test_flat_and_tuple_draws_agree():
    cfg = ModelConfig(K=3, sigma=0.7)
    grid = Grid.linspace(-4, 4, 50)
    R = np.array([0.2, -0.4])
    theta = np.array([-1.0, 0.5, 2.0])
    from scipy.special import expit

    assert np.allclose(ordinates(cfg, np.concatenate([R, theta]), grid), ordinates(cfg, (expit(R), theta), grid))


def test_point_mass_weights_give_single_kernel():
    grid = Grid.linspace(-3, 3, 31)
    f = mixture_ordinates(np.array([1.0, 0.0]), np.array([0.4, -2.0]), 0.8, grid)[0]
    assert np.allclose(f, stats.norm.pdf(grid.points, 0.4, 0.8), rtol=1e-12)


def test_posterior_mean():
    grid = Grid.linspace(0, 1, 5)
    f, g = np.arange(5.0), np.ones(5)
    assert np.array_equal(posterior_mean_density(DensityEnsemble(grid, f[None])), f)
    assert np.allclose(posterior_mean_density(DensityEnsemble(grid, np.stack([f, g]))), (f + g) / 2)


def test_csv_round_trip(tmp_path):
    grid = Grid.linspace(-1, 1, 7)
    ens = DensityEnsemble(grid, np.random.default_rng(0).random((3, 7)), "lap")
    ens.to_csv(tmp_path / "e.csv")
    back = DensityEnsemble.from_csv(tmp_path / "e.csv")
    assert np.array_equal(back.ords, ens.ords) and np.array_equal(back.grid.points, grid.points)


def test_laplace_mean_density_normalized():
    y, _ = generate(ScenarioSpec(1, 100, seed=0))
    cfg = ModelConfig(K=20, alpha=1 / np.log(100))
    fit = fit_laplace(cfg, y)
    grid = make_grid(y)
    ens = ensemble_from_unconstrained(cfg, sample_gaussian(fit, 2000, seed=1), grid)
    assert grid.integrate(posterior_mean_density(ens)) == pytest.approx(1.0, abs=0.01)
