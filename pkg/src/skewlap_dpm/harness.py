"""End-to-end experiments: data, Laplace, skew-Laplace and slice fits, TV reports.

Every random stage draws from its own stream derived from the root seed and a
stage label, so switching one method off does not change the others.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import shutil
import tempfile
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import datasets, scenarios
from .density import ensemble_from_sticks, ensemble_from_unconstrained, make_grid, posterior_mean_density
from .laplace import fit_laplace, sample_gaussian
from .metrics import TVReport, assemble_report, data_range_mask, grid_tv
from .model import DPMTarget, ModelConfig
from .skew import SkewWeightContext, sample_skew_laplace
from .slice import run_slice, truncated_draws

log = logging.getLogger(__name__)

SAMPLE_SIZES = (20, 50, 100, 200, 500, 1000, 1500, 2000)
METHODS = ("lap", "skew", "slice")


class ExperimentError(RuntimeError):
    """A stage of an experiment failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def stage_seed(root: int, label: str) -> np.random.SeedSequence:
    """Independent stream for ``label`` under the root seed."""
    return np.random.SeedSequence(entropy=int(root), spawn_key=(zlib.crc32(label.encode()),))


def stage_int_seed(root: int, label: str) -> int:
    return int(stage_seed(root, label).generate_state(1, dtype=np.uint32)[0])


@dataclass
class ExperimentConfig:
    """One dataset and the settings for all three methods.

    Fields left as ``None`` take the simulated-data or real-data defaults in
    :meth:`resolved`.
    """

    scenario: int | None = None
    dataset: str | None = None
    n: int | None = None
    seed: int = 0
    K: int | None = None
    draws: int = 2000
    slice_iters: int = 10000
    burn_in: int = 2000
    grid_points: int = 400
    pad_sd: float | None = None
    kernel_sd: float | None = None
    m0: float | None = None
    s0: float | None = None
    alpha_shape: float | None = None
    alpha_rate: float | None = None
    restarts: int = 0
    timing_only: bool = False

    @property
    def is_real(self) -> bool:
        return self.dataset is not None

    @property
    def label(self) -> str:
        if self.is_real:
            return f"{datasets.canonical_name(self.dataset)}_seed{self.seed}"
        return f"scenario{self.scenario}_n{self.n}_seed{self.seed}"

    def resolved(self) -> "ExperimentConfig":
        if (self.scenario is None) == (self.dataset is None):
            raise ValueError("give exactly one of scenario or dataset")
        if self.is_real:
            datasets.canonical_name(self.dataset)
            defaults = dict(K=30, pad_sd=0.0, kernel_sd=0.5, m0=0.0, s0=0.5, alpha_shape=3.0, alpha_rate=3.0)
        else:
            if self.n is None or self.n < 2:
                raise ValueError("simulated experiments need n >= 2")
            defaults = dict(
                K=20, pad_sd=4.0, kernel_sd=1.0, m0=0.0, s0=1.0,
                alpha_shape=3.0, alpha_rate=3.0 * math.log(self.n),
            )
        out = ExperimentConfig(**asdict(self))
        for k, v in defaults.items():
            if getattr(out, k) is None:
                setattr(out, k, v)
        if out.draws < 1 or out.grid_points < 2:
            raise ValueError("draws must be >= 1 and grid_points >= 2")
        if not out.slice_iters > out.burn_in >= 0:
            raise ValueError("need slice_iters > burn_in >= 0")
        return out

    def model_config(self) -> ModelConfig:
        """Truncated model for the Laplace fits; alpha fixed at its prior mean."""
        c = self.resolved()
        return ModelConfig(K=c.K, alpha=c.alpha_shape / c.alpha_rate, sigma=c.kernel_sd, m0=c.m0, s0=c.s0)


@dataclass
class ExperimentReport:
    config: dict
    n: int
    K: int
    timings: dict
    lap: TVReport | None
    skew: TVReport | None
    slice_tv_to_truth: float | None
    grid: np.ndarray | None
    means: dict
    diagnostics: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return ExperimentConfig(**self.config).label

    def summary_rows(self) -> list[dict]:
        rows = []
        name = self.config["dataset"] or f"scenario{self.config['scenario']}"
        for m in METHODS:
            rep = getattr(self, m, None) if m != "slice" else None
            rows.append(
                {
                    "dataset": name,
                    "method": m,
                    "n": self.n,
                    "K": self.K,
                    "seed": self.config["seed"],
                    "time_sec": self.timings.get(m),
                    "tv_truth": rep.tv_to_truth if rep else (self.slice_tv_to_truth if m == "slice" else None),
                    "tv_slice_mean": rep.tv_to_slice_mean if rep else None,
                    "median_pointwise_tv": rep.median_pointwise_tv if rep else None,
                    "median_pointwise_tv_full": rep.median_pointwise_tv_full if rep else None,
                    "improvement_pct": rep.improvement_pct if rep else None,
                }
            )
        return rows

    def to_json_dict(self) -> dict:
        """Everything except wall-clock timings, so equal seeds give equal JSON."""
        return {
            "config": self.config,
            "n": self.n,
            "K": self.K,
            "slice_tv_to_truth": self.slice_tv_to_truth,
            "lap": self.lap.to_dict() if self.lap else None,
            "skew": self.skew.to_dict() if self.skew else None,
            "grid": None if self.grid is None else [float(x) for x in self.grid],
            "density_mean": {k: [float(x) for x in v] for k, v in self.means.items()},
            "diagnostics": self.diagnostics,
        }


def _load_data(cfg: ExperimentConfig):
    if cfg.is_real:
        ds = datasets.load(cfg.dataset)
        return ds.standardized, None
    spec = scenarios.ScenarioSpec(cfg.scenario, cfg.n, stage_int_seed(cfg.seed, "data"))
    return scenarios.generate(spec)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentReport:
    """Run Laplace, skew-Laplace and the slice benchmark on one dataset.

    Laplace time covers mode search, covariance and Gaussian sampling. Skew
    time covers the same fit plus proposals and skew weights. Slice time is
    the chain alone. When ``out_dir`` is given the artifacts are written
    there; on failure nothing is left behind.
    """
    try:
        cfg = cfg.resolved()
    except ValueError as err:
        raise ExperimentError("config", str(err)) from err
    stage = "data"
    try:
        y, truth = _load_data(cfg)
        model = cfg.model_config()
        timings = {}
        diag = {}

        stage = "lap"
        t0 = time.perf_counter()
        fit = fit_laplace(model, y, restarts=cfg.restarts, seed=stage_seed(cfg.seed, "restarts"))
        t_fit = time.perf_counter() - t0
        t0 = time.perf_counter()
        lap_draws = sample_gaussian(fit, cfg.draws, stage_seed(cfg.seed, "lap"))
        timings["lap"] = t_fit + time.perf_counter() - t0
        diag.update(jitter=fit.jitter, opt_iters=fit.opt_iters, grad_norm_at_mode=fit.grad_norm_at_mode)

        stage = "skew"
        ctx = SkewWeightContext(fit, DPMTarget(model, y))
        t0 = time.perf_counter()
        sk = sample_skew_laplace(ctx, cfg.draws, stage_seed(cfg.seed, "skew"), details=True)
        timings["skew"] = t_fit + time.perf_counter() - t0
        diag["skew_keep_rate"] = sk.keep_rate

        stage = "slice"
        chain = run_slice(
            model, y, cfg.slice_iters, cfg.burn_in,
            seed=stage_seed(cfg.seed, "slice"),
            alpha_prior=(cfg.alpha_shape, cfg.alpha_rate),
        )
        timings["slice"] = chain.wall_time
        diag["slice_mean_components"] = float(np.mean([s.H for s in chain.kept]))
        diag["slice_mean_occupied"] = float(np.mean([s.n_occupied for s in chain.kept]))

        lap_rep = skew_rep = slice_truth = grid = None
        means = {}
        if not cfg.timing_only:
            stage = "density"
            grid = make_grid(y, cfg.grid_points, pad_sd=cfg.pad_sd, sigma=cfg.kernel_sd)
            pad_rng = np.random.default_rng(stage_seed(cfg.seed, "slice-pad"))
            Vs, thetas = truncated_draws(chain, cfg.K, pad_rng, cfg.m0, cfg.s0)
            ens = {
                "lap": ensemble_from_unconstrained(model, lap_draws, grid, "lap"),
                "skew": ensemble_from_unconstrained(model, sk.draws, grid, "skew"),
                "slice": ensemble_from_sticks(Vs, thetas, cfg.kernel_sd, grid, "slice"),
            }
            f_true = None if truth is None else truth(grid.points)

            stage = "metrics"
            lap_rep, skew_rep = assemble_report(
                f_true, ens["lap"], ens["skew"], ens["slice"], summary_mask=data_range_mask(grid.points, y)
            )
            if f_true is not None:
                slice_truth = grid_tv(posterior_mean_density(ens["slice"]), f_true, grid.dx)
                means["truth"] = f_true
            for m in METHODS:
                means[m] = posterior_mean_density(ens[m])
            grid = grid.points

        report = ExperimentReport(
            config=asdict(cfg),
            n=int(np.asarray(y).size),
            K=cfg.K,
            timings=timings,
            lap=lap_rep,
            skew=skew_rep,
            slice_tv_to_truth=slice_truth,
            grid=grid,
            means=means,
            diagnostics=diag,
        )
        if out_dir is not None:
            stage = "write"
            report.paths = write_report(report, out_dir)
        return report
    except ExperimentError:
        raise
    except Exception as err:
        raise ExperimentError(stage, f"{type(err).__name__}: {err}") from err


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report(report: ExperimentReport, out_dir) -> dict:
    """Write the CSV/JSON artifacts for one experiment into ``out_dir``.

    Files are staged in a temporary sibling directory and moved into place at
    the end, so a failure leaves no partial output.
    """
    out_dir = os.path.abspath(str(out_dir))
    parent = os.path.dirname(out_dir)
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".partial-", dir=parent)
    try:
        names = {}
        rows = report.summary_rows()
        p = os.path.join(tmp, "summary.csv")
        with open(p, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
        names["summary"] = "summary.csv"

        if report.grid is not None:
            with open(os.path.join(tmp, "pointwise_tv.csv"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x", "lap", "skew", "in_data_range"])
                mask = report.lap.summary_mask
                if mask is None:
                    mask = np.ones(len(report.grid), dtype=bool)
                for x, a, b, m in zip(report.grid, report.lap.pointwise_tv, report.skew.pointwise_tv, mask):
                    w.writerow([repr(float(x)), repr(float(a)), repr(float(b)), int(m)])
            names["pointwise_tv"] = "pointwise_tv.csv"

            cols = ["truth"] if "truth" in report.means else []
            cols += list(METHODS)
            with open(os.path.join(tmp, "density_mean.csv"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x"] + cols)
                for r, x in enumerate(report.grid):
                    w.writerow([repr(float(x))] + [repr(float(report.means[c][r])) for c in cols])
            names["density_mean"] = "density_mean.csv"

        with open(os.path.join(tmp, "report.json"), "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=1, sort_keys=True)
        names["report"] = "report.json"
        with open(os.path.join(tmp, "timings.json"), "w") as fh:
            json.dump(report.timings, fh, indent=1, sort_keys=True)
        names["timings"] = "timings.json"

        if os.path.exists(out_dir):
            shutil.rmtree(out_dir)
        os.replace(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return {k: os.path.join(out_dir, v) for k, v in names.items()}


def read_summary(path) -> list[dict]:
    """Parse ``summary.csv`` back into typed rows (empty cells become None)."""
    ints = {"n", "K", "seed"}
    floats = {
        "time_sec", "tv_truth", "tv_slice_mean", "median_pointwise_tv",
        "median_pointwise_tv_full", "improvement_pct",
    }
    rows = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out = {}
            for k, v in r.items():
                if v == "":
                    out[k] = None
                elif k in ints:
                    out[k] = int(v)
                elif k in floats:
                    out[k] = float(v)
                else:
                    out[k] = v
            rows.append(out)
    return rows


def _run_one(args):
    cfg, out = args
    return run_experiment(cfg, out)


def run_batch(configs, out_root=None, workers: int = 1) -> list[ExperimentReport]:
    """Run several experiments, each into ``out_root/<label>``."""
    configs = list(configs)
    if not configs:
        raise ValueError("no experiments to run")
    labels = [c.label for c in configs]
    if len(set(labels)) != len(labels):
        raise ValueError("experiment labels must be distinct")
    jobs = [(c, None if out_root is None else os.path.join(str(out_root), c.label)) for c in configs]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def sweep_configs(base: ExperimentConfig, seeds, sizes=None, scenario_ids=None, dataset_names=None):
    """Cartesian product of seeds with sample sizes/scenarios or with dataset names."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seeds list is empty")
    out = []
    base_d = asdict(base)
    if dataset_names:
        for name in dataset_names:
            for s in seeds:
                out.append(ExperimentConfig(**{**base_d, "dataset": name, "scenario": None, "n": None, "seed": s}))
        return out
    for sid in scenario_ids or [base.scenario]:
        for n in sizes or [base.n]:
            for s in seeds:
                out.append(ExperimentConfig(**{**base_d, "scenario": sid, "dataset": None, "n": n, "seed": s}))
    return out


CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}
