"""Command line entry point: ``skewlap-dpm {run,simulate,real,bench}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from . import harness
from .datasets import DATASETS
from .harness import ExperimentConfig, ExperimentError

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with any of the flag settings; flags win")
    p.add_argument("--K", type=int, help="truncation level (default 20 simulated, 30 real)")
    p.add_argument("--draws", type=int, help="approximate posterior draws (default 2000)")
    p.add_argument("--slice-iters", type=int, help="slice sampler sweeps (default 10000)")
    p.add_argument("--burn-in", type=int, help="discarded slice sweeps (default 2000)")
    p.add_argument("--grid-points", type=int, help="density grid size (default 400)")
    p.add_argument("--restarts", type=int, help="extra Laplace mode searches with jittered starts")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--workers", type=int, default=1, help="parallel experiments")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewlap-dpm",
        description="Laplace and skew-Laplace approximations for DP mixtures, benchmarked against slice sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one experiment")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--scenario", type=int, choices=[1, 2, 3, 4])
    src.add_argument("--dataset", choices=sorted(DATASETS))
    run.add_argument("--n", type=int, help="sample size (simulated data)")
    run.add_argument("--seed", type=int, help="root seed")
    _common(run)

    sim = sub.add_parser("simulate", help="sample-size sweep for simulation scenarios")
    sim.add_argument("--scenario", type=int, nargs="+", choices=[1, 2, 3, 4])
    sim.add_argument("--n", type=int, nargs="+", help="sample sizes (default 20 ... 2000)")
    sim.add_argument("--seeds", type=int, nargs="*", help="root seeds (default: 0)")
    _common(sim)

    real = sub.add_parser("real", help="the vendored real datasets")
    real.add_argument("--dataset", nargs="+", choices=sorted(DATASETS))
    real.add_argument("--seeds", type=int, nargs="*")
    _common(real)

    bench = sub.add_parser("bench", help="timings only, no density metrics")
    bsrc = bench.add_mutually_exclusive_group()
    bsrc.add_argument("--scenario", type=int, nargs="+", choices=[1, 2, 3, 4])
    bsrc.add_argument("--dataset", nargs="+", choices=sorted(DATASETS))
    bench.add_argument("--n", type=int, nargs="+")
    bench.add_argument("--seeds", type=int, nargs="*")
    _common(bench)
    return parser


def _settings(args) -> dict:
    """Merge the JSON config file (if any) under the explicit flags."""
    merged = {}
    if args.config:
        with open(args.config) as fh:
            merged.update({k.replace("-", "_"): v for k, v in json.load(fh).items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command"):
            merged[k] = v
    return merged


def _base(settings: dict, **overrides) -> ExperimentConfig:
    kw = {k: v for k, v in settings.items() if k in harness.CONFIG_KEYS}
    kw.update(overrides)
    return ExperimentConfig(**kw)


def _as_list(v):
    if v is None:
        return None
    return v if isinstance(v, list) else [v]


def configs_from_args(args) -> list[ExperimentConfig]:
    s = _settings(args)
    cmd = args.command
    if cmd == "run":
        return [_base(s)]

    seeds = s.get("seeds", [0]) if "seeds" in s else [s.get("seed", 0)]
    if not seeds:
        raise ValueError("seeds list is empty")
    clean = {k: v for k, v in s.items() if k not in ("scenario", "dataset", "n", "seed")}
    if cmd == "real" or (cmd == "bench" and s.get("dataset")):
        names = _as_list(s.get("dataset")) or sorted(DATASETS)
        base = _base(clean, timing_only=cmd == "bench")
        return harness.sweep_configs(base, seeds, dataset_names=names)
    scen = _as_list(s.get("scenario")) or [1, 2, 3, 4]
    sizes = _as_list(s.get("n")) or list(harness.SAMPLE_SIZES)
    base = _base(clean, scenario=scen[0], n=sizes[0], timing_only=cmd == "bench")
    return harness.sweep_configs(base, seeds, sizes=sizes, scenario_ids=scen)


def _print_report(rep):
    cfg = rep.config
    name = cfg["dataset"] or f"scenario {cfg['scenario']}"
    t = rep.timings
    line = f"{name:12s} n={rep.n:<5d} seed={cfg['seed']:<4d} time lap={t['lap']:.3f}s skew={t['skew']:.3f}s slice={t['slice']:.3f}s"
    if rep.lap is not None:
        pct = rep.skew.improvement_pct
        line += (
            f" | TV to slice mean lap={rep.lap.tv_to_slice_mean:.4f} skew={rep.skew.tv_to_slice_mean:.4f}"
            f" ({'n/a' if pct is None else f'{pct:.0f}%'})"
        )
        if rep.lap.tv_to_truth is not None:
            line += (
                f" | TV to truth lap={rep.lap.tv_to_truth:.4f} skew={rep.skew.tv_to_truth:.4f}"
                f" slice={rep.slice_tv_to_truth:.4f}"
            )
    print(line, flush=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        configs = configs_from_args(args)
        settings = _settings(args)
        out = settings.get("out", "results")
        workers = int(settings.get("workers", 1))
        if args.command == "run":
            cfg = configs[0]
            reports = [harness.run_experiment(cfg, f"{out}/{cfg.resolved().label}")]
        else:
            reports = harness.run_batch(configs, out, workers=workers)
    except ExperimentError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as err:
        print(f"error: [config] {err}", file=sys.stderr)
        return 2
    for rep in reports:
        _print_report(rep)
    return 0


if __name__ == "__main__":
    sys.exit(main())
