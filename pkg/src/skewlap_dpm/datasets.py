"""Vendored univariate benchmark datasets, standardized on load.

Files live in ``skewlap_dpm/data`` as single-column CSVs with a header row.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

# name -> (file, expected size)
DATASETS = {
    "faithful": ("faithful.csv", 272),
    "galaxies": ("galaxies.csv", 82),
    "iris": ("iris.csv", 150),
    "rock": ("rock.csv", 48),
}
ALIASES = {
    "faithful-eruptions": "faithful",
    "galaxy": "galaxies",
    "iris-petal-length": "iris",
    "rock-peri": "rock",
}


class DatasetError(RuntimeError):
    pass


@dataclass(frozen=True)
class RealDataset:
    name: str
    raw: np.ndarray
    standardized: np.ndarray
    mean: float
    sd: float

    @property
    def n(self) -> int:
        return self.raw.size

    def unstandardize(self, z) -> np.ndarray:
        return np.asarray(z) * self.sd + self.mean


def canonical_name(name: str) -> str:
    key = ALIASES.get(name, name)
    if key not in DATASETS:
        raise DatasetError(f"unknown dataset {name!r}; choose from {sorted(DATASETS)}")
    return key


def load(name: str) -> RealDataset:
    """Load a dataset and standardize it with the sample (n-1) standard deviation."""
    key = canonical_name(name)
    fname, expected = DATASETS[key]
    try:
        text = resources.files("skewlap_dpm").joinpath("data", fname).read_text()
    except FileNotFoundError as err:
        raise DatasetError(f"data file {fname} is missing") from err
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    try:
        raw = np.array([float(v) for v in lines[1:]])
    except ValueError as err:
        raise DatasetError(f"could not parse {fname}: {err}") from err
    if raw.size != expected:
        raise DatasetError(f"{fname} has {raw.size} rows, expected {expected}")
    mean = float(raw.mean())
    sd = float(raw.std(ddof=1))
    return RealDataset(name=key, raw=raw, standardized=(raw - mean) / sd, mean=mean, sd=sd)
