"""Dataset ingestion, Monte-Carlo splitting and standardization.

CSV convention: comma-separated, UTF-8, optional single header row
(auto-detected), last column is the regression target.  Named datasets are
resolved through a JSON registry file (name -> csv path) rooted at
``PHENOGP_DATA_DIR``, with a handful of built-in synthetic generators as
desk-scale stand-ins for real benchmark suites.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

DATA_DIR_ENV = "PHENOGP_DATA_DIR"
REGISTRY_FILENAME = "registry.json"


class DataError(ValueError):
    """Unreadable or malformed dataset input."""


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d)
    targets: np.ndarray  # (n,)
    name: str = "unnamed"
    provenance: str = ""

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        targs = np.ascontiguousarray(self.targets, dtype=np.float64)
        if feats.ndim != 2 or targs.ndim != 1 or feats.shape[0] != targs.shape[0]:
            raise DataError("features must be (n, d) and targets (n,) with matching n")
        if feats.shape[0] < 2 or feats.shape[1] < 1:
            raise DataError("need at least 2 rows and 1 feature column")
        if not (np.isfinite(feats).all() and np.isfinite(targs).all()):
            raise DataError("dataset contains missing or non-finite values")
        feats.setflags(write=False)
        targs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targs)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    test: Dataset
    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float
    target_std: float


def _float_or_none(cell: str) -> Optional[float]:
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, name: Optional[str] = None) -> Dataset:
    """Parse a numeric rectangular CSV; the last column is the target."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]  # drop completely blank lines
    if not rows:
        raise DataError(f"{path}: empty file")
    start = 0
    if any(_float_or_none(c.strip()) is None for c in rows[0]):
        start = 1  # header row
        if len(rows) == 1:
            raise DataError(f"{path}: no data rows after header")
    width = len(rows[start])
    if width < 2:
        raise DataError(f"{path}: need at least one feature column plus a target")
    data = np.empty((len(rows) - start, width))
    for r in range(start, len(rows)):
        row = rows[r]
        if len(row) != width:
            raise DataError(f"{path}: row {r + 1} has {len(row)} cells, expected {width}")
        for c, cell in enumerate(row):
            value = _float_or_none(cell.strip())
            if value is None:
                raise DataError(f"{path}: non-numeric cell {cell!r} at row {r + 1}, column {c + 1}")
            data[r - start, c] = value
    dataset_name = name or path.stem
    return Dataset(data[:, :-1], data[:, -1], dataset_name, provenance=str(path))


def standardize(split: SplitDataset) -> SplitDataset:
    """Zero-mean/unit-std transform with parameters fitted on the train part.

    Population standard deviation; zero-variance columns map to all zeros.
    The target column is standardized the same way.
    """
    mu = split.train.features.mean(axis=0)
    sigma = split.train.features.std(axis=0)
    tmu = float(split.train.targets.mean())
    tsigma = float(split.train.targets.std())
    return _apply_standardization(split.train, split.test, mu, sigma, tmu, tsigma)


def _transform(x: np.ndarray, mu, sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    safe = np.where(sigma == 0.0, 1.0, sigma)
    z = (x - mu) / safe
    if z.ndim == 2:
        z[:, sigma == 0.0] = 0.0
    elif sigma == 0.0:
        z[:] = 0.0
    return z


def _apply_standardization(train, test, mu, sigma, tmu, tsigma) -> SplitDataset:
    def make(ds: Dataset) -> Dataset:
        return Dataset(
            _transform(ds.features, mu, sigma),
            _transform(ds.targets, tmu, tsigma),
            ds.name,
            ds.provenance,
        )

    return SplitDataset(make(train), make(test), mu, np.asarray(sigma), tmu, float(tsigma))


def monte_carlo_split(
    ds: Dataset, ratio: float, rng: np.random.Generator, scope: str = "train"
) -> SplitDataset:
    """Random train/test partition plus standardization.

    ``scope="train"`` (default) fits standardization on the train partition
    only; ``scope="full"`` fits it on the whole dataset before the split.
    """
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    if scope not in ("train", "full"):
        raise DataError(f"standardize_scope must be 'train' or 'full', got {scope!r}")
    n = ds.n
    n_train = round_half_up(ratio * n)
    if n_train < 1 or n - n_train < 1:
        raise DataError(f"split ratio {ratio} leaves an empty partition for n={n}")
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = Dataset(ds.features[train_idx], ds.targets[train_idx], ds.name, ds.provenance)
    test = Dataset(ds.features[test_idx], ds.targets[test_idx], ds.name, ds.provenance)
    if scope == "full":
        mu = ds.features.mean(axis=0)
        sigma = ds.features.std(axis=0)
        return _apply_standardization(
            train, test, mu, sigma, float(ds.targets.mean()), float(ds.targets.std())
        )
    return standardize(SplitDataset(train, test, np.zeros(ds.d), np.ones(ds.d), 0.0, 1.0))


# ---------------------------------------------------------------------------
# synthetic generators
# ---------------------------------------------------------------------------

def _gen_poly3(x: np.ndarray) -> np.ndarray:
    return x[:, 0] ** 3 + x[:, 1]


def _gen_rational2(x: np.ndarray) -> np.ndarray:
    return (x[:, 0] * x[:, 1]) / (1.0 + x[:, 1] * x[:, 1])


def _gen_blend7(x: np.ndarray) -> np.ndarray:
    return 2.0 * x[:, 0] - 1.5 * x[:, 3] + x[:, 1] * x[:, 2] + 0.5 * x[:, 4] * x[:, 4]


GENERATORS: dict[str, tuple[Callable[[np.ndarray], np.ndarray], int]] = {
    "poly3": (_gen_poly3, 2),
    "rational2": (_gen_rational2, 2),
    "blend7": (_gen_blend7, 7),
}


def synthetic_dataset(generator_id: str, n: int, noise: float, rng: np.random.Generator) -> Dataset:
    """Reproducible synthetic regression data from a named generator."""
    if generator_id not in GENERATORS:
        raise DataError(
            f"unknown generator {generator_id!r}; known: {sorted(GENERATORS)}"
        )
    fn, d = GENERATORS[generator_id]
    x = rng.normal(size=(n, d))
    y = fn(x)
    if noise:
        y = y + noise * rng.normal(size=n)
    return Dataset(x, y, generator_id, provenance=f"synthetic:{generator_id}(n={n}, noise={noise})")


# Named built-in datasets: fixed generation seeds so the same name always
# denotes the same data, while the train/test split still varies per run.
BUILTIN_DATASETS: dict[str, tuple[str, int, float, int]] = {
    "poly3": ("poly3", 103, 0.1, 1001),
    "rational2": ("rational2", 103, 0.2, 1002),
    "blend7": ("blend7", 103, 0.3, 1003),
}


def builtin_dataset(name: str) -> Dataset:
    gen_id, n, noise, seed = BUILTIN_DATASETS[name]
    return synthetic_dataset(gen_id, n, noise, np.random.default_rng(seed))


def _registry_path(explicit: Optional[str] = None) -> Optional[Path]:
    if explicit:
        return Path(explicit)
    root = os.environ.get(DATA_DIR_ENV)
    if root:
        return Path(root) / REGISTRY_FILENAME
    return None


def load_registry(path: Optional[str] = None) -> dict[str, Path]:
    """Dataset name -> csv path map; relative paths anchor at the registry."""
    reg_path = _registry_path(path)
    if reg_path is None or not reg_path.exists():
        return {}
    with open(reg_path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise DataError(f"{reg_path}: registry must be a JSON object of name -> path")
    base = reg_path.parent
    return {name: (base / p if not Path(p).is_absolute() else Path(p)) for name, p in raw.items()}


def resolve_dataset(name_or_path: str, registry_path: Optional[str] = None) -> Dataset:
    """Resolve a CLI dataset argument: file path, registry name, or built-in."""
    p = Path(name_or_path)
    if p.exists():
        return load_csv(p)
    registry = load_registry(registry_path)
    if name_or_path in registry:
        return load_csv(registry[name_or_path], name=name_or_path)
    if name_or_path in BUILTIN_DATASETS:
        return builtin_dataset(name_or_path)
    raise DataError(
        f"cannot resolve dataset {name_or_path!r}: not a file, not in the registry, "
        f"and not one of the built-ins {sorted(BUILTIN_DATASETS)}"
    )
