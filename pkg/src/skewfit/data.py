"""Datasets: CSV ingestion, normalization, splitting and the synthetic generator."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

log = logging.getLogger(__name__)

NA_TOKENS = frozenset({"", "na", "?", "nan"})


def make_rng(seed: int) -> np.random.Generator:
    """PCG64-backed generator; bit-stable for a given numpy release."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    name: str = "data"
    dropped_rows: int = 0

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.labels)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"features must be a non-empty n x d matrix, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0/1")
        names = tuple(self.feature_names) if self.feature_names else tuple(
            f"x{j + 1}" for j in range(x.shape[1])
        )
        if len(names) != x.shape[1]:
            raise ValueError("feature_names length does not match feature count")
        y = y.astype(np.int8)
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    def has_both_classes(self) -> bool:
        return 0 < self.n_positive < self.n

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.feature_names, self.name)

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(features, self.labels, self.feature_names, self.name)


def _is_na(cell: str) -> bool:
    return cell.strip().lower() in NA_TOKENS


def load_csv(
    path,
    label_column: str,
    positive_label: str,
    drop_columns: Sequence[str] = (),
) -> Dataset:
    """Read a headed CSV into a :class:`Dataset`.

    Rows with any missing cell are dropped. The label column maps
    ``positive_label`` to 1 and every other value to 0. Columns listed in
    ``drop_columns`` (identifiers and the like) are ignored.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [r for r in reader if r]

    if label_column not in header:
        raise KeyError(f"{path}: no label column {label_column!r}; have {header}")
    unknown = set(drop_columns) - set(header)
    if unknown:
        raise KeyError(f"{path}: cannot drop unknown columns {sorted(unknown)}")
    label_idx = header.index(label_column)
    feat_idx = [j for j, h in enumerate(header) if j != label_idx and h not in drop_columns]
    if not feat_idx:
        raise ValueError(f"{path}: no feature columns")

    xs, ys, dropped = [], [], 0
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        if _is_na(row[label_idx]) or any(_is_na(row[j]) for j in feat_idx):
            dropped += 1
            continue
        try:
            xs.append([float(row[j]) for j in feat_idx])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-numeric feature cell ({exc})") from None
        ys.append(1 if row[label_idx].strip() == positive_label else 0)

    if dropped:
        log.info("%s: dropped %d row(s) with missing values", path.name, dropped)
    if not xs:
        raise ValueError(f"{path}: no rows left after dropping missing values")
    return Dataset(
        np.array(xs),
        np.array(ys),
        tuple(header[j] for j in feat_idx),
        name=path.stem,
        dropped_rows=dropped,
    )


def clean(data: Dataset) -> Dataset:
    """Drop rows holding non-finite features. Idempotent."""
    keep = np.isfinite(data.features).all(axis=1)
    if keep.all():
        return data
    if not keep.any():
        raise ValueError("no rows left after cleaning")
    out = data.subset(keep)
    return Dataset(out.features, out.labels, out.feature_names, data.name,
                   data.dropped_rows + int((~keep).sum()))


@dataclass(frozen=True)
class NormalizationStats:
    means: np.ndarray
    stddevs: np.ndarray
    constant: np.ndarray = field(default=None)

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        sd = np.asarray(self.stddevs, dtype=float)
        constant = (
            np.asarray(self.constant, dtype=bool) if self.constant is not None else ~(sd > 0)
        )
        sd = np.where(constant, 1.0, sd)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stddevs", sd)
        object.__setattr__(self, "constant", constant)

    @classmethod
    def identity(cls, d: int) -> "NormalizationStats":
        return cls(np.zeros(d), np.ones(d))


def fit_normalizer(train: Dataset) -> NormalizationStats:
    """Column means and sample (n - 1) standard deviations of ``train``."""
    if train.n < 2:
        raise ValueError("need at least 2 rows to fit a normalizer")
    x = train.features
    means = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    constant = ~(sd > 1e-12 * np.maximum(1.0, np.abs(means)))
    return NormalizationStats(means, sd, constant)


def apply_normalizer(stats: NormalizationStats, data: Dataset) -> Dataset:
    if data.d != stats.means.shape[0]:
        raise ValueError(f"normalizer fitted on {stats.means.shape[0]} columns, data has {data.d}")
    z = (data.features - stats.means) / stats.stddevs
    # constant columns carry no signal; map them to exactly zero
    z[:, stats.constant] = 0.0
    return data.with_features(z)


def invert_normalizer(stats: NormalizationStats, data: Dataset) -> Dataset:
    return data.with_features(data.features * stats.stddevs + stats.means)


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    train_index: np.ndarray
    test_index: np.ndarray


def split(data: Dataset, train_fraction: float, seed: int) -> SplitPair:
    """Random train/test partition; train size is ``round(n * train_fraction)``."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    perm = make_rng(seed).permutation(data.n)
    n_train = int(round(data.n * train_fraction))
    tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    pair = SplitPair(data.subset(tr), data.subset(te), seed, tr, te)
    if n_train == 0 or n_train == data.n:
        warnings.warn("split left one side empty", RuntimeWarning, stacklevel=2)
    elif not pair.train.has_both_classes():
        warnings.warn("training split holds a single class", RuntimeWarning, stacklevel=2)
    return pair


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle ``0..n-1`` and deal it into ``k`` near-equal folds."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} items")
    perm = make_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


@dataclass(frozen=True)
class SyntheticSetting:
    """True coefficients for the synthetic generator.

    ``beta_true[0]`` multiplies a constant 1, the remaining entries multiply
    independent standard normal features.
    """

    id: int
    beta_true: tuple[float, ...]
    expected_positive_ratio: float


SETTINGS: dict[int, SyntheticSetting] = {
    s.id: s
    for s in (
        SyntheticSetting(1, (-1, 1, 0, 0, 0, 0, 0, 0, 0, 0), 0.29),
        SyntheticSetting(2, (-1, 0, -1, -1, 1, -2, 0, 0, 0, 0), 0.37),
        SyntheticSetting(3, (1, 0, 0, 0, 0, 0, 0, -1, 2, 0), 0.64),
        SyntheticSetting(4, (0, 0, 0, -1, 2, 0, 0, 0, 0, 0), 0.50),
        SyntheticSetting(5, (-4, 0, 0, 0, 2, 0, 0, 0, 0, 0), 0.06),
        SyntheticSetting(6, (4, 0, 0, 3, 0, 0, 0, 0, 0, 0), 0.88),
    )
}


def generate_synthetic(setting: SyntheticSetting | int, n: int, seed: int) -> Dataset:
    """Draw ``n`` rows with Bernoulli labels from a logistic model."""
    if isinstance(setting, int):
        try:
            setting = SETTINGS[setting]
        except KeyError:
            raise ValueError(f"unknown synthetic setting {setting}; choose 1-6") from None
    if n < 1:
        raise ValueError("n must be positive")
    beta = np.asarray(setting.beta_true, dtype=float)
    if beta.shape != (10,):
        raise ValueError("beta_true must have 10 entries")
    rng = make_rng(seed)
    x = rng.standard_normal((n, beta.size - 1))
    p = expit(beta[0] + x @ beta[1:])
    y = (rng.random(n) < p).astype(np.int8)
    return Dataset(x, y, tuple(f"x{j}" for j in range(1, beta.size)),
                   name=f"setting{setting.id}")


def write_csv(data: Dataset, path, label_column: str = "y") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*data.feature_names, label_column])
        for row, y in zip(data.features, data.labels):
            w.writerow([*(repr(float(v)) for v in row), int(y)])


def positive_ratio(data: Dataset) -> float:
    return data.n_positive / data.n if data.n else math.nan
