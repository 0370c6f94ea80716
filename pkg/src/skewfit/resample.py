"""SMOTE oversampling of the minority class."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .data import Dataset, make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0  # minority / majority count after oversampling
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError("target_ratio must lie in (0, 1]")


def minority_label(data: Dataset) -> int:
    return 1 if data.n_positive <= data.n - data.n_positive else 0


def smote(data: Dataset, config: SmoteConfig = SmoteConfig()) -> Dataset:
    """Append synthetic minority rows ``x + u (x_nn - x)`` until the target ratio.

    ``x`` is drawn uniformly from the minority rows, ``x_nn`` uniformly from
    its ``k`` nearest minority neighbours, ``u ~ U(0, 1)``. The original rows
    come first and are left untouched.
    """
    label = minority_label(data)
    minority = data.features[data.labels == label]
    n_min, n_maj = minority.shape[0], data.n - minority.shape[0]
    if n_min < 2:
        raise ValueError(f"SMOTE needs at least 2 minority rows, got {n_min}")
    n_new = int(round(config.target_ratio * n_maj)) - n_min
    if n_new <= 0:
        return data

    k = config.k_neighbors
    if k > n_min - 1:
        warnings.warn(f"k_neighbors={k} exceeds minority count - 1; using {n_min - 1}",
                      RuntimeWarning, stacklevel=2)
        k = n_min - 1
    # first neighbour returned is the point itself
    _, nn = cKDTree(minority).query(minority, k=k + 1)
    nn = np.asarray(nn).reshape(n_min, k + 1)[:, 1:]

    rng = make_rng(config.seed)
    base = rng.integers(0, n_min, size=n_new)
    pick = nn[base, rng.integers(0, k, size=n_new)]
    u = rng.random((n_new, 1))
    synthetic = minority[base] + u * (minority[pick] - minority[base])
    log.debug("SMOTE added %d synthetic rows (k=%d)", n_new, k)

    return Dataset(
        np.vstack([data.features, synthetic]),
        np.concatenate([data.labels, np.full(n_new, label, dtype=np.int8)]),
        data.feature_names,
        data.name,
    )


def knn_table(data: Dataset, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Minority rows and their ``k`` nearest minority neighbours (indices)."""
    minority = data.features[data.labels == minority_label(data)]
    k = min(k, minority.shape[0] - 1)
    _, nn = cKDTree(minority).query(minority, k=k + 1)
    return minority, np.asarray(nn).reshape(minority.shape[0], k + 1)[:, 1:]
