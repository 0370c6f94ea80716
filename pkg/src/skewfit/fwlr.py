"""Alternating fit of logistic coefficients and relative-ratio sample weights."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import glm, rulsif
from .data import Dataset
from .metrics import ScoredLabels

log = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-6
DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0)


@dataclass(frozen=True)
class FwlrConfig:
    alpha: float = 0.5
    epsilon: float = 1e-6
    max_outer_iterations: int = 100
    lambda_beta: float = 0.1
    lambda_theta_grid: Sequence[float] = DEFAULT_GRID
    sigma_grid: Sequence[float] = DEFAULT_GRID
    cv_folds: int = 5
    # False: pick (sigma, lambda_theta) once, on the first pass, and keep them
    reselect_every_iteration: bool = True
    renormalize_weights: bool = True
    alpha_swapped: bool = False
    include_intercept: bool = True
    optimizer: glm.OptimizerSettings = field(default_factory=glm.OptimizerSettings)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be at least 1")
        if not self.lambda_theta_grid or not self.sigma_grid:
            raise ValueError("RuLSIF grids must be non-empty")


@dataclass
class IterationRecord:
    iteration: int
    step_sq: float
    weighted_loss: float
    weight_min: float
    weight_max: float
    weight_mean: float
    clip_rate: float
    sigma: float
    lambda_theta: float


@dataclass
class FwlrTrace:
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r)) + "\n" for r in self.records)


def training_weights(raw: np.ndarray, renormalize: bool = True) -> tuple[np.ndarray, float]:
    """Clip ratio values at zero, rescale to mean one, floor at ``WEIGHT_FLOOR``.

    Returns the weights and the fraction of values that were negative.
    """
    clip_rate = float(np.mean(raw < 0))
    w = np.maximum(raw, 0.0)
    mean = w.mean()
    if not mean > 0:
        log.warning("all ratio values non-positive; falling back to uniform weights")
        w = np.ones_like(w)
    elif renormalize:
        w = w / mean
    return np.maximum(w, WEIGHT_FLOOR), clip_rate


def fit_fwlr(data: Dataset, config: FwlrConfig = FwlrConfig()):
    """Alternate weighted logistic fits with ratio re-estimation.

    Starts from the unweighted penalized fit, then repeats: score the
    training rows, fit the ratio of scores against labels, refit with the
    resulting weights. Stops once the squared coefficient change drops
    below ``epsilon`` (checked after each pass) or after
    ``max_outer_iterations`` passes.

    Returns ``(params, ratio_model, trace)``.
    """
    if not data.has_both_classes():
        raise ValueError("training data must contain both classes")
    y = data.labels
    params = glm.fit(data, config.lambda_beta, None, config.optimizer, config.include_intercept)
    trace = FwlrTrace()
    ratio = None
    hyper = None
    for it in range(1, config.max_outer_iterations + 1):
        previous = params.beta
        p = glm.score(params, data.features)
        if hyper is None or config.reselect_every_iteration:
            ratio = rulsif.fit_ratio(p, y, config.alpha, config.sigma_grid,
                                     config.lambda_theta_grid, config.cv_folds, config.seed,
                                     config.alpha_swapped)
            hyper = (ratio.sigma, ratio.lambda_theta)
        else:
            ratio = rulsif.fit_fixed(p, y, config.alpha, *hyper, config.alpha_swapped)
        raw = ratio.fitted_values
        if raw is None:
            raw = rulsif.evaluate_weights(ratio, p, clip=False)
        w, clip_rate = training_weights(raw, config.renormalize_weights)
        params = glm.fit(data, config.lambda_beta, w, config.optimizer, config.include_intercept)
        step_sq = float(np.sum((params.beta - previous) ** 2))
        trace.records.append(IterationRecord(
            it, step_sq, glm.weighted_cross_entropy(params, data, w),
            float(w.min()), float(w.max()), float(w.mean()), clip_rate, *hyper,
        ))
        if step_sq < config.epsilon:
            trace.converged = True
            break
    else:
        log.info("fwlr hit %d outer iterations without converging (last step %.3g)",
                 config.max_outer_iterations, trace.records[-1].step_sq)
    return params, ratio, trace


def predict(model: glm.ModelParams, data: Dataset) -> ScoredLabels:
    return ScoredLabels(glm.score(model, data.features), data.labels)
