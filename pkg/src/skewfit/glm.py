"""L2-penalized logistic regression: plain, weighted, cost-sensitive and soft-F."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .data import Dataset

log = logging.getLogger(__name__)

SCORE_EPS = 1e-12


@dataclass(frozen=True)
class OptimizerSettings:
    gradient_tolerance: float = 1e-6
    max_iterations: int = 500
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    n_iter: int
    converged: bool
    values: list[float] = field(default_factory=list)


def minimize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    settings: OptimizerSettings = OptimizerSettings(),
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> OptimizeResult:
    """Descent with Armijo backtracking.

    Newton steps when ``hess`` is given, BFGS inverse-Hessian updates
    otherwise. Stops once the Euclidean gradient norm is at most the
    tolerance. Accepted steps never increase the objective beyond
    its rounding noise.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    values = [f]
    inv_h = np.eye(x.size)
    gnorm = float(np.linalg.norm(g))
    it = 0
    while gnorm > settings.gradient_tolerance and it < settings.max_iterations:
        it += 1
        if hess is not None:
            try:
                direction = -np.linalg.solve(hess(x), g)
            except np.linalg.LinAlgError:
                direction = -g
        else:
            direction = -inv_h @ g
        slope = float(g @ direction)
        if not slope < 0:
            # not a descent direction; restart from steepest descent
            inv_h = np.eye(x.size)
            direction, slope = -g, -float(g @ g)

        step = 1.0
        for _ in range(settings.max_backtracks):
            x_new = x + step * direction
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f + settings.armijo_c * step * slope:
                break
            # near the optimum the decrease drops below the rounding noise of f;
            # accept a step that shrinks the gradient without measurably raising f
            if (np.isfinite(f_new) and f_new - f <= 8 * np.finfo(float).eps * abs(f)
                    and np.linalg.norm(g_new) < gnorm):
                break
            step *= settings.backtrack
        else:
            log.debug("line search failed at iteration %d (|g|=%.3g)", it, gnorm)
            break

        if hess is None:
            s, yv = x_new - x, g_new - g
            sy = float(s @ yv)
            if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
                if it == 1:
                    inv_h *= sy / float(yv @ yv)
                rho = 1.0 / sy
                a = np.eye(x.size) - rho * np.outer(s, yv)
                inv_h = a @ inv_h @ a.T + rho * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        values.append(f)
        gnorm = float(np.linalg.norm(g))

    converged = gnorm <= settings.gradient_tolerance
    return OptimizeResult(x, float(f), gnorm, it, converged, values)


@dataclass(frozen=True)
class ModelParams:
    beta: np.ndarray
    lambda_beta: float = 0.0
    fitted: bool = False
    include_intercept: bool = True
    feature_names: tuple[str, ...] = ()
    converged: bool = True
    grad_norm: float = float("nan")
    n_iter: int = 0

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).ravel()
        if not np.isfinite(beta).all():
            raise ValueError("beta must be finite")
        if self.lambda_beta < 0:
            raise ValueError("lambda_beta must be non-negative")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_features(self) -> int:
        return self.beta.size - int(self.include_intercept)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "lambda_beta": self.lambda_beta,
            "include_intercept": self.include_intercept,
            "feature_names": list(self.feature_names),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelParams":
        return cls(
            beta=doc["beta"],
            lambda_beta=float(doc["lambda_beta"]),
            fitted=True,
            include_intercept=bool(doc["include_intercept"]),
            feature_names=tuple(doc.get("feature_names", ())),
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


def design_matrix(features: np.ndarray, include_intercept: bool = True) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if include_intercept:
        x = np.hstack([np.ones((x.shape[0], 1)), x])
    return x


def _design(params: ModelParams, data: Dataset) -> np.ndarray:
    if data.d != params.n_features:
        raise ValueError(f"model expects {params.n_features} features, data has {data.d}")
    return design_matrix(data.features, params.include_intercept)


def sigmoid(z):
    """Logistic function clamped to ``[1e-12, 1 - 1e-12]``."""
    return np.clip(expit(z), SCORE_EPS, 1.0 - SCORE_EPS)


def score(params: ModelParams, x) -> np.ndarray | float:
    """P(y = 1 | x) for one feature vector or a matrix of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if x.shape[-1] != params.n_features:
        raise ValueError(f"model expects {params.n_features} features, got {x.shape[-1]}")
    p = sigmoid(design_matrix(x, params.include_intercept) @ params.beta)
    return float(p[0]) if single else p


def _check_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"need {n} weights, got shape {w.shape}")
    if not np.isfinite(w).all():
        raise ValueError("weights must be finite")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    if not (w > 0).any():
        raise ValueError("weights are all zero")
    return w


def _nll(beta, x, y, w, lam):
    """Weighted negative log-likelihood plus ``lam * |beta|^2`` and its gradient."""
    z = x @ beta
    # log p = -log(1 + e^-z), log(1 - p) = -log(1 + e^z)
    loss = float(w @ (y * np.logaddexp(0.0, -z) + (1 - y) * np.logaddexp(0.0, z)))
    loss += lam * float(beta @ beta)
    grad = x.T @ (w * (expit(z) - y)) + 2.0 * lam * beta
    return loss, grad


def _nll_hessian(beta, x, w, lam):
    p = expit(x @ beta)
    return (x.T * (w * p * (1.0 - p))) @ x + 2.0 * lam * np.eye(beta.size)


def cross_entropy(params: ModelParams, data: Dataset) -> float:
    return weighted_cross_entropy(params, data, None)


def weighted_cross_entropy(params: ModelParams, data: Dataset, weights=None) -> float:
    x = _design(params, data)
    w = _check_weights(weights, data.n) if weights is not None else np.ones(data.n)
    return _nll(params.beta, x, data.labels.astype(float), w, params.lambda_beta)[0]


def gradient(params: ModelParams, data: Dataset, weights=None) -> np.ndarray:
    x = _design(params, data)
    w = _check_weights(weights, data.n)
    return _nll(params.beta, x, data.labels.astype(float), w, params.lambda_beta)[1]


def fit(
    data: Dataset,
    lambda_beta: float,
    weights=None,
    settings: OptimizerSettings = OptimizerSettings(),
    include_intercept: bool = True,
) -> ModelParams:
    """Minimize the (weighted) penalized cross-entropy from ``beta = 0``."""
    if not data.has_both_classes():
        raise ValueError("training data must contain both classes")
    if lambda_beta < 0:
        raise ValueError("lambda_beta must be non-negative")
    x = design_matrix(data.features, include_intercept)
    y = data.labels.astype(float)
    w = _check_weights(weights, data.n)
    res = minimize(
        lambda b: _nll(b, x, y, w, lambda_beta),
        np.zeros(x.shape[1]),
        settings,
        hess=lambda b: _nll_hessian(b, x, w, lambda_beta),
    )
    if not res.converged:
        log.warning("logistic fit stopped after %d iterations, |grad| = %.3g",
                    res.n_iter, res.grad_norm)
    return ModelParams(res.x, lambda_beta, True, include_intercept, data.feature_names,
                       res.converged, res.grad_norm, res.n_iter)


def cost_sensitive_weights(data: Dataset) -> np.ndarray:
    """Inverse class-frequency weights ``n / (2 * n_class)``; each class totals n/2."""
    n_pos = data.n_positive
    n_neg = data.n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("cost-sensitive weights need both classes")
    return np.where(data.labels == 1, data.n / (2.0 * n_pos), data.n / (2.0 * n_neg))


def _soft_f(beta, x, y, lam):
    """Expected-count F surrogate ``2 sum(p y) / (sum p + sum y)`` minus the penalty."""
    p = expit(x @ beta)
    tp, mp, npos = float(p @ y), float(p.sum()), float(y.sum())
    den = mp + npos
    value = 2.0 * tp / den - lam * float(beta @ beta)
    dp = x.T * (p * (1.0 - p))  # d p_i / d beta, one column per sample
    grad = 2.0 * (dp @ y * den - tp * dp.sum(axis=1)) / den**2 - 2.0 * lam * beta
    return value, grad


def soft_f(params: ModelParams, data: Dataset) -> float:
    return _soft_f(params.beta, _design(params, data), data.labels.astype(float),
                   params.lambda_beta)[0]


def soft_f_gradient(params: ModelParams, data: Dataset) -> np.ndarray:
    return _soft_f(params.beta, _design(params, data), data.labels.astype(float),
                   params.lambda_beta)[1]


def fit_soft_f(
    data: Dataset,
    lambda_beta: float,
    settings: OptimizerSettings = OptimizerSettings(),
    include_intercept: bool = True,
) -> ModelParams:
    """Maximize the smoothed F-measure of a logistic model by BFGS ascent."""
    if data.n_positive == 0:
        raise ValueError("soft-F fit needs at least one positive sample")
    x = design_matrix(data.features, include_intercept)
    y = data.labels.astype(float)

    def neg(b):
        v, g = _soft_f(b, x, y, lambda_beta)
        return -v, -g

    res = minimize(neg, np.zeros(x.shape[1]), settings)
    if not res.converged:
        log.info("soft-F fit stopped after %d iterations, |grad| = %.3g",
                 res.n_iter, res.grad_norm)
    return ModelParams(res.x, lambda_beta, True, include_intercept, data.feature_names,
                       res.converged, res.grad_norm, res.n_iter)


def with_beta(params: ModelParams, beta) -> ModelParams:
    return replace(params, beta=np.asarray(beta, dtype=float))
