"""Relative density-ratio fitting (RuLSIF) over one-dimensional samples.

The ratio is modelled as ``w(p) = sum_l theta_l K(p, c_l)`` with a Gaussian
kernel and one center per numerator sample. ``theta`` minimizes

    0.5 theta' H theta - h' theta + 0.5 lambda |theta|^2

where ``H`` mixes second moments of the kernel features under the numerator
samples (weight ``alpha``) and the denominator samples (weight
``1 - alpha``), and ``h`` is the numerator mean. In the score/label use the
numerator samples are predicted scores and the denominator samples are the
0/1 labels.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .data import kfold_indices

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RatioModel:
    centers: np.ndarray
    theta: np.ndarray
    sigma: float
    alpha: float
    lambda_theta: float
    cv_scores: dict = field(default_factory=dict, compare=False)
    # w evaluated at the centers, when the fit produced it for free
    fitted_values: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        c = np.asarray(self.centers, dtype=float)
        t = np.asarray(self.theta, dtype=float)
        if c.shape != t.shape or not (np.isfinite(c).all() and np.isfinite(t).all()):
            raise ValueError("centers and theta must be finite and equally long")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "theta", t)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "theta": self.theta.tolist(),
            "sigma": self.sigma,
            "alpha": self.alpha,
            "lambda_theta": self.lambda_theta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RatioModel":
        d = json.loads(text)
        return cls(np.array(d["centers"]), np.array(d["theta"]), d["sigma"], d["alpha"],
                   d["lambda_theta"])


@dataclass(frozen=True)
class RatioDesign:
    H: np.ndarray
    h: np.ndarray


def kernel(p, c, sigma: float):
    """``exp(-(p - c)^2 / (2 sigma))``; ``sigma`` plays the squared bandwidth."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    p = np.asarray(p, dtype=float)
    c = np.asarray(c, dtype=float)
    return np.exp(-((p - c) ** 2) / (2.0 * sigma))


def kernel_matrix(points, centers, sigma: float) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    centers = np.asarray(centers, dtype=float)
    return kernel(points[:, None], centers[None, :], sigma)


def _mix(alpha: float, swapped: bool) -> tuple[float, float]:
    """Coefficients on the (numerator, denominator) second-moment terms."""
    return (1.0 - alpha, alpha) if swapped else (alpha, 1.0 - alpha)


def relative_design(numerator, denominator, centers, sigma: float, alpha: float,
                    swapped: bool = False) -> RatioDesign:
    """Assemble ``H`` and ``h`` for arbitrary numerator/denominator samples."""
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    if num.size == 0 or den.size == 0:
        raise ValueError("empty input")
    a_num, a_den = _mix(alpha, swapped)
    k_num = kernel_matrix(num, centers, sigma)
    vals, counts = np.unique(den, return_counts=True)
    k_den = kernel_matrix(vals, centers, sigma)
    H = a_num / num.size * (k_num.T @ k_num) + a_den / den.size * ((k_den.T * counts) @ k_den)
    H = 0.5 * (H + H.T)
    return RatioDesign(H, k_num.mean(axis=0))


def _check_scores_labels(scores, labels):
    p = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    if p.size == 0:
        raise ValueError("empty input")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    if not (np.isfinite(p).all() and (p >= 0).all() and (p <= 1).all()):
        raise ValueError("scores must lie in [0, 1]")
    return p, y


def build_design(scores, labels, sigma: float, alpha: float,
                 alpha_swapped: bool = False) -> RatioDesign:
    """Design for scores as numerator samples and 0/1 labels as denominator samples.

    Kernel centers are the scores themselves. With ``alpha_swapped`` the
    ``alpha`` / ``1 - alpha`` coefficients trade places.
    """
    p, y = _check_scores_labels(scores, labels)
    return relative_design(p, y, p, sigma, alpha, alpha_swapped)


def solve_theta(design: RatioDesign, lambda_theta: float) -> np.ndarray:
    """Closed-form minimizer ``(H + lambda I)^-1 h``."""
    if lambda_theta < 0:
        raise ValueError("lambda_theta must be non-negative")
    a = design.H + lambda_theta * np.eye(design.h.size)
    try:
        theta = scipy.linalg.solve(a, design.h, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise np.linalg.LinAlgError(f"singular RuLSIF system at lambda={lambda_theta}") from exc
    resid = np.linalg.norm(a @ theta - design.h)
    if not np.isfinite(theta).all() or resid > 1e-8 * max(np.linalg.norm(design.h), 1e-300):
        raise np.linalg.LinAlgError(
            f"ill-conditioned RuLSIF system at lambda={lambda_theta} (residual {resid:.3g})"
        )
    return theta


def quadratic_objective(design: RatioDesign, theta, lambda_theta: float = 0.0) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(0.5 * theta @ design.H @ theta - design.h @ theta
                 + 0.5 * lambda_theta * theta @ theta)


def evaluate_weights(model: RatioModel, scores, clip: bool = True) -> np.ndarray:
    """``w(s) = sum_l theta_l K(s, c_l)``, negatives set to zero unless ``clip=False``."""
    w = kernel_matrix(np.atleast_1d(scores), model.centers, model.sigma) @ model.theta
    if clip:
        n_neg = int((w < 0).sum())
        if n_neg:
            log.debug("clipped %d of %d negative ratio values", n_neg, w.size)
        w = np.maximum(w, 0.0)
    return w


def _pivoted_cholesky(points: np.ndarray, sigma: float, tol: float = 1e-14) -> np.ndarray:
    """Greedy pivoted Cholesky ``F`` with ``K(points, points) ~= F F'``.

    Kernel columns are evaluated only at the chosen pivots, so the cost is
    ``O(n r^2)`` for numerical rank ``r``. Stops once the largest residual
    diagonal entry, which bounds every residual entry, is below ``tol``.
    """
    n = points.size
    resid = np.ones(n)  # K(p, p) = 1
    cols = []
    for _ in range(n):
        i = int(np.argmax(resid))
        if resid[i] <= tol:
            break
        col = kernel(points, points[i], sigma)
        for c in cols:
            col -= c * c[i]
        col /= np.sqrt(resid[i])
        cols.append(col)
        resid -= col * col
    return np.column_stack(cols)


def _reduced_features(num, den_vals, sigma: float):
    """Kernel features of numerator and denominator points in a small orthonormal basis.

    Centers are the numerator points. A pivoted Cholesky factor ``G`` of the
    kernel over numerator and denominator points together gives every
    feature vector as ``k(x, centers) = F @ G[x]`` with ``F`` the center
    rows of ``G``, to rounding level. So all feature vectors lie in the
    column span of ``F``, and a quadratic problem in ``theta`` restricted
    to that span has the same minimizer. Solves run in ``rank(F) << n``
    dimensions.

    Returns ``(z_num, z_den, q, F)``; ``theta = q @ t`` maps back.
    """
    g = _pivoted_cholesky(np.concatenate([num, den_vals]), sigma)
    factor = g[: num.size]
    q, r = np.linalg.qr(factor)
    return g[: num.size] @ r.T, g[num.size:] @ r.T, q, factor


def fit_relative_ratio(
    numerator,
    denominator,
    alpha: float,
    sigma_grid: Sequence[float],
    lambda_grid: Sequence[float],
    k: int = 5,
    seed: int = 0,
    swapped: bool = False,
) -> RatioModel:
    """Fit ``w`` with (sigma, lambda) picked by k-fold held-out objective.

    Centers stay fixed at all numerator samples across folds; each fold
    holds out part of both sample sets. The held-out criterion is
    ``0.5 theta' H_val theta - h_val' theta``.
    """
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    sigma_grid, lambda_grid = list(sigma_grid), list(lambda_grid)
    if not sigma_grid or not lambda_grid:
        raise ValueError("grids must be non-empty")
    if k < 2:
        raise ValueError("k must be at least 2")
    a_num, a_den = _mix(alpha, swapped)
    centers = num
    n_c = centers.size

    scores: dict[tuple[float, float], float] = {}
    if len(sigma_grid) * len(lambda_grid) > 1:
        folds_num = kfold_indices(num.size, k, seed)
        folds_den = kfold_indices(den.size, k, seed)
        vals, inv = np.unique(den, return_inverse=True)
        den_counts = [np.bincount(inv[f], minlength=vals.size).astype(float) for f in folds_den]
        den_total = np.bincount(inv, minlength=vals.size).astype(float)
        for sigma in sigma_grid:
            z_num, z_den, _, _ = _reduced_features(num, vals, sigma)
            eye = np.eye(z_num.shape[1])
            grams = [z_num[f].T @ z_num[f] for f in folds_num]
            sums = [z_num[f].sum(axis=0) for f in folds_num]
            gram_all, sum_all = sum(grams), sum(sums)
            results = np.zeros((k, len(lambda_grid)))
            for i, (fn, fd) in enumerate(zip(folds_num, folds_den)):
                n_tr, m_tr = num.size - fn.size, den.size - fd.size
                c_tr = den_total - den_counts[i]
                H_tr = a_num / n_tr * (gram_all - grams[i]) + a_den / m_tr * (
                    (z_den.T * c_tr) @ z_den)
                h_tr = (sum_all - sums[i]) / n_tr
                H_va = a_num / fn.size * grams[i] + a_den / fd.size * (
                    (z_den.T * den_counts[i]) @ z_den)
                h_va = sums[i] / fn.size
                H_tr = 0.5 * (H_tr + H_tr.T)
                for j, lam in enumerate(lambda_grid):
                    try:
                        t = scipy.linalg.solve(H_tr + lam * eye, h_tr, assume_a="pos")
                    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
                        results[i, j] = np.inf
                        continue
                    results[i, j] = 0.5 * t @ H_va @ t - h_va @ t
            for j, lam in enumerate(lambda_grid):
                scores[(sigma, lam)] = float(results[:, j].mean())
        finite = {key: v for key, v in scores.items() if np.isfinite(v)}
        if not finite:
            raise np.linalg.LinAlgError("every RuLSIF grid cell failed")
        # ties: larger lambda, then smaller sigma
        best_sigma, best_lam = min(finite, key=lambda c: (finite[c], -c[1], c[0]))
    else:
        best_sigma, best_lam = sigma_grid[0], lambda_grid[0]

    theta, fitted = _reduced_solve(num, den, best_sigma, best_lam, a_num, a_den)
    return RatioModel(centers, theta, best_sigma, alpha, best_lam, scores, fitted)


def fit_ratio(
    scores,
    labels,
    alpha: float,
    sigma_grid: Sequence[float],
    lambda_grid: Sequence[float],
    k: int = 5,
    seed: int = 0,
    alpha_swapped: bool = False,
) -> RatioModel:
    """Fit the score-vs-label relative ratio with cross-validated (sigma, lambda)."""
    p, y = _check_scores_labels(scores, labels)
    return fit_relative_ratio(p, y, alpha, sigma_grid, lambda_grid, k, seed, alpha_swapped)


def fit_fixed(scores, labels, alpha: float, sigma: float, lambda_theta: float,
              alpha_swapped: bool = False, reduced: bool = True) -> RatioModel:
    """Refit at given hyperparameters, skipping cross-validation.

    ``reduced=True`` solves the same system in the low-rank span of the
    kernel features (agrees with :func:`solve_theta` to rounding level);
    ``reduced=False`` forms the dense ``n x n`` system.
    """
    p, y = _check_scores_labels(scores, labels)
    if not reduced:
        theta = solve_theta(build_design(p, y, sigma, alpha, alpha_swapped), lambda_theta)
        return RatioModel(p, theta, sigma, alpha, lambda_theta)
    theta, fitted = _reduced_solve(p, y, sigma, lambda_theta, *_mix(alpha, alpha_swapped))
    return RatioModel(p, theta, sigma, alpha, lambda_theta, fitted_values=fitted)


def _reduced_solve(num, den, sigma, lambda_theta, a_num, a_den):
    """``theta`` with centers at ``num``, solved in the reduced basis; also ``w`` at the centers."""
    vals, counts = np.unique(den, return_counts=True)
    z_num, z_den, q, factor = _reduced_features(num, vals, sigma)
    H = a_num / num.size * (z_num.T @ z_num) + a_den / den.size * ((z_den.T * counts) @ z_den)
    H = 0.5 * (H + H.T) + lambda_theta * np.eye(H.shape[0])
    try:
        t = scipy.linalg.solve(H, z_num.mean(axis=0), assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise np.linalg.LinAlgError(f"singular RuLSIF system at lambda={lambda_theta}") from exc
    theta = q @ t
    return theta, factor @ (factor.T @ theta)
