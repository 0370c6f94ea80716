"""Experiment harness: repeated splits, per-method grid search, summaries and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import fwlr, glm, metrics
from .data import (
    Dataset,
    apply_normalizer,
    fit_normalizer,
    generate_synthetic,
    kfold_indices,
    load_csv,
    split,
)
from .resample import SmoteConfig, smote

log = logging.getLogger(__name__)

METHODS = ("proposed", "logistic", "cost_sensitive", "jansche", "smote")
METRICS = ("auc", "f_measure", "accuracy")
DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0)


class ConfigError(ValueError):
    pass


class GridSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # data source: either a CSV file or a synthetic setting id
    csv: Optional[str] = None
    label_column: str = "class"
    positive_label: str = "1"
    drop_columns: tuple[str, ...] = ()
    synthetic_setting: Optional[int] = None
    synthetic_n: int = 1000
    name: Optional[str] = None

    methods: tuple[str, ...] = METHODS
    trials: Optional[int] = None  # None: 100 synthetic, 30 real
    train_fraction: float = 0.7
    cv_folds: int = 5
    lambda_beta_grid: tuple[float, ...] = DEFAULT_GRID
    lambda_theta_grid: tuple[float, ...] = DEFAULT_GRID
    sigma_grid: tuple[float, ...] = DEFAULT_GRID
    alpha: float = 0.5
    threshold: float = 0.5
    seed: int = 0

    epsilon: float = 1e-6
    max_outer_iterations: int = 100
    reselect_rulsif: bool = True
    smote_k: int = 5
    include_intercept: bool = True

    def __post_init__(self):
        for name in ("drop_columns", "methods", "lambda_beta_grid", "lambda_theta_grid",
                     "sigma_grid"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if (self.csv is None) == (self.synthetic_setting is None):
            raise ConfigError("give exactly one of csv / synthetic_setting")
        if self.synthetic_setting is not None and self.synthetic_setting not in range(1, 7):
            raise ConfigError("synthetic_setting must be 1-6")
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if self.trials is not None and self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not (self.lambda_beta_grid and self.lambda_theta_grid and self.sigma_grid):
            raise ConfigError("grids must be non-empty")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be at least 2")

    @property
    def n_trials(self) -> int:
        if self.trials is not None:
            return self.trials
        return 100 if self.synthetic_setting is not None else 30

    @property
    def dataset_name(self) -> str:
        if self.name:
            return self.name
        if self.synthetic_setting is not None:
            return f"Setting {self.synthetic_setting}"
        return Path(self.csv).stem

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrialResult:
    dataset: str
    method: str
    trial: int
    seed: int
    hyperparameters: dict = field(default_factory=dict)
    auc: float = math.nan
    f_measure: float = math.nan
    accuracy: float = math.nan
    wall_time: float = 0.0
    beta: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def trial_seeds(master: int, trial: int) -> tuple[int, int, int]:
    """Independent (data, split, fit) seeds for one trial, independent of trial order."""
    state = np.random.SeedSequence([master, trial]).generate_state(3)
    return tuple(int(s) for s in state)


def fit_method(method: str, train: Dataset, lambda_beta: float, config: ExperimentConfig,
               seed: int) -> glm.ModelParams:
    """Fit one of the compared methods at a given penalty."""
    icpt = config.include_intercept
    if method == "logistic":
        return glm.fit(train, lambda_beta, include_intercept=icpt)
    if method == "cost_sensitive":
        return glm.fit(train, lambda_beta, glm.cost_sensitive_weights(train),
                       include_intercept=icpt)
    if method == "jansche":
        return glm.fit_soft_f(train, lambda_beta, include_intercept=icpt)
    if method == "smote":
        resampled = smote(train, SmoteConfig(config.smote_k, 1.0, seed))
        return glm.fit(resampled, lambda_beta, include_intercept=icpt)
    if method == "proposed":
        cfg = fwlr.FwlrConfig(
            alpha=config.alpha,
            epsilon=config.epsilon,
            max_outer_iterations=config.max_outer_iterations,
            lambda_beta=lambda_beta,
            lambda_theta_grid=config.lambda_theta_grid,
            sigma_grid=config.sigma_grid,
            cv_folds=config.cv_folds,
            reselect_every_iteration=config.reselect_rulsif,
            include_intercept=icpt,
            seed=seed,
        )
        return fwlr.fit_fwlr(train, cfg)[0]
    raise ValueError(f"unknown method {method!r}")


def grid_search(method: str, train: Dataset, config: ExperimentConfig, seed: int) -> dict:
    """Pick ``lambda_beta`` by mean validation AUC over k folds of ``train``.

    Every method sweeps the penalty grid only; the proposed method tunes its
    ratio hyperparameters inside each fit. Ties go to the larger penalty.
    """
    grid = list(config.lambda_beta_grid)
    if len(grid) == 1:
        return {"lambda_beta": grid[0]}
    folds = kfold_indices(train.n, config.cv_folds, seed)
    everything = np.arange(train.n)
    scores, failures = {}, {}
    for lam in grid:
        fold_auc = []
        for i, fold in enumerate(folds):
            fit_part = train.subset(np.setdiff1d(everything, fold))
            held_out = train.subset(fold)
            if not held_out.has_both_classes():
                continue
            try:
                model = fit_method(method, fit_part, lam, config, seed + i)
            except (ValueError, np.linalg.LinAlgError) as exc:
                failures.setdefault(lam, []).append(f"fold {i}: {exc}")
                continue
            fold_auc.append(metrics.auc(fwlr.predict(model, held_out)))
        if fold_auc:
            scores[lam] = float(np.mean(fold_auc))
    if not scores:
        raise GridSearchError(f"{method}: every grid cell failed: {failures}")
    best = max(scores, key=lambda lam: (scores[lam], lam))
    return {"lambda_beta": best, "cv_auc": scores[best]}


def evaluate_methods(
    train_raw: Dataset,
    test_raw: Dataset,
    config: ExperimentConfig,
    trial: int,
    seed: int,
) -> list[tuple[TrialResult, Optional[glm.ModelParams]]]:
    """Normalize on train, tune and fit each method on train, score on test."""
    stats = fit_normalizer(train_raw)
    train = apply_normalizer(stats, train_raw)
    test = apply_normalizer(stats, test_raw)
    out = []
    for method in config.methods:
        start = time.perf_counter()
        result = TrialResult(config.dataset_name, method, trial, seed)
        model = None
        try:
            hyper = grid_search(method, train, config, seed)
            model = fit_method(method, train, hyper["lambda_beta"], config, seed)
            scored = metrics.summarize(fwlr.predict(model, test), config.threshold)
            result.hyperparameters = hyper
            result.beta = model.beta.tolist()
            result.auc, result.f_measure, result.accuracy = (scored[m] for m in METRICS)
        except (ValueError, np.linalg.LinAlgError, GridSearchError) as exc:
            result.error = f"{type(exc).__name__}: {exc}"
            log.warning("%s trial %d %s failed: %s", config.dataset_name, trial, method, exc)
        result.wall_time = time.perf_counter() - start
        out.append((result, model))
    return out


def load_source(config: ExperimentConfig) -> Callable[[int], Dataset]:
    """Return ``seed -> Dataset``; CSV data ignore the seed."""
    if config.csv is not None:
        data = load_csv(config.csv, config.label_column, config.positive_label,
                        config.drop_columns)
        return lambda seed: data
    return lambda seed: generate_synthetic(config.synthetic_setting, config.synthetic_n, seed)


def run_trial(config: ExperimentConfig, trial: int,
              source: Optional[Callable[[int], Dataset]] = None) -> list[TrialResult]:
    source = source or load_source(config)
    data_seed, split_seed, fit_seed = trial_seeds(config.seed, trial)
    pair = split(source(data_seed), config.train_fraction, split_seed)
    if not pair.train.has_both_classes() or not pair.test.has_both_classes():
        return [TrialResult(config.dataset_name, m, trial, fit_seed,
                            error="split left a single class") for m in config.methods]
    return [r for r, _ in evaluate_methods(pair.train, pair.test, config, trial, fit_seed)]


def run_experiment(
    config: ExperimentConfig,
    sink: Optional[Callable[[TrialResult], None]] = None,
) -> tuple[list[TrialResult], dict]:
    """Run every trial in order; returns all results and the per-method summary."""
    source = load_source(config)
    results = []
    for trial in range(config.n_trials):
        t0 = time.perf_counter()
        for r in run_trial(config, trial, source):
            results.append(r)
            if sink is not None:
                sink(r)
        log.info("%s trial %d/%d done in %.1fs", config.dataset_name, trial + 1,
                 config.n_trials, time.perf_counter() - t0)
    return results, summarize(results)


def summarize(results: Sequence[TrialResult]) -> dict:
    """Mean, sample s.d., count and failure count per (dataset, method, metric)."""
    summary: dict = {}
    groups: dict = {}
    for r in results:
        groups.setdefault((r.dataset, r.method), []).append(r)
    for (dataset, method), rs in groups.items():
        ok = [r for r in rs if r.ok]
        entry = {"n": len(ok), "failed": len(rs) - len(ok)}
        for m in METRICS:
            vals = np.array([getattr(r, m) for r in ok], dtype=float)
            entry[m] = {
                "mean": float(vals.mean()) if vals.size else math.nan,
                "sd": float(vals.std(ddof=1)) if vals.size > 1 else math.nan,
                "min": float(vals.min()) if vals.size else math.nan,
                "max": float(vals.max()) if vals.size else math.nan,
            }
        summary.setdefault(dataset, {})[method] = entry
    return summary


def save_results(results: Sequence[TrialResult], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(asdict(r)) + "\n")


def load_results(path) -> list[TrialResult]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(TrialResult(**json.loads(line)))
    return out


METRIC_TITLES = {"auc": "AUC", "f_measure": "F-measure", "accuracy": "Accuracy"}


def _method_order(summary: dict) -> list[str]:
    present = {m for per in summary.values() for m in per}
    return [m for m in METHODS if m in present]


def emit_report(results: Sequence[TrialResult], fmt: str = "markdown", path=None) -> str:
    """One table per metric: mean and s.d. rows per dataset, one column per method.

    In markdown the best mean of each dataset row is bold.
    """
    if not results:
        raise ValueError("no results to report")
    if fmt in ("md", "markdown"):
        text = _markdown(summarize(results))
    elif fmt == "csv":
        text = _csv(summarize(results))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _markdown(summary: dict) -> str:
    methods = _method_order(summary)
    parts = []
    for metric in METRICS:
        lines = [f"### {METRIC_TITLES[metric]}", "",
                 "| dataset | stat | " + " | ".join(methods) + " |",
                 "|---|---|" + "---:|" * len(methods)]
        for dataset, per in summary.items():
            means = {m: per[m][metric]["mean"] for m in methods if m in per}
            finite = [v for v in means.values() if not math.isnan(v)]
            best = max(finite) if finite else None
            row_mean, row_sd = [], []
            for m in methods:
                if m not in per:
                    row_mean.append("")
                    row_sd.append("")
                    continue
                cell = f"{means[m]:.3f}"
                row_mean.append(f"**{cell}**" if means[m] == best else cell)
                row_sd.append(f"{per[m][metric]['sd']:.3f}")
            lines.append(f"| {dataset} | mean | " + " | ".join(row_mean) + " |")
            lines.append("|  | s.d. | " + " | ".join(row_sd) + " |")
        parts.append("\n".join(lines))
    return "\n\n".join(parts) + "\n"


def _csv(summary: dict) -> str:
    methods = _method_order(summary)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["metric", "dataset", "stat", *methods])
    for metric in METRICS:
        for dataset, per in summary.items():
            for stat in ("mean", "sd"):
                w.writerow([metric, dataset, stat,
                            *(repr(per[m][metric][stat]) if m in per else "" for m in methods)])
    return buf.getvalue()


def read_report_csv(path_or_text) -> dict:
    """Parse :func:`emit_report` CSV output into ``{(metric, dataset, stat): {method: value}}``."""
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str)
                                          and "\n" not in path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    methods = rows[0][3:]
    return {
        (metric, dataset, stat): {m: float(v) for m, v in zip(methods, vals) if v != ""}
        for metric, dataset, stat, *vals in rows[1:]
    }
