"""Metrics and the nested cross-validation training protocol.

Evaluation is ten stratified outer folds; inside each, twenty
hyperparameter draws are scored by three-fold inner cross-validation on
the nine training folds (mean AUC for classification, mean MAE for
regression), the winner is refit on all nine and scored on the held-out
fold. Every random choice derives from the single report seed, so a
report is reproducible byte for byte.
"""
from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gbt
from .errors import InputError
from .friction import to_braking_action
from .gbt import BoostParams, LossKind

__all__ = [
    "ConfusionMatrix",
    "ParamDistribution",
    "CvReport",
    "classification_metrics",
    "confusion_from_predictions",
    "roc_auc",
    "roc_points",
    "regression_metrics",
    "threshold_classify",
    "nested_cv",
]

N_OUTER_FOLDS = 10
N_INNER_FOLDS = 3
N_CANDIDATES = 20


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with slippery as the positive class."""

    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise InputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


def confusion_from_predictions(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    if y_true.shape != y_pred.shape:
        raise InputError("prediction and truth lengths differ")
    return ConfusionMatrix(
        tp=int(np.sum(y_pred & y_true)),
        fn=int(np.sum(~y_pred & y_true)),
        fp=int(np.sum(y_pred & ~y_true)),
        tn=int(np.sum(~y_pred & ~y_true)),
    )


def classification_metrics(cm: ConfusionMatrix) -> dict:
    """Sensitivity, specificity, and their geometric mean."""
    if cm.tp + cm.fn == 0 or cm.tn + cm.fp == 0:
        raise InputError("metrics undefined: one of the classes is empty")
    sensitivity = cm.tp / (cm.tp + cm.fn)
    specificity = cm.tn / (cm.tn + cm.fp)
    return {
        "sensitivity": sensitivity,
        "specificity": specificity,
        "g_mean": float(np.sqrt(sensitivity * specificity)),
    }


def roc_auc(scores, labels) -> float:
    """Rank AUC: probability a random positive outscores a random negative,
    ties counted half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise InputError("scores and labels lengths differ")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("AUC undefined: both classes must be present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    rank_pos = 1
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        mid = 0.5 * (rank_pos + rank_pos + (j - i))
        ranks[order[i:j + 1]] = mid
        rank_pos += j - i + 1
        i = j + 1
    pos_rank_sum = float(ranks[labels].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_points(scores, labels):
    """(fpr, tpr, threshold) triples swept over the unique scores, descending."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("ROC undefined: both classes must be present")
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    sorted_scores = scores[order]
    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        tp += int(sorted_labels[i:j + 1].sum())
        fp += (j - i + 1) - int(sorted_labels[i:j + 1].sum())
        points.append((fp / n_neg, tp / n_pos, float(sorted_scores[i])))
        i = j + 1
    return points


def regression_metrics(preds, truths) -> dict:
    """RMSE, MAE, mean braking-action error, and the within-one share (%).

    Negative predictions clamp to zero before the braking-action lookup.
    """
    preds = np.asarray(preds, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if preds.shape != truths.shape or preds.ndim != 1 or len(preds) == 0:
        raise InputError("predictions and truths must be equal-length, non-empty")
    err = preds - truths
    ba_pred = np.array([to_braking_action(max(p, 0.0)) for p in preds])
    ba_true = np.array([to_braking_action(max(t, 0.0)) for t in truths])
    ba_diff = np.abs(ba_pred - ba_true)
    return {
        "rmse": float(np.sqrt(np.mean(err**2))),
        "mae": float(np.mean(np.abs(err))),
        "ba_error": float(np.mean(ba_diff)),
        "within_one_pct": float(100.0 * np.mean(ba_diff <= 1)),
    }


def threshold_classify(probabilities, threshold: float):
    """Slippery when the probability is at or above the threshold."""
    if not 0 < threshold < 1:
        raise InputError("threshold must be inside (0, 1)")
    return np.asarray(probabilities, dtype=np.float64) >= threshold


@dataclass(frozen=True)
class ParamDistribution:
    """Hyperparameter sampling ranges for the randomized search."""

    n_estimators_range: tuple[int, int] = (50, 250)
    reg_lambda_range: tuple[float, float] = (0.0, 10.0)
    min_split_loss_range: tuple[float, float] = (0.0, 0.4)
    subsample_range: tuple[float, float] = (0.3, 1.0)
    learning_rate_range: tuple[float, float] = (0.1, 0.21)

    def sample(self, rng: np.random.Generator, max_depth: int, fit_seed: int) -> BoostParams:
        return BoostParams(
            n_estimators=int(rng.integers(self.n_estimators_range[0],
                                          self.n_estimators_range[1] + 1)),
            reg_lambda=float(rng.uniform(*self.reg_lambda_range)),
            min_split_loss=float(rng.uniform(*self.min_split_loss_range)),
            subsample=float(rng.uniform(*self.subsample_range)),
            learning_rate=float(rng.uniform(*self.learning_rate_range)),
            max_depth=max_depth,
            rng_seed=fit_seed,
        )


@dataclass
class CvReport:
    task: str
    seed: int
    loss: str
    max_depth: int
    n_rows: int
    fold_metrics: list[dict]
    chosen_params: list[dict]
    mean_metrics: dict
    std_metrics: dict
    oof_scores: np.ndarray = field(repr=False, default=None)
    oof_labels: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "seed": self.seed,
            "loss": self.loss,
            "max_depth": self.max_depth,
            "n_rows": self.n_rows,
            "folds": self.fold_metrics,
            "chosen_params": self.chosen_params,
            "mean": self.mean_metrics,
            "std": self.std_metrics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_text(self) -> str:
        """Plain table: one metric per row, mean and per-fold columns."""
        keys = sorted(self.mean_metrics)
        lines = [f"{self.task} nested CV ({self.n_rows} rows, seed {self.seed})"]
        header = f"{'metric':<16}{'mean':>10}{'std':>10}  folds"
        lines.append(header)
        lines.append("-" * len(header))
        for k in keys:
            folds = " ".join(f"{m[k]:.3f}" for m in self.fold_metrics)
            lines.append(
                f"{k:<16}{self.mean_metrics[k]:>10.4f}{self.std_metrics[k]:>10.4f}  {folds}"
            )
        return "\n".join(lines)


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _stratified_folds(labels, n_folds, rng) -> np.ndarray:
    """Class-wise round-robin deal; errors when a fold misses a class.

    The deal continues across classes (the second class starts at the fold
    after the first class stopped), so fold sizes stay equal whenever the
    total row count divides evenly.
    """
    labels = np.asarray(labels).astype(bool)
    fold_of = np.full(len(labels), -1, dtype=np.int64)
    offset = 0
    for cls in (False, True):
        idx = np.where(labels == cls)[0]
        idx = idx[rng.permutation(len(idx))]
        for j, row in enumerate(idx):
            fold_of[row] = (offset + j) % n_folds
        offset = (offset + len(idx)) % n_folds
    for f in range(n_folds):
        fold_labels = labels[fold_of == f]
        if len(fold_labels) == 0 or fold_labels.all() or not fold_labels.any():
            raise InputError(
                f"stratification failed: fold {f} does not hold both classes"
            )
    return fold_of


def _plain_folds(n, n_folds, rng) -> np.ndarray:
    fold_of = np.empty(n, dtype=np.int64)
    perm = rng.permutation(n)
    for j, row in enumerate(perm):
        fold_of[row] = j % n_folds
    return fold_of


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def nested_cv(
    X,
    y,
    loss: LossKind,
    seed: int,
    param_dist: ParamDistribution | None = None,
    max_depth: int = 6,
    n_jobs: int = 1,
) -> CvReport:
    """Ten-fold nested cross-validation with a 20-draw randomized search.

    Classification folds are stratified and candidates are ranked by mean
    inner AUC; regression folds are shuffled and candidates ranked by mean
    inner MAE. Deterministic given the seed, independent of n_jobs.
    """
    values, _ = gbt._coerce_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n = values.shape[0]
    if y.shape != (n,):
        raise InputError("y length must match X")
    if n < 30:
        raise InputError("nested CV needs at least 30 rows")
    if param_dist is None:
        param_dist = ParamDistribution()
    classification = loss is LossKind.LOGISTIC

    split_rng = np.random.default_rng(_derive_seed(seed, 1))
    if classification:
        fold_of = _stratified_folds(y, N_OUTER_FOLDS, split_rng)
    else:
        fold_of = _plain_folds(n, N_OUTER_FOLDS, split_rng)

    oof_scores = np.full(n, np.nan)
    fold_metrics: list[dict] = []
    chosen_params: list[dict] = []

    for f in range(N_OUTER_FOLDS):
        test_idx = np.where(fold_of == f)[0]
        train_idx = np.where(fold_of != f)[0]
        X_train = values[train_idx]
        y_train = y[train_idx]

        inner_rng = np.random.default_rng(_derive_seed(seed, 2, f))
        if classification:
            inner_fold = _stratified_folds(y_train, N_INNER_FOLDS, inner_rng)
        else:
            inner_fold = _plain_folds(len(train_idx), N_INNER_FOLDS, inner_rng)

        cand_rng = np.random.default_rng(_derive_seed(seed, 3, f))
        candidates = [
            param_dist.sample(cand_rng, max_depth, _derive_seed(seed, 4, f, c))
            for c in range(N_CANDIDATES)
        ]

        def eval_inner(task):
            c, k = task
            params = candidates[c]
            fit_rows = inner_fold != k
            val_rows = ~fit_rows
            params_k = dataclasses.replace(
                params, rng_seed=_derive_seed(seed, 5, f, c, k))
            ens = gbt.fit(X_train[fit_rows], y_train[fit_rows], params_k, loss)
            margins = ens.margin_matrix(X_train[val_rows])
            if classification:
                return roc_auc(margins, y_train[val_rows])
            return float(np.mean(np.abs(margins - y_train[val_rows])))

        tasks = [(c, k) for c in range(N_CANDIDATES) for k in range(N_INNER_FOLDS)]
        if n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                inner_scores = list(pool.map(eval_inner, tasks))
        else:
            inner_scores = [eval_inner(t) for t in tasks]
        per_candidate = np.array(inner_scores).reshape(N_CANDIDATES, N_INNER_FOLDS)
        means = per_candidate.mean(axis=1)
        best_c = int(np.argmax(means) if classification else np.argmin(means))
        best = candidates[best_c]

        refit_params = dataclasses.replace(
            best, rng_seed=_derive_seed(seed, 6, f))
        ens = gbt.fit(X_train, y_train, refit_params, loss)
        test_margins = ens.margin_matrix(values[test_idx])

        if classification:
            probs = _sigmoid(test_margins)
            oof_scores[test_idx] = probs
            threshold = float(np.mean(y_train))
            cm = confusion_from_predictions(
                y[test_idx], threshold_classify(probs, threshold))
            metrics = classification_metrics(cm)
            metrics["auc"] = roc_auc(probs, y[test_idx])
            metrics["threshold"] = threshold
        else:
            oof_scores[test_idx] = test_margins
            metrics = regression_metrics(test_margins, y[test_idx])
        metrics["n_test"] = len(test_idx)
        fold_metrics.append({k: float(v) for k, v in metrics.items()})
        chosen_params.append({
            "n_estimators": best.n_estimators,
            "reg_lambda": best.reg_lambda,
            "min_split_loss": best.min_split_loss,
            "subsample": best.subsample,
            "learning_rate": best.learning_rate,
        })

    keys = fold_metrics[0].keys()
    mean_metrics = {k: float(np.mean([m[k] for m in fold_metrics])) for k in keys}
    std_metrics = {k: float(np.std([m[k] for m in fold_metrics], ddof=1))
                   for k in keys}
    return CvReport(
        task="classification" if classification else "regression",
        seed=seed,
        loss=loss.value,
        max_depth=max_depth,
        n_rows=n,
        fold_metrics=fold_metrics,
        chosen_params=chosen_params,
        mean_metrics=mean_metrics,
        std_metrics=std_metrics,
        oof_scores=oof_scores,
        oof_labels=y.copy(),
    )
