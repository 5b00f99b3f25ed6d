"""End-to-end orchestration: featurize datasets, run the benchmark suite,
and compare against the rule-based assessors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import baselines as bl
from . import evaluation as ev
from . import features as ft
from . import friction as fr
from . import synthgen as sg
from .errors import InputError
from .gbt import FeatureMatrix, LossKind

__all__ = [
    "FeaturizedDataset",
    "featurize_dataset",
    "labels_from_landings",
    "baseline_assessments",
    "BenchmarkResult",
    "run_benchmark",
    "met_only_comparison",
]

BA_SLIPPERY_MAX = 3  # grades 1..3 (medium or worse) count as slippery


@dataclass
class FeaturizedDataset:
    matrix: FeatureMatrix
    landing_ids: list[str]
    runways: list[str]
    minutes: np.ndarray
    slippery: np.ndarray
    mu: np.ndarray            # NaN for landings that are not friction limited
    friction_limited: np.ndarray


def featurize_dataset(ds: sg.SyntheticDataset,
                      include_snowtam: bool = True) -> FeaturizedDataset:
    """Feature matrix plus oracle labels for every generated landing."""
    minutes = [g.touchdown_minute for g in ds.ground_truth]
    runways = [g.runway_id for g in ds.ground_truth]
    matrix = ft.build_feature_matrix(
        ds.weather, ds.snowtams, minutes, runways,
        include_snowtam=include_snowtam, runways=ds.config.runways,
    )
    slippery, mu = sg.label_oracle(ds.ground_truth)
    return FeaturizedDataset(
        matrix=matrix,
        landing_ids=[g.landing_id for g in ds.ground_truth],
        runways=runways,
        minutes=np.asarray(minutes, dtype=np.int64),
        slippery=slippery,
        mu=mu,
        friction_limited=np.array([g.friction_limited for g in ds.ground_truth]),
    )


def labels_from_landings(landings, aero: fr.AeroParams = fr.AeroParams()):
    """Labels recomputed from telemetry via the friction estimator."""
    slippery = np.zeros(len(landings), dtype=bool)
    mu = np.full(len(landings), np.nan)
    limited = np.zeros(len(landings), dtype=bool)
    for i, rec in enumerate(landings):
        res = fr.estimate_mu_b(rec, aero)
        slippery[i] = res.slippery
        limited[i] = res.friction_limited
        if res.friction_limited:
            mu[i] = res.mu_b
    return slippery, mu, limited


def baseline_assessments(ds: sg.SyntheticDataset,
                         rules: list[bl.ScenarioRule] | None = None,
                         runway_config: bl.RunwayModelConfig | None = None):
    """Per-landing slippery calls from the three rule-based assessors.

    Returns a dict of boolean arrays keyed by assessor name; entries are
    None-padded (False) where an assessor is unavailable, with a parallel
    availability mask.
    """
    if rules is None:
        rules = bl.default_scenario_rules()
    if runway_config is None:
        runway_config = bl.default_runway_config()
    n = len(ds.ground_truth)
    runway_calls = np.zeros(n, dtype=bool)
    runway_grades = np.zeros(n, dtype=np.int64)
    runway_ok = np.zeros(n, dtype=bool)
    scenario_calls = np.zeros(n, dtype=bool)
    snowtam_calls = np.zeros(n, dtype=bool)
    snowtam_ok = np.zeros(n, dtype=bool)
    for i, g in enumerate(ds.ground_truth):
        series = ds.weather[g.runway_id]
        minute = g.touchdown_minute
        report = ft.latest_report(ds.snowtams[g.runway_id], minute)
        weather_now = {
            "tr": series.value_at("tr", minute),
            "hu": series.value_at("hu", minute),
        }
        grade = bl.runway_model(report, weather_now, runway_config)
        if grade is not None:
            runway_ok[i] = True
            runway_grades[i] = grade
            runway_calls[i] = grade <= BA_SLIPPERY_MAX
        fired = bl.scenario_model(series, minute, rules)
        scenario_calls[i] = bool(fired)
        if report is not None and report.inspector_braking_action is not None:
            snowtam_ok[i] = True
            snowtam_calls[i] = report.inspector_braking_action <= BA_SLIPPERY_MAX
    return {
        "runway_model": runway_calls,
        "runway_model_available": runway_ok,
        "runway_model_grade": runway_grades,
        "scenario_model": scenario_calls,
        "snowtam": snowtam_calls,
        "snowtam_available": snowtam_ok,
    }


@dataclass
class BenchmarkResult:
    classifier_report: ev.CvReport
    regression_report: ev.CvReport
    baseline_metrics: dict
    classifier_auc: float
    comparison_text: str

    def to_dict(self) -> dict:
        return {
            "classifier": self.classifier_report.to_dict(),
            "regression": self.regression_report.to_dict(),
            "baselines": self.baseline_metrics,
            "classifier_auc": self.classifier_auc,
        }


def _assessor_metrics(calls, truth, available=None) -> dict:
    if available is not None and not available.all():
        calls = calls[available]
        truth = truth[available]
    cm = ev.confusion_from_predictions(truth, calls)
    out = ev.classification_metrics(cm)
    out["n"] = int(cm.total)
    return out


def run_benchmark(ds: sg.SyntheticDataset, seed: int, max_depth: int = 3,
                  n_jobs: int = 1, include_snowtam: bool = True) -> BenchmarkResult:
    """Nested-CV models plus the three assessors on one synthetic dataset."""
    feats = featurize_dataset(ds, include_snowtam=include_snowtam)
    y = feats.slippery.astype(np.float64)
    classifier_report = ev.nested_cv(
        feats.matrix, y, LossKind.LOGISTIC, seed=seed, max_depth=max_depth,
        n_jobs=n_jobs,
    )
    reg_rows = np.isfinite(feats.mu)
    if reg_rows.sum() < 30:
        raise InputError("too few friction-limited landings for regression CV")
    reg_matrix = FeatureMatrix(feats.matrix.values[reg_rows],
                               feats.matrix.column_names)
    regression_report = ev.nested_cv(
        reg_matrix, feats.mu[reg_rows], LossKind.SQUARED_ERROR, seed=seed + 1,
        max_depth=max_depth, n_jobs=n_jobs,
    )
    base = baseline_assessments(ds)
    baseline_metrics = {
        "runway_model": _assessor_metrics(
            base["runway_model"], feats.slippery, base["runway_model_available"]),
        "scenario_model": _assessor_metrics(base["scenario_model"], feats.slippery),
        "snowtam": _assessor_metrics(
            base["snowtam"], feats.slippery, base["snowtam_available"]),
    }
    auc = float(classifier_report.mean_metrics["auc"])
    text = _comparison_table(classifier_report, baseline_metrics)
    return BenchmarkResult(
        classifier_report=classifier_report,
        regression_report=regression_report,
        baseline_metrics=baseline_metrics,
        classifier_auc=auc,
        comparison_text=text,
    )


def _comparison_table(report: ev.CvReport, baseline_metrics: dict) -> str:
    cols = ["model", "sensitivity", "specificity", "g_mean"]
    rows = [("model (nested CV)",
             report.mean_metrics["sensitivity"],
             report.mean_metrics["specificity"],
             report.mean_metrics["g_mean"])]
    for name in ("runway_model", "scenario_model", "snowtam"):
        m = baseline_metrics[name]
        rows.append((name, m["sensitivity"], m["specificity"], m["g_mean"]))
    lines = [f"{cols[0]:<22}{cols[1]:>12}{cols[2]:>12}{cols[3]:>9}"]
    for name, sens, spec, g in rows:
        lines.append(f"{name:<22}{sens:>12.3f}{spec:>12.3f}{g:>9.3f}")
    return "\n".join(lines)


def met_only_comparison(ds: sg.SyntheticDataset, seed: int, max_depth: int = 3,
                        n_jobs: int = 1) -> dict:
    """Full-variable versus meteorological-only nested-CV comparison.

    Returns the two classification and two regression reports plus a
    two-column text table shaped like the ablation comparison.
    """
    results = {}
    for key, include in (("full", True), ("met_only", False)):
        feats = featurize_dataset(ds, include_snowtam=include)
        y = feats.slippery.astype(np.float64)
        cls = ev.nested_cv(feats.matrix, y, LossKind.LOGISTIC, seed=seed,
                           max_depth=max_depth, n_jobs=n_jobs)
        reg_rows = np.isfinite(feats.mu)
        reg = ev.nested_cv(
            FeatureMatrix(feats.matrix.values[reg_rows], feats.matrix.column_names),
            feats.mu[reg_rows], LossKind.SQUARED_ERROR, seed=seed + 1,
            max_depth=max_depth, n_jobs=n_jobs)
        results[key] = {"classification": cls, "regression": reg}

    lines = [f"{'metric':<18}{'X_tot':>10}{'X_met':>10}"]
    for metric in ("sensitivity", "specificity", "g_mean", "auc"):
        lines.append(
            f"{metric:<18}"
            f"{results['full']['classification'].mean_metrics[metric]:>10.3f}"
            f"{results['met_only']['classification'].mean_metrics[metric]:>10.3f}"
        )
    for metric in ("rmse", "mae", "ba_error", "within_one_pct"):
        lines.append(
            f"{metric:<18}"
            f"{results['full']['regression'].mean_metrics[metric]:>10.3f}"
            f"{results['met_only']['regression'].mean_metrics[metric]:>10.3f}"
        )
    results["table"] = "\n".join(lines)
    return results
