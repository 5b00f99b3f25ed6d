"""Decision-support assembly: bundles, assessments, and what-if edits.

An assessment combines the classifier probability (raw and rescaled so
the expected rate sits at 50%), the scenario warnings, the regressor's
braking action, and up to five positive and five negative attribution
arguments with templated text. Arguments come from the classification
explanation below the 50% mark and from the regression explanation above
it.
"""
from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import features as ft
from .errors import InputError, StaleDataError
from .explain import BackgroundSet, TreeShapExplainer, top_arguments
from .friction import braking_action_label, to_braking_action
from .gbt import FeatureMatrix, LossKind, TreeEnsemble
from .persist import ensemble_from_json, ensemble_to_json

__all__ = [
    "scale_probability",
    "ModelBundle",
    "DataStore",
    "AssessmentPayload",
    "assess",
    "UnknownRunwayError",
]

MAX_ARGUMENTS = 5
BACKGROUND_ROWS = 128


class UnknownRunwayError(InputError):
    pass


def scale_probability(p: float, p_bar: float) -> float:
    """Piecewise-linear rescaling to a percentage: 0 -> 0, p_bar -> 50, 1 -> 100."""
    if not 0 <= p <= 1:
        raise InputError("probability must be in [0, 1]")
    if not 0 < p_bar < 1:
        raise InputError("expected rate must be inside (0, 1)")
    if p <= p_bar:
        return 50.0 * (p / p_bar)
    return 50.0 + 50.0 * ((p - p_bar) / (1.0 - p_bar))


@dataclass
class ModelBundle:
    """Classifier and regressor over one feature schema, plus metadata."""

    classifier: TreeEnsemble
    regressor: TreeEnsemble
    expected_positive_rate: float
    feature_checksum: str
    schema_version: str
    manifest: dict
    background: np.ndarray
    met_only: bool = False

    def __post_init__(self):
        if self.classifier.feature_names != self.regressor.feature_names:
            raise InputError("classifier and regressor schemas differ")
        if not 0 < self.expected_positive_rate < 1:
            raise InputError("expected positive rate must be inside (0, 1)")
        self._lock = threading.Lock()
        self._explainers: dict[str, TreeShapExplainer] = {}
        self._cls_json = ensemble_to_json(self.classifier)
        self._reg_json = ensemble_to_json(self.regressor)
        manifest = dict(self.manifest)
        manifest["model_versions"] = {
            "classifier": hashlib.sha256(self._cls_json.encode()).hexdigest()[:12],
            "regressor": hashlib.sha256(self._reg_json.encode()).hexdigest()[:12],
        }
        manifest.update({
            "expected_positive_rate": self.expected_positive_rate,
            "feature_checksum": self.feature_checksum,
            "schema_version": self.schema_version,
            "met_only": self.met_only,
        })
        self.manifest = manifest

    @property
    def model_versions(self) -> dict:
        return self.manifest["model_versions"]

    def explainer(self, which: str) -> TreeShapExplainer:
        with self._lock:
            if which not in self._explainers:
                ensemble = self.classifier if which == "classifier" else self.regressor
                self._explainers[which] = TreeShapExplainer(
                    ensemble, BackgroundSet(self.background))
            return self._explainers[which]

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "classifier.json").write_text(self._cls_json)
        (directory / "regressor.json").write_text(self._reg_json)
        (directory / "manifest.json").write_text(json.dumps(self.manifest, indent=1))
        np.savetxt(directory / "background.csv", self.background, delimiter=",")

    @classmethod
    def load(cls, directory) -> "ModelBundle":
        directory = Path(directory)
        try:
            classifier = ensemble_from_json(
                (directory / "classifier.json").read_text())
            regressor = ensemble_from_json(
                (directory / "regressor.json").read_text())
            manifest = json.loads((directory / "manifest.json").read_text())
            background = np.loadtxt(directory / "background.csv", delimiter=",",
                                    ndmin=2)
        except FileNotFoundError as exc:
            raise InputError(f"model bundle incomplete: {exc}") from exc
        if classifier.loss is not LossKind.LOGISTIC:
            raise InputError("bundle classifier must be a logistic model")
        return cls(
            classifier=classifier,
            regressor=regressor,
            expected_positive_rate=float(manifest["expected_positive_rate"]),
            feature_checksum=manifest["feature_checksum"],
            schema_version=manifest["schema_version"],
            manifest=manifest,
            background=background,
            met_only=bool(manifest.get("met_only", False)),
        )


def train_bundle(matrix: FeatureMatrix, slippery, mu, seed: int,
                 params_classifier=None, params_regressor=None,
                 met_only: bool = False, data_hash: str = "") -> ModelBundle:
    """Fit both models on a featurized dataset and package them."""
    from . import gbt

    slippery = np.asarray(slippery, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if params_classifier is None:
        params_classifier = gbt.BoostParams(
            n_estimators=150, reg_lambda=2.0, min_split_loss=0.05,
            subsample=0.8, learning_rate=0.15, max_depth=3, rng_seed=seed)
    if params_regressor is None:
        params_regressor = gbt.BoostParams(
            n_estimators=150, reg_lambda=2.0, min_split_loss=0.0,
            subsample=0.8, learning_rate=0.1, max_depth=3, rng_seed=seed + 1)
    values = matrix.values
    if met_only:
        values = values.copy()
        blank = [matrix.column_names.index(c) for c in ft.snowtam_column_names()]
        values[:, blank] = np.nan
        matrix = FeatureMatrix(values, matrix.column_names)
    classifier = gbt.fit(matrix, slippery, params_classifier, LossKind.LOGISTIC)
    reg_rows = np.isfinite(mu)
    if reg_rows.sum() < 2:
        raise InputError("regression training needs friction-limited landings")
    regressor = gbt.fit(
        FeatureMatrix(matrix.values[reg_rows], matrix.column_names),
        mu[reg_rows], params_regressor, LossKind.SQUARED_ERROR)
    background = BackgroundSet.sample(matrix, BACKGROUND_ROWS, seed).values
    p_bar = float(np.mean(slippery))
    manifest = {
        "seed": seed,
        "data_hash": data_hash,
        "n_rows": matrix.n_rows,
        "n_regression_rows": int(reg_rows.sum()),
        "classifier_params": _params_dict(params_classifier),
        "regressor_params": _params_dict(params_regressor),
    }
    return ModelBundle(
        classifier=classifier,
        regressor=regressor,
        expected_positive_rate=p_bar,
        feature_checksum=ft.schema_checksum(tuple(matrix.column_names)),
        schema_version=ft.SCHEMA_VERSION,
        manifest=manifest,
        background=background,
        met_only=met_only,
    )


def _params_dict(p) -> dict:
    return {
        "n_estimators": p.n_estimators, "reg_lambda": p.reg_lambda,
        "min_split_loss": p.min_split_loss, "subsample": p.subsample,
        "learning_rate": p.learning_rate, "max_depth": p.max_depth,
        "rng_seed": p.rng_seed,
    }


class DataStore:
    """Weather and report snapshots with single-writer atomic replacement."""

    def __init__(self, weather=None, snowtams=None,
                 runways: tuple[str, str] = ("RW1", "RW2")):
        self._lock = threading.Lock()
        self._snapshot = (dict(weather or {}), dict(snowtams or {}))
        self.runways = runways

    def snapshot(self):
        return self._snapshot

    def replace(self, weather, snowtams) -> None:
        with self._lock:
            self._snapshot = (dict(weather), dict(snowtams))

    def runway_ids(self):
        return list(self.runways)


@dataclass
class AssessmentPayload:
    runway_id: str
    timestamp: str
    slippery_probability_raw: float
    slippery_probability_scaled: float
    is_slippery: bool
    braking_action: int
    braking_action_label: str
    predicted_mu: float
    scenario_warnings: list[str]
    arguments_positive: list[dict]
    arguments_negative: list[dict]
    explanation_source: str
    model_versions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "runway_id": self.runway_id,
            "timestamp": self.timestamp,
            "slippery_probability_raw": self.slippery_probability_raw,
            "slippery_probability_scaled": self.slippery_probability_scaled,
            "is_slippery": self.is_slippery,
            "braking_action": self.braking_action,
            "braking_action_label": self.braking_action_label,
            "predicted_mu": self.predicted_mu,
            "scenario_warnings": self.scenario_warnings,
            "arguments": {
                "positive": self.arguments_positive,
                "negative": self.arguments_negative,
            },
            "explanation_source": self.explanation_source,
            "model_versions": self.model_versions,
        }


_LAG_RE = re.compile(r"^(.*)_lag(\d+)h$")
_DELTA_RE = re.compile(r"^(.*)_delta(\d+)h$")
_ACCUM_RE = re.compile(r"^accum_(.*)_(\d+)h$")

_VAR_LABELS = {
    "pi": "precipitation intensity", "ta": "air temperature",
    "tr": "runway temperature", "hu": "relative humidity",
    "vi": "horizontal visibility", "ap": "air pressure", "dp": "dew point",
    "along_wind": "along wind", "across_wind": "across wind",
    "ta_abs": "absolute air temperature", "tr_abs": "absolute runway temperature",
}


def _contam_text(key: str) -> str:
    names = [ft.CONTAMINATION_CODE_NAMES[int(c)] for c in key]
    return " on ".join(names).lower()


def feature_label(name: str) -> str:
    """Operator-readable label for one schema column."""
    if name in _VAR_LABELS:
        return _VAR_LABELS[name]
    if name.startswith("pt_"):
        return f"{name[3:].replace('_', ' ')} falling now"
    if name.startswith("contam_"):
        key = name[len("contam_"):]
        if key == "unknown":
            return "unrecognized contamination combination"
        return f"contamination: {_contam_text(key)}"
    m = _LAG_RE.match(name)
    if m and m.group(1) in _VAR_LABELS:
        return f"{_VAR_LABELS[m.group(1)]} {m.group(2)} h ago"
    m = _DELTA_RE.match(name)
    if m and m.group(1) in _VAR_LABELS:
        return f"{_VAR_LABELS[m.group(1)]} change over {m.group(2)} h"
    m = _ACCUM_RE.match(name)
    if m:
        kind = m.group(1).replace("_", " ")
        if kind == "current":
            kind = "current-type precipitation"
        return f"accumulated {kind} over {m.group(2)} h"
    labels = {
        "runway_east": "east runway indicator",
        "snowtam_depth_mm": "reported contamination depth (mm)",
        "snowtam_coverage_pct": "reported contamination coverage (%)",
        "snowtam_sanded": "runway sanded",
        "snowtam_chemicals": "de-icing chemicals applied",
        "snowtam_age_min": "runway report age (minutes)",
    }
    return labels.get(name, name.replace("_", " "))


def _argument_entries(arguments, source: str) -> list[dict]:
    out = []
    for name, value, phi in arguments:
        label = feature_label(name)
        if source == "classification":
            direction = "increases slipperiness" if phi > 0 else "decreases slipperiness"
        else:
            direction = ("raises predicted friction" if phi > 0
                         else "lowers predicted friction")
        if np.isnan(value):
            text = f"{label} (not observed) - {direction}"
            value_out = None
        else:
            text = f"{label} = {value:.3g} - {direction}"
            value_out = float(value)
        out.append({"feature": name, "value": value_out, "phi": float(phi),
                    "human_text": text})
    return out


def _window_series(series: ft.WeatherSeries, minute: int) -> ft.WeatherSeries:
    """Copy of the 24 h (plus slack) window ending at the minute."""
    lo = max(series.start_minute, minute - 60 * 24 - ft.STALE_LIMIT_MINUTES)
    hi = min(series.end_minute, minute + ft.STALE_LIMIT_MINUTES)
    if hi < lo:
        raise StaleDataError("requested time lies outside the weather record")
    n = hi - lo + 1
    out = ft.WeatherSeries(series.runway_id, lo, n)
    src = slice(lo - series.start_minute, hi - series.start_minute + 1)
    out.pt[:] = series.pt[src]
    out.observed[:] = series.observed[src]
    for var in ft.NUMERIC_VARIABLES:
        getattr(out, var)[:] = getattr(series, var)[src]
    return out


def assess(
    runway_id: str,
    minute: int,
    bundle: ModelBundle,
    store: DataStore,
    rules=None,
    threshold: float | None = None,
    weather_overrides: dict | None = None,
    feature_overrides: dict | None = None,
    feature_deltas: dict | None = None,
) -> AssessmentPayload:
    """Full decision-support payload for one runway and minute."""
    weather, snowtams = store.snapshot()
    if runway_id not in store.runways or runway_id not in weather:
        raise UnknownRunwayError(f"unknown runway {runway_id!r}")
    if rules is None:
        rules = bl.default_scenario_rules()
    series = _window_series(weather[runway_id], minute)
    if weather_overrides:
        idx = minute - series.start_minute
        if not 0 <= idx < series.n_minutes:
            raise StaleDataError("cannot override weather outside the record")
        for var, value in weather_overrides.items():
            if var == "pt":
                series.pt[idx] = ft.PRECIP_TYPES.index(value)
            elif var in ft.NUMERIC_VARIABLES:
                getattr(series, var)[idx] = float(value)
            else:
                raise InputError(f"unknown weather variable {var!r}")
        series.observed[idx] = True
    report = ft.latest_report(snowtams.get(runway_id, []), minute)
    fv = ft.build_feature_vector(
        series, report, minute, runway_id,
        include_snowtam=not bundle.met_only, runways=store.runways)
    x = fv.values.copy()
    names = list(fv.schema)
    for name, value in (feature_overrides or {}).items():
        if name not in names:
            raise InputError(f"unknown feature {name!r}")
        x[names.index(name)] = float(value)
    for name, delta in (feature_deltas or {}).items():
        if name not in names:
            raise InputError(f"unknown feature {name!r}")
        x[names.index(name)] += float(delta)

    p_bar = threshold if threshold is not None else bundle.expected_positive_rate
    if not 0 < p_bar < 1:
        raise InputError("threshold must be inside (0, 1)")
    from .gbt import predict_margin, predict_proba

    p_raw = predict_proba(bundle.classifier, x)
    scaled = scale_probability(p_raw, p_bar)
    is_slippery = p_raw >= p_bar
    mu_hat = max(predict_margin(bundle.regressor, x), 0.0)
    action = to_braking_action(mu_hat)
    warnings = bl.scenario_model(series, minute, rules)

    source = "classification" if scaled < 50.0 else "regression"
    explainer = bundle.explainer(
        "classifier" if source == "classification" else "regressor")
    explanation = explainer.explain(x)
    pos, neg = top_arguments(explanation, MAX_ARGUMENTS, MAX_ARGUMENTS)

    return AssessmentPayload(
        runway_id=runway_id,
        timestamp=ft.from_epoch_minute(minute).strftime("%Y-%m-%dT%H:%M:%SZ"),
        slippery_probability_raw=float(p_raw),
        slippery_probability_scaled=float(scaled),
        is_slippery=bool(is_slippery),
        braking_action=action,
        braking_action_label=braking_action_label(action),
        predicted_mu=float(mu_hat),
        scenario_warnings=warnings,
        arguments_positive=_argument_entries(pos, source),
        arguments_negative=_argument_entries(neg, source),
        explanation_source=source,
        model_versions=bundle.model_versions,
    )
