"""Command-line entry points: simulate, ingest, featurize, train, evaluate,
predict, explain, serve.

Exit codes: 0 success, 1 input or usage error, 2 internal error.
"""
from __future__ import annotations

import csv
import hashlib
import json
import shutil
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import baselines as bl
from . import evaluation as ev
from . import explain as ex
from . import features as ft
from . import io as rio
from . import pipeline as pl
from . import synthgen as sg
from .errors import InputError, RunwaygripError
from .gbt import FeatureMatrix, LossKind
from .service import DataStore, ModelBundle, train_bundle

META_COLUMNS = ["landing_id", "timestamp", "runway", "slippery", "mu",
                "friction_limited"]


@click.group()
def cli():
    """Runway surface condition toolkit."""


def _load_config(path):
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise InputError("config file must hold a mapping")
    return doc


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--days", type=int, default=30, show_default=True)
@click.option("--landings-per-day", type=int, default=50, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
def simulate(seed, out_dir, days, landings_per_day, config_path):
    """Generate a synthetic dataset into a directory of CSV files."""
    overrides = _load_config(config_path)
    law_doc = overrides.pop("law", {})
    law = sg.PlantedLaw(**law_doc) if law_doc else sg.PlantedLaw()
    cfg = sg.GeneratorConfig(
        seed=seed, n_days=days, landings_per_day=landings_per_day, law=law,
        **overrides)
    ds = sg.generate(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rio.write_weather_csv(ds.weather, out / "weather.csv")
    rio.write_snowtam_csv(ds.snowtams, out / "snowtam.csv")
    rio.write_landings_csv(ds.landings, out / "landings.csv")
    with open(out / "ground_truth.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(rio.GROUND_TRUTH_HEADER)
        for g in ds.ground_truth:
            w.writerow([
                g.landing_id, g.runway_id,
                rio.format_timestamp(ft.from_epoch_minute(g.touchdown_minute)),
                repr(g.mu_available), repr(g.mu_realized), repr(g.mu_demand),
                int(g.friction_limited), repr(g.accum_dry_snow_24h),
                repr(g.depth_mm), repr(g.cold_humid),
            ])
    click.echo(
        f"wrote {len(ds.landings)} landings to {out} "
        f"(positive rate {ds.achieved_positive_rate:.4f})"
    )


@cli.command()
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.argument("files", nargs=-1, type=click.Path(exists=True))
def ingest(data_dir, files):
    """Validate CSV files and copy them into the data directory."""
    if not files:
        raise InputError("nothing to ingest: pass one or more CSV files")
    out = Path(data_dir)
    out.mkdir(parents=True, exist_ok=True)
    readers = {
        "weather": rio.read_weather_csv,
        "snowtam": rio.read_snowtam_csv,
        "landings": rio.read_landings_csv,
    }
    for f in files:
        path = Path(f)
        kind = next((k for k in readers if k in path.name), None)
        if kind is None:
            raise InputError(
                f"{path.name}: cannot infer kind (expected weather/snowtam/"
                f"landings in the file name)")
        readers[kind](path)  # parse to validate
        shutil.copyfile(path, out / f"{kind}.csv")
        click.echo(f"ingested {path.name} as {kind}.csv")


def _read_dataset_dir(data_dir):
    data = Path(data_dir)
    weather = rio.read_weather_csv(data / "weather.csv")
    snowtams = rio.read_snowtam_csv(data / "snowtam.csv")
    landings = rio.read_landings_csv(data / "landings.csv")
    return weather, snowtams, landings


@cli.command()
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def featurize(data_dir, out_path):
    """Label landings via the friction estimator and write the feature table."""
    weather, snowtams, landings = _read_dataset_dir(data_dir)
    slippery, mu, limited = pl.labels_from_landings(landings)
    minutes = [ft.to_epoch_minute(l.touchdown_time) for l in landings]
    runways = [l.runway_id for l in landings]
    matrix = ft.build_feature_matrix(weather, snowtams, minutes, runways)
    meta = {
        "landing_id": [l.landing_id for l in landings],
        "timestamp": [rio.format_timestamp(l.touchdown_time) for l in landings],
        "runway": runways,
        "slippery": [int(s) for s in slippery],
        "mu": ["" if not np.isfinite(m) else repr(float(m)) for m in mu],
        "friction_limited": [int(v) for v in limited],
    }
    rio.write_features_csv(matrix, out_path, meta=meta)
    click.echo(f"wrote {matrix.n_rows} feature rows to {out_path}")


def _read_features(path):
    meta, matrix = rio.read_features_csv(path, n_meta=len(META_COLUMNS))
    slippery = np.array([row["slippery"] == "1" for row in meta])
    mu = np.array([float(row["mu"]) if row["mu"] != "" else np.nan for row in meta])
    return meta, matrix, slippery, mu


@cli.command()
@click.option("--features", "features_path", type=click.Path(exists=True),
              required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--met-only", is_flag=True, default=False)
def train(features_path, out_dir, seed, met_only):
    """Fit the classifier and regressor, then save the bundle directory."""
    _, matrix, slippery, mu = _read_features(features_path)
    data_hash = hashlib.sha256(Path(features_path).read_bytes()).hexdigest()[:16]
    bundle = train_bundle(matrix, slippery, mu, seed=seed, met_only=met_only,
                          data_hash=data_hash)
    bundle.save(out_dir)
    click.echo(
        f"trained on {matrix.n_rows} rows "
        f"(p_bar {bundle.expected_positive_rate:.4f}) -> {out_dir}")


@cli.command()
@click.option("--features", "features_path", type=click.Path(exists=True),
              required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--met-only", is_flag=True, default=False,
              help="also run the meteorological-only comparison")
@click.option("--max-depth", type=int, default=3, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--data", "data_dir", type=click.Path(exists=True),
              help="dataset directory for the rule-based baseline comparison")
def evaluate(features_path, out_dir, seed, met_only, max_depth, jobs, data_dir):
    """Nested cross-validation reports, ROC points, and comparisons."""
    _, matrix, slippery, mu = _read_features(features_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    y = slippery.astype(np.float64)
    cls_report = ev.nested_cv(matrix, y, LossKind.LOGISTIC, seed=seed,
                              max_depth=max_depth, n_jobs=jobs)
    (out / "classifier_report.json").write_text(cls_report.to_json())
    (out / "classifier_report.txt").write_text(cls_report.to_text() + "\n")
    with open(out / "roc.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, thr in ev.roc_points(cls_report.oof_scores,
                                           cls_report.oof_labels):
            w.writerow([repr(fpr), repr(tpr), repr(thr)])

    reg_rows = np.isfinite(mu)
    reg_report = None
    if reg_rows.sum() >= 30:
        reg_report = ev.nested_cv(
            FeatureMatrix(matrix.values[reg_rows], matrix.column_names),
            mu[reg_rows], LossKind.SQUARED_ERROR, seed=seed + 1,
            max_depth=max_depth, n_jobs=jobs)
        (out / "regression_report.json").write_text(reg_report.to_json())
        (out / "regression_report.txt").write_text(reg_report.to_text() + "\n")

    if met_only:
        met_values = matrix.values.copy()
        blank = [matrix.column_names.index(c) for c in ft.snowtam_column_names()]
        met_values[:, blank] = np.nan
        met_matrix = FeatureMatrix(met_values, matrix.column_names)
        met_cls = ev.nested_cv(met_matrix, y, LossKind.LOGISTIC, seed=seed,
                               max_depth=max_depth, n_jobs=jobs)
        lines = [f"{'metric':<18}{'X_tot':>10}{'X_met':>10}"]
        for metric in ("sensitivity", "specificity", "g_mean", "auc"):
            lines.append(f"{metric:<18}{cls_report.mean_metrics[metric]:>10.3f}"
                         f"{met_cls.mean_metrics[metric]:>10.3f}")
        if reg_report is not None:
            met_reg = ev.nested_cv(
                FeatureMatrix(met_values[reg_rows], matrix.column_names),
                mu[reg_rows], LossKind.SQUARED_ERROR, seed=seed + 1,
                max_depth=max_depth, n_jobs=jobs)
            for metric in ("rmse", "mae", "ba_error", "within_one_pct"):
                lines.append(
                    f"{metric:<18}{reg_report.mean_metrics[metric]:>10.3f}"
                    f"{met_reg.mean_metrics[metric]:>10.3f}")
        (out / "met_only_comparison.txt").write_text("\n".join(lines) + "\n")
        click.echo("\n".join(lines))

    if data_dir:
        weather, snowtams, landings = _read_dataset_dir(data_dir)
        cfg = bl.default_runway_config()
        rules = bl.default_scenario_rules()
        calls = {"runway_model": [], "scenario_model": [], "snowtam": []}
        avail = {"runway_model": [], "snowtam": []}
        for rec in landings:
            minute = ft.to_epoch_minute(rec.touchdown_time)
            series = weather[rec.runway_id]
            report = ft.latest_report(snowtams.get(rec.runway_id, []), minute)
            grade = bl.runway_model(report, {
                "tr": series.value_at("tr", minute),
                "hu": series.value_at("hu", minute)}, cfg)
            avail["runway_model"].append(grade is not None)
            calls["runway_model"].append(grade is not None and grade <= 3)
            calls["scenario_model"].append(
                bool(bl.scenario_model(series, minute, rules)))
            has_ba = report is not None and report.inspector_braking_action is not None
            avail["snowtam"].append(has_ba)
            calls["snowtam"].append(has_ba and report.inspector_braking_action <= 3)
        comparison = {}
        for name in calls:
            mask = np.array(avail.get(name, [True] * len(landings)))
            pred = np.array(calls[name])[mask]
            truth = slippery[mask]
            cm = ev.confusion_from_predictions(truth, pred)
            comparison[name] = ev.classification_metrics(cm)
        (out / "baselines.json").write_text(json.dumps(comparison, indent=1))
    click.echo(f"report written to {out}")
    click.echo(cls_report.to_text())


@cli.command()
@click.option("--model", "model_dir", type=click.Path(exists=True), required=True)
@click.option("--features", "features_path", type=click.Path(exists=True),
              required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--threshold", type=float)
def predict(model_dir, features_path, out_path, threshold):
    """Per-landing probabilities, classifications, and friction predictions."""
    bundle = ModelBundle.load(model_dir)
    meta, matrix, _, _ = _read_features(features_path)
    if list(matrix.column_names) != bundle.classifier.feature_names:
        raise InputError("feature schema does not match the bundle")
    p_bar = threshold if threshold is not None else bundle.expected_positive_rate
    margins = bundle.classifier.margin_matrix(matrix.values)
    probs = 1.0 / (1.0 + np.exp(-margins))
    mu_hat = np.maximum(bundle.regressor.margin_matrix(matrix.values), 0.0)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["landing_id", "probability", "is_slippery", "predicted_mu"])
        for row, p, m in zip(meta, probs, mu_hat):
            w.writerow([row["landing_id"], repr(float(p)),
                        int(p >= p_bar), repr(float(m))])
    click.echo(f"wrote predictions for {matrix.n_rows} rows to {out_path}")


@cli.command("explain")
@click.option("--model", "model_dir", type=click.Path(exists=True), required=True)
@click.option("--features", "features_path", type=click.Path(exists=True),
              required=True)
@click.option("--row", type=int, default=0, show_default=True)
@click.option("--which", type=click.Choice(["classifier", "regressor"]),
              default="classifier", show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def explain_cmd(model_dir, features_path, row, which, out_path):
    """Export one row's attribution as JSON."""
    bundle = ModelBundle.load(model_dir)
    _, matrix, _, _ = _read_features(features_path)
    if not 0 <= row < matrix.n_rows:
        raise InputError(f"row {row} outside 0..{matrix.n_rows - 1}")
    explanation = bundle.explainer(which).explain(matrix.values[row])
    Path(out_path).write_text(
        json.dumps(ex.explanation_to_dict(explanation), indent=1))
    click.echo(f"wrote explanation for row {row} to {out_path}")


@cli.command()
@click.option("--model", "model_dir", type=click.Path(exists=True), required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8008, show_default=True)
@click.option("--eval-dir", type=click.Path(exists=True))
def serve(model_dir, data_dir, host, port, eval_dir):
    """Run the HTTP assessment service."""
    import uvicorn

    from .http_api import create_app

    bundle = ModelBundle.load(model_dir)
    weather, snowtams, _ = _read_dataset_dir(data_dir)
    store = DataStore(weather, snowtams)
    app = create_app(bundle, store, eval_dir=eval_dir)
    uvicorn.run(app, host=host, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except RunwaygripError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (FileNotFoundError, PermissionError, ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        click.echo(f"internal error: {exc!r}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
