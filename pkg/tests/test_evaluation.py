"""Metric oracles and the nested cross-validation protocol."""
import numpy as np
import pytest

from runwaygrip import evaluation as ev
from runwaygrip.errors import InputError
from runwaygrip.evaluation import ConfusionMatrix, ParamDistribution
from runwaygrip.gbt import LossKind
from oracles import pairwise_auc


# ------------------------------------------------------------- classification

def test_metrics_reported_confusion_cells():
    cm = ConfusionMatrix(tp=4752, fn=431, fp=28576, tn=166769)
    m = ev.classification_metrics(cm)
    assert round(m["sensitivity"], 3) == 0.917
    assert round(m["specificity"], 3) == 0.854
    assert round(m["g_mean"], 3) == 0.885


def test_metrics_perfect_classifier():
    m = ev.classification_metrics(ConfusionMatrix(tp=5, fn=0, fp=0, tn=20))
    assert m == {"sensitivity": 1.0, "specificity": 1.0, "g_mean": 1.0}


def test_metrics_empty_class_error():
    with pytest.raises(InputError):
        ev.classification_metrics(ConfusionMatrix(tp=0, fn=0, fp=3, tn=5))
    with pytest.raises(InputError):
        ConfusionMatrix(tp=-1, fn=0, fp=0, tn=0)


def test_confusion_from_predictions():
    cm = ev.confusion_from_predictions([1, 1, 0, 0], [1, 0, 1, 0])
    assert (cm.tp, cm.fn, cm.fp, cm.tn) == (1, 1, 1, 1)


# ------------------------------------------------------------- ROC

def test_roc_auc_examples():
    assert ev.roc_auc([0, 1, 0, 1], [0, 1, 0, 1]) == 1.0
    assert ev.roc_auc([0.3, 0.3, 0.3], [0, 1, 0]) == 0.5
    assert ev.roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_roc_auc_single_class_error():
    with pytest.raises(InputError):
        ev.roc_auc([0.1, 0.2], [1, 1])


@pytest.mark.parametrize("seed", range(30))
def test_roc_auc_equals_pairwise_counting(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 60))
    scores = rng.integers(0, 10, size=n) / 8.0  # deliberate ties
    labels = rng.integers(0, 2, size=n)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    assert ev.roc_auc(scores, labels) == pairwise_auc(scores, labels)


def test_roc_auc_invariant_under_monotone_transform():
    rng = np.random.default_rng(5)
    scores = rng.normal(size=80)
    labels = rng.integers(0, 2, size=80)
    labels[0], labels[1] = 0, 1
    a = ev.roc_auc(scores, labels)
    assert ev.roc_auc(np.exp(scores), labels) == pytest.approx(a, abs=1e-12)
    assert ev.roc_auc(3 * scores - 7, labels) == pytest.approx(a, abs=1e-12)


def test_roc_auc_negation_complement():
    rng = np.random.default_rng(6)
    scores = rng.normal(size=50)  # continuous: no ties
    labels = rng.integers(0, 2, size=50)
    labels[0], labels[1] = 0, 1
    assert ev.roc_auc(scores, labels) + ev.roc_auc(-scores, labels) == pytest.approx(1.0)


def test_roc_points_trapezoid_matches_auc():
    rng = np.random.default_rng(7)
    scores = rng.integers(0, 6, size=40) / 4.0
    labels = rng.integers(0, 2, size=40)
    labels[0], labels[1] = 0, 1
    pts = ev.roc_points(scores, labels)
    area = 0.0
    for (f0, t0, _), (f1, t1, _) in zip(pts, pts[1:]):
        area += (f1 - f0) * (t0 + t1) / 2.0
    assert area == pytest.approx(ev.roc_auc(scores, labels), abs=1e-12)
    assert pts[0][:2] == (0.0, 0.0)
    assert pts[-1][:2] == (1.0, 1.0)


# ------------------------------------------------------------- regression

def test_regression_metrics_identity():
    m = ev.regression_metrics([0.1, 0.2], [0.1, 0.2])
    assert m == {"rmse": 0.0, "mae": 0.0, "ba_error": 0.0, "within_one_pct": 100.0}


def test_regression_metrics_ba_example():
    m = ev.regression_metrics([0.06], [0.16])
    assert m["ba_error"] == 3.0
    assert m["within_one_pct"] == 0.0


def test_regression_metrics_matches_naive_recomputation():
    from runwaygrip.friction import to_braking_action
    rng = np.random.default_rng(11)
    preds = rng.random(10) * 0.4
    truths = rng.random(10) * 0.4
    m = ev.regression_metrics(preds, truths)
    assert m["rmse"] == pytest.approx(np.sqrt(np.mean((preds - truths) ** 2)))
    assert m["mae"] == pytest.approx(np.mean(np.abs(preds - truths)))
    naive_ba = np.mean([abs(to_braking_action(p) - to_braking_action(t))
                        for p, t in zip(preds, truths)])
    assert m["ba_error"] == pytest.approx(naive_ba)


def test_regression_metrics_validation():
    with pytest.raises(InputError):
        ev.regression_metrics([0.1], [0.1, 0.2])
    with pytest.raises(InputError):
        ev.regression_metrics([], [])


# ------------------------------------------------------------- thresholding

def test_threshold_classify_inclusive_boundary():
    out = ev.threshold_classify([0.5, 0.49, 0.51], 0.5)
    assert list(out) == [True, False, True]
    with pytest.raises(InputError):
        ev.threshold_classify([0.1], 0.0)


def test_default_threshold_equals_positive_rate():
    y = np.zeros(10_000)
    y[:257] = 1.0
    assert float(np.mean(y)) == pytest.approx(0.0257)


# ------------------------------------------------------------- sampler

def test_param_distribution_ranges():
    rng = np.random.default_rng(0)
    dist = ParamDistribution()
    for _ in range(200):
        p = dist.sample(rng, max_depth=5, fit_seed=7)
        assert 50 <= p.n_estimators <= 250
        assert 0 <= p.reg_lambda <= 10
        assert 0 <= p.min_split_loss <= 0.4
        assert 0.3 <= p.subsample <= 1.0
        assert 0.1 <= p.learning_rate <= 0.21
        assert p.max_depth == 5 and p.rng_seed == 7


# ------------------------------------------------------------- nested CV

def small_classification_data(n=120, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    logits = 2.5 * X[:, 0] - 1.5 * X[:, 1]
    y = (logits + rng.normal(size=n) * 0.7 > 0.4).astype(float)
    return X, y


def test_nested_cv_classification_protocol():
    X, y = small_classification_data(n=120)
    report = ev.nested_cv(X, y, LossKind.LOGISTIC, seed=5)
    assert report.task == "classification"
    assert len(report.fold_metrics) == 10
    assert len(report.chosen_params) == 10
    # folds partition the data: n=120 -> each outer test fold has 12 rows
    assert [m["n_test"] for m in report.fold_metrics] == [12] * 10
    assert np.isfinite(report.oof_scores).all()
    assert report.mean_metrics["auc"] > 0.7
    for p in report.chosen_params:
        assert 50 <= p["n_estimators"] <= 250


def test_nested_cv_deterministic_and_thread_invariant():
    X, y = small_classification_data(n=80, seed=3)
    a = ev.nested_cv(X, y, LossKind.LOGISTIC, seed=11, max_depth=3)
    b = ev.nested_cv(X, y, LossKind.LOGISTIC, seed=11, max_depth=3)
    assert a.to_json() == b.to_json()
    c = ev.nested_cv(X, y, LossKind.LOGISTIC, seed=11, max_depth=3, n_jobs=2)
    assert a.to_json() == c.to_json()
    d = ev.nested_cv(X, y, LossKind.LOGISTIC, seed=12, max_depth=3)
    assert a.to_json() != d.to_json()


def test_nested_cv_regression():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(90, 3))
    y = 0.2 + 0.05 * X[:, 0] - 0.04 * X[:, 1] + rng.normal(size=90) * 0.01
    report = ev.nested_cv(X, y, LossKind.SQUARED_ERROR, seed=2, max_depth=3)
    assert report.task == "regression"
    assert report.mean_metrics["mae"] < 0.05
    assert set(report.mean_metrics) >= {"rmse", "mae", "ba_error", "within_one_pct"}


def test_nested_cv_stratification_error():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 3))
    y = np.zeros(60)
    y[:4] = 1.0  # 4 positives cannot reach all 10 folds
    with pytest.raises(InputError):
        ev.nested_cv(X, y, LossKind.LOGISTIC, seed=0)
    with pytest.raises(InputError):
        ev.nested_cv(X[:20], y[:20], LossKind.SQUARED_ERROR, seed=0)


def test_cv_report_text_table():
    X, y = small_classification_data(n=80, seed=3)
    report = ev.nested_cv(X, y, LossKind.LOGISTIC, seed=11, max_depth=3)
    text = report.to_text()
    assert "g_mean" in text and "auc" in text
    assert len(text.splitlines()) >= 6
