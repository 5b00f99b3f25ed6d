"""Attribution tests: exactness against subset enumeration and axioms."""
import numpy as np
import pytest

from runwaygrip import explain, gbt
from runwaygrip.errors import InputError
from runwaygrip.explain import (
    BackgroundSet,
    TreeShapExplainer,
    brute_force_shap,
    explanation_to_dict,
    global_importance,
    shap_values,
    top_arguments,
)
from runwaygrip.gbt import BoostParams, LossKind, TreeEnsemble, TreeNode


def stump(feature, threshold, left_w, right_w, default_left=True):
    return gbt.Tree.from_node(TreeNode.make_split(
        feature, threshold, default_left,
        TreeNode.make_leaf(left_w), TreeNode.make_leaf(right_w),
    ))


def random_ensemble(rng, n_features, n_trees, depth, loss=LossKind.SQUARED_ERROR):
    """Small trained ensemble over data with missing values."""
    n = 40
    X = rng.normal(size=(n, n_features))
    X[rng.random((n, n_features)) < 0.15] = np.nan
    y = rng.normal(size=n)
    if loss is LossKind.LOGISTIC:
        y = (y > 0).astype(float)
    params = BoostParams(n_estimators=n_trees, max_depth=depth, subsample=0.8,
                         learning_rate=0.4, rng_seed=int(rng.integers(0, 2**31)))
    return gbt.fit(X, y, params, loss)


def test_constant_ensemble():
    ens = TreeEnsemble(0.3, [], LossKind.SQUARED_ERROR, ["a", "b"])
    res = shap_values(ens, [1.0, 2.0], BackgroundSet([[0.0, 0.0]]))
    assert res.base_value == pytest.approx(0.3)
    assert np.all(res.phis == 0)
    assert res.margin == pytest.approx(0.3)


def test_single_stump_local_accuracy():
    ens = TreeEnsemble(0.0, [stump(0, 0.0, -1.0, 1.0)], LossKind.SQUARED_ERROR,
                       ["x1", "x2"])
    res = shap_values(ens, [1.0, 5.0], BackgroundSet([[-1.0, 7.0]]))
    assert res.base_value == pytest.approx(-1.0)
    assert res.phis[0] == pytest.approx(2.0)
    assert res.phis[1] == 0.0
    assert res.margin == pytest.approx(1.0)


def test_brute_force_singleton_reduces_to_difference():
    ens = TreeEnsemble(0.5, [stump(0, 1.0, -2.0, 3.0)], LossKind.SQUARED_ERROR, ["a"])
    bg = BackgroundSet([[0.0], [2.0]])
    res = brute_force_shap(ens, [2.0], bg)
    f_x = gbt.predict_margin(ens, np.array([2.0]))
    f_bg = np.mean([gbt.predict_margin(ens, np.array([0.0])),
                    gbt.predict_margin(ens, np.array([2.0]))])
    assert res.phis[0] == pytest.approx(f_x - f_bg)
    assert res.base_value == pytest.approx(f_bg)


def test_brute_force_symmetry():
    # two identically-shaped stumps on different features
    ens = TreeEnsemble(
        0.0,
        [stump(0, 0.0, -1.0, 1.0), stump(1, 0.0, -1.0, 1.0)],
        LossKind.SQUARED_ERROR, ["a", "b"],
    )
    res = brute_force_shap(ens, [1.0, 1.0], BackgroundSet([[-1.0, -1.0]]))
    assert res.phis[0] == pytest.approx(res.phis[1])


def test_brute_force_efficiency_axiom():
    rng = np.random.default_rng(3)
    ens = random_ensemble(rng, 4, 3, 2)
    x = rng.normal(size=4)
    bg = BackgroundSet(rng.normal(size=(5, 4)))
    res = brute_force_shap(ens, x, bg)
    assert res.total() == pytest.approx(res.margin, abs=1e-10)


def test_brute_force_refuses_large_m():
    ens = TreeEnsemble(0.0, [], LossKind.SQUARED_ERROR, [f"f{i}" for i in range(21)])
    with pytest.raises(InputError):
        brute_force_shap(ens, np.zeros(21), BackgroundSet(np.zeros((1, 21))))


def test_empty_background_rejected():
    with pytest.raises(InputError):
        BackgroundSet(np.zeros((0, 3)))


@pytest.mark.parametrize("seed", range(25))
def test_shap_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 7))
    ens = random_ensemble(rng, m, int(rng.integers(1, 5)), int(rng.integers(1, 4)))
    x = rng.normal(size=m)
    if rng.random() < 0.5:
        x[rng.integers(0, m)] = np.nan
    bg = rng.normal(size=(int(rng.integers(1, 6)), m))
    bg[rng.random(bg.shape) < 0.1] = np.nan
    fast = shap_values(ens, x, BackgroundSet(bg))
    slow = brute_force_shap(ens, x, BackgroundSet(bg))
    np.testing.assert_allclose(fast.phis, slow.phis, atol=1e-10)
    assert fast.base_value == pytest.approx(slow.base_value, abs=1e-10)
    assert fast.total() == pytest.approx(fast.margin, abs=1e-8)


def test_local_accuracy_with_missing_explicand():
    rng = np.random.default_rng(42)
    ens = random_ensemble(rng, 6, 8, 3)
    bg = BackgroundSet(rng.normal(size=(10, 6)))
    explainer = TreeShapExplainer(ens, bg)
    for _ in range(20):
        x = rng.normal(size=6)
        x[rng.random(6) < 0.3] = np.nan
        res = explainer.explain(x)
        assert res.total() == pytest.approx(res.margin, abs=1e-8)


def test_dummy_feature_gets_exact_zero():
    rng = np.random.default_rng(5)
    # tree uses only features 0 and 1; feature 2 is a dummy
    ens = TreeEnsemble(
        0.1, [stump(0, 0.0, -1.0, 1.0), stump(1, 0.5, 2.0, -2.0)],
        LossKind.SQUARED_ERROR, ["a", "b", "dummy"],
    )
    res = shap_values(ens, rng.normal(size=3), BackgroundSet(rng.normal(size=(6, 3))))
    assert res.phis[2] == 0.0


def test_additivity_across_trees():
    rng = np.random.default_rng(9)
    ens = random_ensemble(rng, 5, 6, 2)
    x = rng.normal(size=5)
    bg = BackgroundSet(rng.normal(size=(4, 5)))
    whole = shap_values(ens, x, bg)
    partial_sum = np.zeros(5)
    base_sum = 0.0
    for tree in ens.trees:
        sub = TreeEnsemble(0.0, [tree], ens.loss, ens.feature_names)
        part = shap_values(sub, x, bg)
        partial_sum += part.phis
        base_sum += part.base_value
    np.testing.assert_allclose(whole.phis, partial_sum, atol=1e-8)
    assert whole.base_value == pytest.approx(base_sum + ens.base_score, abs=1e-8)


def test_leaf_scaling_scales_attributions():
    rng = np.random.default_rng(13)
    ens = random_ensemble(rng, 4, 4, 2)
    x = rng.normal(size=4)
    bg = BackgroundSet(rng.normal(size=(3, 4)))
    res1 = shap_values(ens, x, bg)
    c = 2.5
    scaled_trees = [
        gbt.Tree(t.feature, t.threshold, t.default_left, t.left, t.right, t.value * c)
        for t in ens.trees
    ]
    ens2 = TreeEnsemble(ens.base_score, scaled_trees, ens.loss, ens.feature_names)
    res2 = shap_values(ens2, x, bg)
    np.testing.assert_allclose(res2.phis, res1.phis * c, atol=1e-9)
    assert res2.base_value - ens.base_score == pytest.approx(
        (res1.base_value - ens.base_score) * c, abs=1e-9
    )


def test_global_importance_examples():
    e = explain.Explanation(0.0, np.array([0.2, -0.5]), -0.3, ["f1", "f2"],
                            np.array([1.0, 2.0]))
    imp, order = global_importance([e])
    np.testing.assert_allclose(imp, [0.2, 0.5])
    assert order == ["f2", "f1"]
    imp2, order2 = global_importance([e, e])
    np.testing.assert_allclose(imp2, [0.4, 1.0])
    assert order2 == order


def test_global_importance_matches_naive_summation():
    rng = np.random.default_rng(17)
    names = ["a", "b", "c"]
    explanations = [
        explain.Explanation(0.0, rng.normal(size=3), 0.0, names, rng.normal(size=3))
        for _ in range(100)
    ]
    imp, _ = global_importance(explanations)
    naive = np.zeros(3)
    for e in explanations:
        for j in range(3):
            naive[j] += abs(e.phis[j])
    np.testing.assert_allclose(imp, naive, atol=1e-12)


def test_global_importance_schema_mismatch():
    a = explain.Explanation(0.0, np.zeros(2), 0.0, ["a", "b"], np.zeros(2))
    b = explain.Explanation(0.0, np.zeros(2), 0.0, ["a", "c"], np.zeros(2))
    with pytest.raises(InputError):
        global_importance([a, b])
    with pytest.raises(InputError):
        global_importance([])


def test_top_arguments():
    e = explain.Explanation(0.0, np.array([0.0, 0.0]), 0.0, ["a", "b"], np.zeros(2))
    assert top_arguments(e, 5, 5) == ([], [])
    e2 = explain.Explanation(0.0, np.array([1.0, -2.0, 3.0]), 2.0,
                             ["f1", "f2", "f3"], np.array([10.0, 20.0, 30.0]))
    pos, neg = top_arguments(e2, 1, 1)
    assert pos == [("f3", 30.0, 3.0)]
    assert neg == [("f2", 20.0, -2.0)]
    # |phi| tie broken by ascending feature index
    e3 = explain.Explanation(0.0, np.array([2.0, -2.0, 2.0]), 2.0,
                             ["f1", "f2", "f3"], np.zeros(3))
    pos3, _ = top_arguments(e3, 2, 0)
    assert [p[0] for p in pos3] == ["f1", "f3"]


def test_explanation_export_sorted_by_magnitude():
    e = explain.Explanation(0.1, np.array([0.5, -1.5, 0.0]), -0.9,
                            ["a", "b", "c"], np.array([1.0, np.nan, 3.0]))
    doc = explanation_to_dict(e)
    assert [c["feature"] for c in doc["contributions"]] == ["b", "a", "c"]
    assert doc["contributions"][0]["value"] is None
    assert doc["base_value"] == pytest.approx(0.1)
    assert doc["margin"] == pytest.approx(-0.9)
