"""Exact interventional Shapley attributions for tree ensembles.

Attribution is on the margin scale (pre-sigmoid). For every leaf of every
tree and every background row, the leaf's path constraints split into the
features only the explicand satisfies (must be present in the coalition),
the features only the background row satisfies (must be absent), and
unconstrained features. A leaf then contributes closed-form Shapley mass
to exactly those features, which reproduces the subset-enumeration value
without enumerating subsets. Averaging over the background rows yields the
interventional expectation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError
from .gbt import FeatureMatrix, Tree, TreeEnsemble, predict_margin

__all__ = [
    "Explanation",
    "BackgroundSet",
    "TreeShapExplainer",
    "shap_values",
    "brute_force_shap",
    "global_importance",
    "top_arguments",
    "explanation_to_dict",
]

MAX_BRUTE_FORCE_FEATURES = 20


@dataclass
class Explanation:
    """Additive attribution: base_value + sum(phis) equals the margin."""

    base_value: float
    phis: np.ndarray
    margin: float
    feature_names: list[str]
    feature_values: np.ndarray

    def total(self) -> float:
        return self.base_value + float(np.sum(self.phis))


class BackgroundSet:
    """Reference rows that define the interventional expectation."""

    def __init__(self, rows):
        if isinstance(rows, FeatureMatrix):
            values = rows.values
        else:
            values = np.ascontiguousarray(rows, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1:
            raise InputError("background set requires at least one row")
        self.values = values

    @classmethod
    def sample(cls, values, max_rows: int = 256, seed: int = 0) -> "BackgroundSet":
        """Uniform seeded subsample of training rows, at most max_rows."""
        if isinstance(values, FeatureMatrix):
            values = values.values
        values = np.asarray(values, dtype=np.float64)
        n = values.shape[0]
        if n <= max_rows:
            return cls(values.copy())
        idx = np.sort(np.random.default_rng(seed).choice(n, size=max_rows, replace=False))
        return cls(values[idx])

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


def _leaf_paths(tree: Tree):
    """Per-leaf combined path constraints: (feature, lo, hi, missing_ok, weight).

    A leaf is reached by value v of feature f iff lo <= v < hi, and by a
    missing value iff every node on the path with that feature defaults
    toward the leaf.
    """
    leaves = []

    def walk(node, constraints):
        if tree.feature[node] < 0:
            leaves.append((dict(constraints), float(tree.value[node])))
            return
        f = int(tree.feature[node])
        thr = float(tree.threshold[node])
        dleft = tree.default_left[node] == 1
        lo, hi, miss = constraints.get(f, (-math.inf, math.inf, True))
        constraints[f] = (lo, min(hi, thr), miss and dleft)
        walk(int(tree.left[node]), constraints)
        constraints[f] = (max(lo, thr), hi, miss and not dleft)
        walk(int(tree.right[node]), constraints)
        if lo == -math.inf and hi == math.inf and miss:
            del constraints[f]
        else:
            constraints[f] = (lo, hi, miss)

    walk(0, {})
    return leaves


class TreeShapExplainer:
    """Reusable explainer: precomputes path tables and background bits."""

    def __init__(self, ensemble: TreeEnsemble, background: BackgroundSet):
        if not isinstance(background, BackgroundSet):
            background = BackgroundSet(background)
        m = ensemble.n_features
        if background.values.shape[1] != m:
            raise InputError("background column count does not match the model")
        self.ensemble = ensemble
        self.background = background

        ptr = [0]
        weights = []
        feats: list[int] = []
        los: list[float] = []
        his: list[float] = []
        miss: list[int] = []
        max_path = 1
        for tree in ensemble.trees:
            for constraints, w in _leaf_paths(tree):
                # a leaf no value and no missing default can reach is inert
                if any(lo >= hi and not mok for lo, hi, mok in constraints.values()):
                    continue
                for f, (lo, hi, mok) in sorted(constraints.items()):
                    feats.append(f)
                    los.append(lo)
                    his.append(hi)
                    miss.append(1 if mok else 0)
                weights.append(w)
                ptr.append(len(feats))
                max_path = max(max_path, len(constraints))
        self._leaf_ptr = np.asarray(ptr, dtype=np.int64)
        self._leaf_w = np.asarray(weights, dtype=np.float64)
        self._path_feat = np.asarray(feats, dtype=np.int32)
        self._path_lo = np.asarray(los, dtype=np.float64)
        self._path_hi = np.asarray(his, dtype=np.float64)
        self._path_miss = np.asarray(miss, dtype=np.uint8)
        self._max_path = max_path
        self._wu = _shapley_weight_table(max_path + 1)

        b = background.n_rows
        self._bg_flat = np.ascontiguousarray(background.values).reshape(-1)
        self._satz = np.empty(b * len(self._path_feat), dtype=np.uint8)
        if len(self._path_feat):
            _kernels.fill_satz(
                self._bg_flat, b, m, self._path_feat, self._path_lo,
                self._path_hi, self._path_miss, self._satz,
            )

    def explain(self, x) -> Explanation:
        x = np.ascontiguousarray(x, dtype=np.float64)
        m = self.ensemble.n_features
        if x.shape != (m,):
            raise InputError(f"explicand must have {m} features")
        phi = np.zeros(m, dtype=np.float64)
        if len(self._leaf_w):
            base = _kernels.shap_single(
                x, self._bg_flat, self.background.n_rows, m,
                self._leaf_ptr, self._leaf_w, self._path_feat, self._path_lo,
                self._path_hi, self._path_miss, self._satz, self._wu, phi,
                np.empty(self._max_path, dtype=np.uint8),
            )
        else:
            base = 0.0
        base += self.ensemble.base_score
        return Explanation(
            base_value=float(base),
            phis=phi,
            margin=predict_margin(self.ensemble, x),
            feature_names=list(self.ensemble.feature_names),
            feature_values=x.copy(),
        )


def _shapley_weight_table(size: int) -> np.ndarray:
    """w[u, v] = (u-1)! v! / (u+v)! for u >= 1, used for present features."""
    fact = [math.factorial(k) for k in range(2 * size + 2)]
    w = np.zeros((size + 1, size + 1), dtype=np.float64)
    for u in range(1, size + 1):
        for v in range(0, size + 1):
            w[u, v] = fact[u - 1] * fact[v] / fact[u + v]
    return w


def shap_values(ensemble: TreeEnsemble, x, background) -> Explanation:
    """Exact interventional Shapley values of the margin for one explicand."""
    return TreeShapExplainer(ensemble, background).explain(x)


def brute_force_shap(ensemble: TreeEnsemble, x, background) -> Explanation:
    """Literal subset enumeration of the Shapley sum; oracle for shap_values."""
    if not isinstance(background, BackgroundSet):
        background = BackgroundSet(background)
    m = ensemble.n_features
    if m > MAX_BRUTE_FORCE_FEATURES:
        raise InputError(
            f"brute-force enumeration refuses m={m} > {MAX_BRUTE_FORCE_FEATURES} features"
        )
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (m,):
        raise InputError(f"explicand must have {m} features")
    bg = background.values

    f_cache = np.empty(2 ** m, dtype=np.float64)
    for mask in range(2 ** m):
        composite = bg.copy()
        for j in range(m):
            if mask >> j & 1:
                composite[:, j] = x[j]
        f_cache[mask] = float(np.mean(ensemble.margin_matrix(composite)))

    masks = np.arange(2 ** m, dtype=np.int64)
    popcount = np.zeros(2 ** m, dtype=np.int64)
    for j in range(m):
        popcount += (masks >> j) & 1
    fact = [math.factorial(k) for k in range(m + 1)]
    weight_by_size = np.array(
        [fact[s] * fact[m - s - 1] / fact[m] for s in range(m)])
    phi = np.zeros(m, dtype=np.float64)
    full = 2 ** m - 1
    for j in range(m):
        without_j = masks[(masks >> j) & 1 == 0]
        w = weight_by_size[popcount[without_j]]
        phi[j] = float(np.sum(
            w * (f_cache[without_j | (1 << j)] - f_cache[without_j])))
    return Explanation(
        base_value=f_cache[0],
        phis=phi,
        margin=f_cache[full],
        feature_names=list(ensemble.feature_names),
        feature_values=x.copy(),
    )


def global_importance(explanations: list[Explanation]):
    """Sum of absolute attributions per feature, with a descending name order."""
    if not explanations:
        raise InputError("global importance requires at least one explanation")
    names = explanations[0].feature_names
    for e in explanations[1:]:
        if e.feature_names != names:
            raise InputError("explanations have mismatched feature schemas")
    importance = np.zeros(len(names), dtype=np.float64)
    for e in explanations:
        importance += np.abs(e.phis)
    order = sorted(range(len(names)), key=lambda j: (-importance[j], j))
    return importance, [names[j] for j in order]


def top_arguments(explanation: Explanation, k_pos: int, k_neg: int):
    """Strongest positive and negative contributions, |phi| descending.

    Each entry is (feature_name, feature_value, phi); ties in |phi| break
    by ascending feature index.
    """
    if k_pos < 0 or k_neg < 0:
        raise InputError("k_pos and k_neg must be non-negative")
    order = sorted(
        range(len(explanation.phis)),
        key=lambda j: (-abs(explanation.phis[j]), j),
    )
    positives = [
        (explanation.feature_names[j], float(explanation.feature_values[j]),
         float(explanation.phis[j]))
        for j in order if explanation.phis[j] > 0
    ][:k_pos]
    negatives = [
        (explanation.feature_names[j], float(explanation.feature_values[j]),
         float(explanation.phis[j]))
        for j in order if explanation.phis[j] < 0
    ][:k_neg]
    return positives, negatives


def explanation_to_dict(explanation: Explanation) -> dict:
    order = sorted(
        range(len(explanation.phis)),
        key=lambda j: (-abs(explanation.phis[j]), j),
    )
    contributions = []
    for j in order:
        value = explanation.feature_values[j]
        contributions.append({
            "feature": explanation.feature_names[j],
            "value": None if np.isnan(value) else float(value),
            "phi": float(explanation.phis[j]),
        })
    return {
        "base_value": float(explanation.base_value),
        "margin": float(explanation.margin),
        "contributions": contributions,
    }
