"""Second-order gradient-boosted decision trees.

Trees are grown depth-wise with exact greedy split search: every midpoint
between consecutive distinct sorted feature values is a candidate, and rows
with missing values are sent to whichever side of the split yields the
higher gain. Split gain and leaf weights follow the penalized second-order
objective (gamma per leaf, lambda on leaf weights); the learning rate is
folded into the stored leaf values.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateLeafError, InputError, UsageError

__all__ = [
    "LossKind",
    "BoostParams",
    "FeatureMatrix",
    "TreeNode",
    "Tree",
    "TreeEnsemble",
    "BestSplit",
    "grad_hess",
    "leaf_weight",
    "best_split",
    "fit",
    "predict_margin",
    "predict_proba",
]


class LossKind(enum.Enum):
    LOGISTIC = "logistic"
    SQUARED_ERROR = "squared_error"


@dataclass(frozen=True)
class BoostParams:
    """Training hyperparameters; ranges are validated on construction."""

    n_estimators: int = 100
    reg_lambda: float = 1.0
    min_split_loss: float = 0.0
    subsample: float = 1.0
    learning_rate: float = 0.3
    max_depth: int = 6
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise InputError("n_estimators must be a positive integer")
        if self.reg_lambda < 0:
            raise InputError("reg_lambda must be non-negative")
        if self.min_split_loss < 0:
            raise InputError("min_split_loss must be non-negative")
        if not 0 < self.subsample <= 1:
            raise InputError("subsample must be in (0, 1]")
        if not 0 < self.learning_rate <= 1:
            raise InputError("learning_rate must be in (0, 1]")
        if not 1 <= self.max_depth <= 16:
            raise InputError("max_depth must be in [1, 16]")


class FeatureMatrix:
    """Dense row-major matrix of reals with NaN as the missing marker."""

    def __init__(self, values, column_names):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise InputError("feature matrix must be 2-dimensional")
        names = [str(c) for c in column_names]
        if len(names) != values.shape[1]:
            raise InputError("column name count does not match matrix width")
        if len(set(names)) != len(names):
            raise InputError("column names must be unique")
        if np.isinf(values).any():
            raise InputError("non-missing values must be finite (found inf)")
        self.values = values
        self.column_names = names

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_names.index(name)]


@dataclass
class TreeNode:
    """Canonical recursive node form used for persistence and inspection.

    Internal nodes carry (feature_index, threshold, default_goes_left,
    left, right); leaves carry only weight. A row goes left when its value
    is strictly below the threshold; missing follows default_goes_left.
    """

    feature_index: int | None = None
    threshold: float | None = None
    default_goes_left: bool | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None

    @staticmethod
    def make_leaf(weight: float) -> "TreeNode":
        if not math.isfinite(weight):
            raise InputError("leaf weight must be finite")
        return TreeNode(weight=float(weight))

    @staticmethod
    def make_split(feature_index, threshold, default_goes_left, left, right) -> "TreeNode":
        if left is None or right is None:
            raise InputError("internal node requires two children")
        return TreeNode(
            feature_index=int(feature_index),
            threshold=float(threshold),
            default_goes_left=bool(default_goes_left),
            left=left,
            right=right,
        )


class Tree:
    """Flat array-of-nodes tree; node 0 is the root, feature -1 marks a leaf."""

    __slots__ = ("feature", "threshold", "default_left", "left", "right", "value")

    def __init__(self, feature, threshold, default_left, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.default_left = np.asarray(default_left, dtype=np.uint8)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def predict_one(self, x: np.ndarray) -> float:
        node = _kernels.tree_leaf_of(
            np.ascontiguousarray(x, dtype=np.float64),
            self.feature, self.threshold, self.default_left, self.left, self.right,
        )
        return float(self.value[node])

    def to_node(self, index: int = 0) -> TreeNode:
        if self.feature[index] < 0:
            return TreeNode.make_leaf(self.value[index])
        return TreeNode.make_split(
            self.feature[index],
            self.threshold[index],
            self.default_left[index] == 1,
            self.to_node(int(self.left[index])),
            self.to_node(int(self.right[index])),
        )

    @classmethod
    def from_node(cls, root: TreeNode) -> "Tree":
        feature, threshold, dleft, left, right, value = [], [], [], [], [], []

        def add(node: TreeNode) -> int:
            idx = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            dleft.append(1)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if node.is_leaf:
                if node.weight is None or not math.isfinite(node.weight):
                    raise InputError("leaf weight must be finite")
                value[idx] = float(node.weight)
            else:
                if node.left is None or node.right is None:
                    raise InputError("internal node requires two children")
                feature[idx] = int(node.feature_index)
                threshold[idx] = float(node.threshold)
                dleft[idx] = 1 if node.default_goes_left else 0
                left[idx] = add(node.left)
                right[idx] = add(node.right)
            return idx

        add(root)
        return cls(feature, threshold, dleft, left, right, value)


@dataclass
class TreeEnsemble:
    """Additive ensemble: margin(x) = base_score + sum of tree outputs."""

    base_score: float
    trees: list[Tree]
    loss: LossKind
    feature_names: list[str] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def margin(self, x) -> float:
        return predict_margin(self, x)

    def proba(self, x) -> float:
        return predict_proba(self, x)

    def margin_matrix(self, values: np.ndarray) -> np.ndarray:
        """Margins for every row of a dense (n, m) matrix."""
        values = np.ascontiguousarray(values, dtype=np.float64)
        n, m = values.shape
        self._check_width(m)
        out = np.full(n, self.base_score, dtype=np.float64)
        flat = values.reshape(-1)
        for t in self.trees:
            _kernels.add_tree_margins(
                flat, n, m, t.feature, t.threshold, t.default_left,
                t.left, t.right, t.value, out,
            )
        return out

    def _check_width(self, m: int):
        if self.feature_names and m != len(self.feature_names):
            raise InputError(
                f"input has {m} features, ensemble expects {len(self.feature_names)}"
            )


def grad_hess(loss: LossKind, y: float, margin: float) -> tuple[float, float]:
    """First and second derivative of the loss with respect to the margin."""
    if not math.isfinite(margin):
        raise InputError("margin must be finite")
    if loss is LossKind.LOGISTIC:
        if y not in (0, 1):
            raise InputError(f"logistic loss requires labels in {{0, 1}}, got {y!r}")
        p = 1.0 / (1.0 + math.exp(-margin))
        return p - y, p * (1.0 - p)
    if loss is LossKind.SQUARED_ERROR:
        if not math.isfinite(y):
            raise InputError("squared-error loss requires finite labels")
        return 2.0 * (margin - y), 2.0
    raise InputError(f"unknown loss {loss!r}")


def _grad_hess_arrays(loss: LossKind, y: np.ndarray, margins: np.ndarray):
    if loss is LossKind.LOGISTIC:
        p = 1.0 / (1.0 + np.exp(-margins))
        return p - y, p * (1.0 - p)
    return 2.0 * (margins - y), np.full_like(margins, 2.0)


def loss_value(loss: LossKind, y: np.ndarray, margins: np.ndarray) -> float:
    """Total training loss at the given margins."""
    if loss is LossKind.LOGISTIC:
        # -y log(p) - (1-y) log(1-p), stably via log1p(exp(-|m|))
        m = np.asarray(margins, dtype=np.float64)
        return float(np.sum(np.log1p(np.exp(-np.abs(m))) + np.maximum(m, 0.0) - y * m))
    return float(np.sum((y - margins) ** 2))


def leaf_weight(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    """Optimal leaf weight -G/(H + lambda); shrinkage is applied by the caller."""
    denom = h_sum + reg_lambda
    if denom <= 0:
        raise DegenerateLeafError("leaf weight undefined: H + lambda must be positive")
    return -g_sum / denom


@dataclass(frozen=True)
class BestSplit:
    threshold: float
    gain: float
    default_left: bool


def best_split(column, g, h, reg_lambda: float, min_split_loss: float) -> BestSplit | None:
    """Exact greedy search over one feature column.

    Returns the midpoint threshold with the highest gain, with missing rows
    (NaN) assigned to the side that scores better, or None when no split
    has strictly positive gain. Ties prefer the lowest threshold, then the
    left default direction.
    """
    col = np.asarray(column, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if col.shape != g.shape or col.shape != h.shape:
        raise InputError("column, g and h must be aligned")
    valid = ~np.isnan(col)
    if valid.sum() < 2:
        return None
    order = np.argsort(col[valid], kind="stable")
    vals = col[valid][order]
    gv = g[valid][order]
    hv = h[valid][order]
    g_tot = float(g.sum())
    h_tot = float(h.sum())
    g_miss = g_tot - float(gv.sum())
    h_miss = h_tot - float(hv.sum())
    parent = g_tot * g_tot / (h_tot + reg_lambda) if h_tot + reg_lambda > 0 else 0.0

    best: BestSplit | None = None
    g_pref = 0.0
    h_pref = 0.0
    for i in range(len(vals) - 1):
        g_pref += gv[i]
        h_pref += hv[i]
        if vals[i + 1] <= vals[i]:
            continue
        for go_left in (True, False):
            gl = g_pref + (g_miss if go_left else 0.0)
            hl = h_pref + (h_miss if go_left else 0.0)
            gr = g_tot - gl
            hr = h_tot - hl
            if hl + reg_lambda <= 0 or hr + reg_lambda <= 0:
                continue
            score = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
            gain = 0.5 * (score - parent) - min_split_loss
            if gain > 0 and (best is None or gain > best.gain):
                thr = 0.5 * (vals[i] + vals[i + 1])
                if not (vals[i] < thr <= vals[i + 1]):
                    thr = float(vals[i + 1])
                best = BestSplit(threshold=float(thr), gain=float(gain), default_left=go_left)
    return best


def _coerce_matrix(X) -> tuple[np.ndarray, list[str]]:
    if isinstance(X, FeatureMatrix):
        return X.values, list(X.column_names)
    values = np.ascontiguousarray(X, dtype=np.float64)
    if values.ndim != 2:
        raise InputError("X must be 2-dimensional")
    return values, [f"f{j}" for j in range(values.shape[1])]


def _presort(values: np.ndarray):
    """Per-column stable sort; NaN rows land at the tail of each column."""
    n, m = values.shape
    sorted_ids = np.empty((m, n), dtype=np.int32)
    sorted_vals = np.empty((m, n), dtype=np.float64)
    valid_n = np.empty(m, dtype=np.int64)
    for j in range(m):
        col = values[:, j]
        idx = np.argsort(col, kind="stable")
        sorted_ids[j] = idx.astype(np.int32)
        sorted_vals[j] = col[idx]
        valid_n[j] = n - np.count_nonzero(np.isnan(col))
    return sorted_ids.reshape(-1), sorted_vals.reshape(-1), valid_n


class _WorkBuffers:
    """Per-fit scratch reused across boosting iterations."""

    def __init__(self, n: int, m: int, max_depth: int):
        cap_nodes = 2 ** (max_depth + 1) - 1
        cap_slots = 2 ** (max_depth + 1)
        self.c_ids = np.empty(m * n, np.int32)
        self.c_vals = np.empty(m * n, np.float64)
        self.c_g = np.empty(m * n, np.float64)
        self.c_h = np.empty(m * n, np.float64)
        self.c_valid = np.empty(m, np.int64)
        self.c_count = np.empty(m, np.int64)
        self.t_feat = np.empty(cap_nodes, np.int32)
        self.t_thr = np.empty(cap_nodes, np.float64)
        self.t_dleft = np.empty(cap_nodes, np.uint8)
        self.t_left = np.empty(cap_nodes, np.int32)
        self.t_right = np.empty(cap_nodes, np.int32)
        self.t_value = np.empty(cap_nodes, np.float64)
        self.row_slot = np.empty(n, np.int32)
        self.slot_node = np.empty(cap_slots, np.int32)
        self.node_g = np.empty(cap_slots, np.float64)
        self.node_h = np.empty(cap_slots, np.float64)
        self.bs_gain = np.empty(cap_slots, np.float64)
        self.bs_feat = np.empty(cap_slots, np.int32)
        self.bs_thr = np.empty(cap_slots, np.float64)
        self.bs_dleft = np.empty(cap_slots, np.uint8)
        self.bs_gl = np.empty(cap_slots, np.float64)
        self.bs_hl = np.empty(cap_slots, np.float64)
        self.bs_bar = np.empty(cap_slots, np.float64)
        self.sc_last = np.empty(cap_slots, np.float64)
        self.sc_gl = np.empty(cap_slots, np.float64)
        self.sc_hl = np.empty(cap_slots, np.float64)
        self.sc_gm = np.empty(cap_slots, np.float64)
        self.sc_hm = np.empty(cap_slots, np.float64)
        self.sc_parent = np.empty(cap_slots, np.float64)
        self.child_base = np.empty(cap_slots, np.int32)


def fit(X, y, params: BoostParams, loss: LossKind) -> TreeEnsemble:
    """Train an ensemble of params.n_estimators trees.

    The base score is a zero margin for logistic loss and the label mean for
    squared error. Each iteration draws an independent Bernoulli row
    subsample from the seeded generator; a tree whose root finds no
    positive-gain split contributes nothing. Deterministic given the seed.
    """
    values, names = _coerce_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n, m = values.shape
    if y.shape != (n,):
        raise InputError("y length must match the number of rows")
    if n < 2:
        raise InputError("training requires at least 2 rows")
    if loss is LossKind.LOGISTIC:
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise InputError("logistic loss requires labels in {0, 1}")
        base = 0.0
    else:
        if not np.all(np.isfinite(y)):
            raise InputError("squared-error loss requires finite labels")
        base = float(np.mean(y))

    sorted_ids, sorted_vals, valid_n = _presort(values)
    flat = values.reshape(-1)
    rng = np.random.default_rng(params.rng_seed)
    margins = np.full(n, base, dtype=np.float64)
    buf = _WorkBuffers(n, m, params.max_depth)
    all_rows = np.ones(n, dtype=np.uint8)
    trees: list[Tree] = []
    for _k in range(params.n_estimators):
        g, h = _grad_hess_arrays(loss, y, margins)
        if params.subsample < 1.0:
            sampled = (rng.random(n) < params.subsample).astype(np.uint8)
        else:
            sampled = all_rows
        n_nodes = _kernels.build_tree(
            flat, n, m, sorted_ids, sorted_vals, valid_n, g, h, sampled,
            params.reg_lambda, params.min_split_loss, params.max_depth,
            params.learning_rate,
            buf.t_feat, buf.t_thr, buf.t_dleft, buf.t_left, buf.t_right,
            buf.t_value, buf.row_slot, buf.slot_node, buf.node_g, buf.node_h,
            buf.bs_gain, buf.bs_feat, buf.bs_thr, buf.bs_dleft, buf.bs_gl,
            buf.bs_hl, buf.bs_bar, buf.sc_last, buf.sc_gl, buf.sc_hl,
            buf.sc_gm, buf.sc_hm, buf.sc_parent, buf.child_base,
            buf.c_ids, buf.c_vals, buf.c_g, buf.c_h, buf.c_valid, buf.c_count,
        )
        tree = Tree(
            buf.t_feat[:n_nodes].copy(), buf.t_thr[:n_nodes].copy(),
            buf.t_dleft[:n_nodes].copy(), buf.t_left[:n_nodes].copy(),
            buf.t_right[:n_nodes].copy(), buf.t_value[:n_nodes].copy(),
        )
        trees.append(tree)
        _kernels.add_tree_margins(
            flat, n, m, tree.feature, tree.threshold, tree.default_left,
            tree.left, tree.right, tree.value, margins,
        )
    return TreeEnsemble(base_score=base, trees=trees, loss=loss, feature_names=names)


def predict_margin(ensemble: TreeEnsemble, x) -> float:
    """Raw additive score for one feature vector; NaN follows defaults."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputError("x must be a 1-dimensional feature vector")
    ensemble._check_width(x.shape[0])
    total = ensemble.base_score
    for t in ensemble.trees:
        total += t.predict_one(x)
    return float(total)


def predict_proba(ensemble: TreeEnsemble, x) -> float:
    """Probability of the positive class; only defined for logistic ensembles."""
    if ensemble.loss is not LossKind.LOGISTIC:
        raise UsageError("predict_proba requires a logistic-loss ensemble")
    return 1.0 / (1.0 + math.exp(-predict_margin(ensemble, x)))
