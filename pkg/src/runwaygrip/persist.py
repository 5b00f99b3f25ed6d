"""Versioned JSON persistence for tree ensembles.

Thresholds and leaf weights are written as shortest round-trip decimal
strings (Python's float repr), so a load of a dump reproduces the exact
binary64 values.
"""
from __future__ import annotations

import json

from .errors import InputError
from .gbt import LossKind, Tree, TreeEnsemble

FORMAT_VERSION = 1


def ensemble_to_dict(ensemble: TreeEnsemble) -> dict:
    trees = []
    for t in ensemble.trees:
        nodes = []
        for i in range(t.n_nodes):
            if t.feature[i] < 0:
                nodes.append({"leaf": float(t.value[i])})
            else:
                nodes.append({
                    "feature": int(t.feature[i]),
                    "threshold": float(t.threshold[i]),
                    "default_left": bool(t.default_left[i]),
                    "left": int(t.left[i]),
                    "right": int(t.right[i]),
                })
        trees.append({"nodes": nodes})
    return {
        "format_version": FORMAT_VERSION,
        "loss": ensemble.loss.value,
        "base_score": float(ensemble.base_score),
        "feature_names": list(ensemble.feature_names),
        "trees": trees,
    }


def ensemble_to_json(ensemble: TreeEnsemble) -> str:
    return json.dumps(ensemble_to_dict(ensemble), indent=1)


def ensemble_from_dict(doc: dict) -> TreeEnsemble:
    if not isinstance(doc, dict):
        raise InputError("model document must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise InputError(f"unsupported model format_version {doc.get('format_version')!r}")
    try:
        loss = LossKind(doc["loss"])
    except (KeyError, ValueError) as exc:
        raise InputError(f"unknown loss kind in model document: {exc}") from exc
    base = doc.get("base_score")
    if not isinstance(base, (int, float)):
        raise InputError("base_score must be a number")
    names = doc.get("feature_names")
    if not isinstance(names, list):
        raise InputError("feature_names must be a list")
    trees = []
    for ti, tdoc in enumerate(doc.get("trees", [])):
        nodes = tdoc.get("nodes")
        if not nodes:
            raise InputError(f"tree {ti} has no nodes")
        feature, threshold, dleft, left, right, value = [], [], [], [], [], []
        for ni, nd in enumerate(nodes):
            if "leaf" in nd:
                feature.append(-1)
                threshold.append(0.0)
                dleft.append(1)
                left.append(-1)
                right.append(-1)
                value.append(float(nd["leaf"]))
            else:
                for key in ("feature", "threshold", "default_left", "left", "right"):
                    if key not in nd:
                        raise InputError(f"tree {ti} node {ni} missing {key!r}")
                if not 0 <= nd["left"] < len(nodes) or not 0 <= nd["right"] < len(nodes):
                    raise InputError(f"tree {ti} node {ni} child index out of range")
                if not 0 <= nd["feature"] < len(names):
                    raise InputError(f"tree {ti} node {ni} feature index out of range")
                feature.append(int(nd["feature"]))
                threshold.append(float(nd["threshold"]))
                dleft.append(1 if nd["default_left"] else 0)
                left.append(int(nd["left"]))
                right.append(int(nd["right"]))
                value.append(0.0)
        trees.append(Tree(feature, threshold, dleft, left, right, value))
    return TreeEnsemble(
        base_score=float(base), trees=trees, loss=loss,
        feature_names=[str(s) for s in names],
    )


def ensemble_from_json(text: str) -> TreeEnsemble:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"model document is not valid JSON: {exc}") from exc
    return ensemble_from_dict(doc)


def save_ensemble(ensemble: TreeEnsemble, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(ensemble_to_json(ensemble))


def load_ensemble(path) -> TreeEnsemble:
    with open(path, "r", encoding="utf-8") as fh:
        return ensemble_from_json(fh.read())
