"""Random forest classifier for LOW/HIGH labels, with recursive feature elimination."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _tree
from .core import HIGH, LOW
from .errors import InvalidParam, SchemaMismatch, SingleClass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | None = None  # None: floor(sqrt(d))
    bootstrap: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidParam(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_leaf < 1:
            raise InvalidParam(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidParam(f"max_depth must be >= 0, got {self.max_depth}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise InvalidParam("features_per_split must be >= 1")

    def mtry(self, d: int) -> int:
        k = self.features_per_split if self.features_per_split is not None else math.isqrt(d)
        if not 1 <= k <= d:
            if self.features_per_split is None:
                return 1
            raise InvalidParam(f"features_per_split {k} outside [1, {d}]")
        return k


def tree_seeds(seed: int, n_trees: int) -> np.ndarray:
    """One independent 32-bit seed per tree, derived from (seed, tree index)."""
    return np.array([np.random.SeedSequence([seed, t]).generate_state(1)[0]
                     for t in range(n_trees)], dtype=np.int64)


@dataclass(frozen=True)
class ForestModel:
    feature_names: tuple[str, ...]
    feature: np.ndarray    # (n_trees, capacity) split feature, -1 at leaves
    threshold: np.ndarray  # (n_trees, capacity)
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # fraction of HIGH samples in the node
    n_nodes: np.ndarray    # (n_trees,)
    importances: np.ndarray  # (d,), normalized mean impurity decrease
    params: ForestParams

    @property
    def n_trees(self) -> int:
        return int(self.feature.shape[0])

    def importance_map(self) -> dict[str, float]:
        return dict(zip(self.feature_names, self.importances.tolist()))

    def _align(self, X, feature_names):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise SchemaMismatch("expected a 2-D feature grid")
        if feature_names is not None:
            feature_names = tuple(feature_names)
            if feature_names != self.feature_names:
                index = {n: i for i, n in enumerate(feature_names)}
                missing = [n for n in self.feature_names if n not in index]
                if missing:
                    raise SchemaMismatch(f"missing feature columns: {missing[:5]}")
                X = X[:, [index[n] for n in self.feature_names]]
        if X.shape[1] != len(self.feature_names):
            raise SchemaMismatch(f"expected {len(self.feature_names)} columns, got {X.shape[1]}")
        if np.isnan(X).any():
            raise InvalidParam("feature grid contains missing cells")
        return np.ascontiguousarray(X)

    def tree_votes(self, X, feature_names=None) -> np.ndarray:
        """Hard vote of every tree (n_trees, n_rows); a 0.5 leaf votes LOW."""
        X = self._align(X, feature_names)
        leaves = _tree.tree_leaf_values(X, self.feature, self.threshold, self.left,
                                        self.right, self.value)
        return (leaves > 0.5).astype(np.int8)

    def predict_with_fractions(self, X, feature_names=None):
        """Majority-vote labels and the fraction of trees voting HIGH; ties go LOW."""
        votes = self.tree_votes(X, feature_names)
        high = votes.sum(axis=0)
        labels = np.where(2 * high > self.n_trees, HIGH, LOW).astype(np.int8)
        return labels, high / self.n_trees

    def predict(self, X, feature_names=None) -> np.ndarray:
        return self.predict_with_fractions(X, feature_names)[0]


def fit(X, y, params: ForestParams | None = None, feature_names=None,
        _presorted=None) -> ForestModel:
    """Grow ``params.n_trees`` CART trees on bootstrap samples with Gini splits."""
    params = params or ForestParams()
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise SchemaMismatch(f"X {X.shape} does not match y {y.shape}")
    if np.isnan(X).any():
        raise InvalidParam("feature grid contains missing cells")
    if not np.isin(y, (LOW, HIGH)).all():
        raise InvalidParam("labels must be 0 (low) or 1 (high)")
    if np.unique(y).size < 2:
        raise SingleClass("training labels contain a single class")
    d = X.shape[1]
    if feature_names is None:
        feature_names = tuple(f"f{j}" for j in range(d))
    feature_names = tuple(feature_names)
    if len(feature_names) != d:
        raise SchemaMismatch(f"{len(feature_names)} names for {d} columns")

    order, sorted_x = _presorted if _presorted is not None else _tree.presort(X)
    feature, threshold, left, right, value, imp, n_nodes = _tree.grow_forest(
        X, y, order, sorted_x, tree_seeds(params.rng_seed, params.n_trees), params.mtry(d),
        -1 if params.max_depth is None else params.max_depth, params.min_leaf, params.bootstrap)
    totals = imp.sum(axis=1, keepdims=True)
    per_tree = np.divide(imp, totals, out=np.zeros_like(imp), where=totals > 0)
    importances = per_tree.mean(axis=0)
    if importances.sum() > 0:
        importances = importances / importances.sum()
    width = int(n_nodes.max())
    return ForestModel(feature_names, feature[:, :width].copy(), threshold[:, :width].copy(),
                       left[:, :width].copy(), right[:, :width].copy(),
                       value[:, :width].copy(), n_nodes, importances, params)


@dataclass(frozen=True)
class RFEResult:
    selected: tuple[str, ...]
    model: ForestModel  # refit on the selected features
    rounds: int


def rfe(X, y, params: ForestParams | None = None, feature_names=None, target_k: int = 50,
        drop_frac: float = 0.10) -> RFEResult:
    """Recursive feature elimination driven by forest importances.

    Each round fits a forest and drops the ceil(drop_frac * d) least important
    features (never going below ``target_k``); ties drop the earlier column
    first. The forest is then refit on the survivors.
    """
    if not 0.0 < drop_frac < 1.0:
        raise InvalidParam(f"drop_frac must lie in (0, 1), got {drop_frac}")
    if target_k < 1:
        raise InvalidParam(f"target_k must be >= 1, got {target_k}")
    params = params or ForestParams()
    X = np.asarray(X, dtype=float)
    names = list(feature_names) if feature_names is not None else [f"f{j}" for j in range(X.shape[1])]
    if X.ndim != 2 or np.isnan(X).any():
        raise InvalidParam("feature grid must be 2-D without missing cells")
    X = np.ascontiguousarray(X)
    order, sorted_x = _tree.presort(X)
    cols = np.arange(X.shape[1])
    rounds = 0
    model = fit(X, y, params, names, (order, sorted_x))
    while cols.size > target_k:
        n_drop = min(math.ceil(drop_frac * cols.size), cols.size - target_k)
        ranking = np.argsort(model.importances, kind="stable")
        keep = np.sort(ranking[n_drop:])
        cols = cols[keep]
        rounds += 1
        # Restricting the full-grid presort to the surviving columns is exact.
        model = fit(np.ascontiguousarray(X[:, cols]), y, params, [names[c] for c in cols],
                    (np.ascontiguousarray(order[cols]), np.ascontiguousarray(sorted_x[cols])))
    return RFEResult(model.feature_names, model, rounds)


def dump_model(model: ForestModel) -> str:
    """Plain-text listing of every tree followed by the importances."""
    lines = [f"forest n_trees={model.n_trees} n_features={len(model.feature_names)}"]
    for t in range(model.n_trees):
        lines.append(f"tree {t} nodes={int(model.n_nodes[t])}")
        for k in range(int(model.n_nodes[t])):
            f = int(model.feature[t, k])
            if f < 0:
                lines.append(f"  {k} leaf value={float(model.value[t, k])!r}")
            else:
                lines.append(f"  {k} split {model.feature_names[f]} <= {float(model.threshold[t, k])!r}"
                             f" left={int(model.left[t, k])} right={int(model.right[t, k])}")
    lines.append("importances")
    for name, w in zip(model.feature_names, model.importances):
        lines.append(f"  {name} {float(w)!r}")
    return "\n".join(lines) + "\n"
