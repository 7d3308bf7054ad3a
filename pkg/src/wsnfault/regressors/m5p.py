"""M5 model tree: SDR splits, linear models in the leaves, error-based pruning.

Growth stops when a node has fewer than ``2 * min_leaf`` rows or its target
standard deviation is below 5% of the root's. Each node gets a least-squares
model over the features tested anywhere in its subtree (a leaf that was
never split therefore predicts its mean). Pruning works bottom-up and
collapses a subtree into its node model whenever the node model's
complexity-adjusted mean absolute error is no worse than the subtree's.
No smoothing pass is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import Dataset, LinearModel, Predictor, canonical_order, ols, require_rows, stable_mean
from .stump import midpoint

DEFAULT_MIN_LEAF = 4
SD_FRACTION = 0.05
SMALL_SAMPLE_FACTOR = 10.0
# errors closer than this fraction of the root sd count as equal when pruning
PRUNE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Node:
    # internal: feature/threshold/left/right set, model None; leaf: model set
    feature: int | None = None
    threshold: float = 0.0
    left: "Node | None" = None
    right: "Node | None" = None
    model: LinearModel | None = None

    @property
    def is_leaf(self) -> bool:
        return self.model is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"model": self.model.to_dict()}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        if "model" in d:
            return cls(model=LinearModel.from_dict(d["model"]))
        return cls(int(d["feature"]), float(d["threshold"]), cls.from_dict(d["left"]), cls.from_dict(d["right"]))


@dataclass(frozen=True, eq=False)
class ModelTree(Predictor):
    algorithm = "M5P"

    arity: int
    root: Node

    def leaf_for(self, x) -> Node:
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] < node.threshold else node.right
        return node

    def _predict(self, x):
        return self.leaf_for(x).model(x)

    def leaves(self) -> list[Node]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend((node.right, node.left))
        return out

    def to_params(self):
        return {"tree": self.root.to_dict()}

    @classmethod
    def from_params(cls, arity, params):
        return cls(arity, Node.from_dict(params["tree"]))


def _sd(y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    mu = stable_mean(y)
    return math.sqrt(float(np.mean((y - mu) ** 2)))


def adjusted_error(mae: float, n: int, p: int) -> float:
    """Inflate training MAE by (n + p) / (n - p) for a model with ``p`` parameters."""
    factor = (n + p) / (n - p) if n > p else SMALL_SAMPLE_FACTOR
    return mae * factor


def best_sdr_split(X: np.ndarray, y: np.ndarray, min_leaf: int):
    """Highest standard-deviation-reduction split with both sides >= min_leaf.

    Returns ``(sdr, feature, threshold)`` or ``None`` when no split has SDR > 0.
    """
    n, p = X.shape
    sd_all = _sd(y)
    best = None
    for f in range(p):
        order = np.lexsort((y, X[:, f]))
        xs, ys = X[order, f], y[order]
        yc = ys - stable_mean(ys)
        cs, cs2 = np.cumsum(yc), np.cumsum(yc * yc)
        pos = np.nonzero(xs[1:] > xs[:-1])[0] + 1
        pos = pos[(pos >= min_leaf) & (n - pos >= min_leaf)]
        if pos.size == 0:
            continue
        nl = pos.astype(float)
        nr = n - nl
        sl, sl2 = cs[pos - 1], cs2[pos - 1]
        sr, sr2 = cs[-1] - sl, cs2[-1] - sl2
        var_l = np.maximum(sl2 / nl - (sl / nl) ** 2, 0.0)
        var_r = np.maximum(sr2 / nr - (sr / nr) ** 2, 0.0)
        sdr = sd_all - (nl / n) * np.sqrt(var_l) - (nr / n) * np.sqrt(var_r)
        i = int(np.argmax(sdr))
        if sdr[i] > 0 and (best is None or sdr[i] > best[0]):
            best = (float(sdr[i]), f, midpoint(float(xs[pos[i] - 1]), float(xs[pos[i]])))
    return best


@dataclass
class _Grown:
    rows: np.ndarray
    feature: int | None = None
    threshold: float = 0.0
    left: "_Grown | None" = None
    right: "_Grown | None" = None
    used: frozenset = frozenset()


def _node_model(X: np.ndarray, y: np.ndarray, features: tuple[int, ...]) -> LinearModel:
    if features:
        fitted = ols(X[:, list(features)], y, ridge=None)
        if fitted is not None:
            intercept, coef = fitted
            return LinearModel(float(intercept), features, tuple(float(c) for c in coef))
    return LinearModel(stable_mean(y))


def fit_m5p(d: Dataset, min_leaf: int = DEFAULT_MIN_LEAF) -> ModelTree:
    require_rows(d)
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    order = canonical_order(d.X, d.y)
    X, y = d.X[order], d.y[order]
    root_sd = _sd(y)

    def grow(rows: np.ndarray) -> _Grown:
        node = _Grown(rows)
        ys = y[rows]
        if len(rows) < 2 * min_leaf or _sd(ys) < SD_FRACTION * root_sd:
            return node
        split = best_sdr_split(X[rows], ys, min_leaf)
        if split is None:
            return node
        _, f, thr = split
        mask = X[rows, f] < thr
        node.feature, node.threshold = f, thr
        node.left, node.right = grow(rows[mask]), grow(rows[~mask])
        node.used = frozenset({f}) | node.left.used | node.right.used
        return node

    def prune(g: _Grown) -> tuple[Node, float]:
        Xn, yn = X[g.rows], y[g.rows]
        model = _node_model(Xn, yn, tuple(sorted(g.used)))
        mae = float(np.mean(np.abs(model.predict_matrix(Xn) - yn)))
        own = adjusted_error(mae, len(g.rows), len(model.features) + 1)
        if g.feature is None:
            return Node(model=model), own
        left, el = prune(g.left)
        right, er = prune(g.right)
        n = len(g.rows)
        subtree = (len(g.left.rows) * el + len(g.right.rows) * er) / n
        if own <= subtree + PRUNE_TOLERANCE * root_sd:
            return Node(model=model), own
        return Node(g.feature, g.threshold, left, right), subtree

    root, _ = prune(grow(np.arange(len(y))))
    return ModelTree(d.n_features, root)
