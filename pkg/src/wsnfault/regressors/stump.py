from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Dataset, Predictor, require_rows, stable_mean


@dataclass(frozen=True, eq=False)
class DecisionStump(Predictor):
    """One split: ``x[feature] < threshold`` goes left. ``feature is None`` means a single leaf."""

    algorithm = "DecisionStump"

    arity: int
    feature: int | None
    threshold: float
    left_value: float
    right_value: float

    def _predict(self, x):
        if self.feature is None or x[self.feature] < self.threshold:
            return self.left_value
        return self.right_value

    def to_params(self):
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left_value": self.left_value,
            "right_value": self.right_value,
        }

    @classmethod
    def from_params(cls, arity, params):
        f = params["feature"]
        return cls(
            arity,
            None if f is None else int(f),
            float(params["threshold"]),
            float(params["left_value"]),
            float(params["right_value"]),
        )


def split_sse(xs: np.ndarray, ys: np.ndarray):
    """SSE of every boundary split of rows already sorted by ``xs``.

    Returns ``(positions, sse)``: position ``i`` puts ``xs[:i]`` left. Only
    boundaries between distinct values are returned.
    """
    n = len(xs)
    yc = ys - stable_mean(ys)
    cs = np.cumsum(yc)
    cs2 = np.cumsum(yc * yc)
    pos = np.nonzero(xs[1:] > xs[:-1])[0] + 1
    if pos.size == 0:
        return pos, np.zeros(0)
    nl = pos.astype(float)
    nr = n - nl
    sl, sl2 = cs[pos - 1], cs2[pos - 1]
    sr, sr2 = cs[-1] - sl, cs2[-1] - sl2
    sse = (sl2 - sl * sl / nl) + (sr2 - sr * sr / nr)
    return pos, sse


def midpoint(a: float, b: float) -> float:
    m = (a + b) / 2.0
    # adjacent doubles can round the midpoint down onto a
    return b if m <= a else m


def fit_decision_stump(d: Dataset) -> DecisionStump:
    """Least-squares one-level regression tree.

    Thresholds are midpoints between consecutive distinct values. Ties go to
    the lowest feature index, then the lowest threshold. If no split beats
    the unsplit SSE the stump is a single leaf at the mean.
    """
    require_rows(d)
    X, y = d.X, d.y
    n, p = X.shape
    mean_all = stable_mean(y)
    yc = np.sort(y) - mean_all
    best_sse = float(np.dot(yc, yc))
    best = None
    for f in range(p):
        order = np.lexsort((y, X[:, f]))
        xs, ys = X[order, f], y[order]
        pos, sse = split_sse(xs, ys)
        if pos.size == 0:
            continue
        i = int(np.argmin(sse))
        if sse[i] < best_sse and (best is None or sse[i] < best[0]):
            best = (float(sse[i]), f, int(pos[i]), xs, ys)
            best_sse = float(sse[i])
    if best is None or n < 2:
        return DecisionStump(p, None, 0.0, mean_all, mean_all)
    _, f, i, xs, ys = best
    return DecisionStump(p, f, midpoint(float(xs[i - 1]), float(xs[i])), stable_mean(ys[:i]), stable_mean(ys[i:]))
