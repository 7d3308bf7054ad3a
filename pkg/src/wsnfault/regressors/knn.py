from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Dataset, Predictor, canonical_order, require_rows, stable_mean


class KTooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KNearestNeighbours(Predictor):
    """Instance-based regressor: mean target of the k closest training rows.

    Distances are Euclidean after per-feature min-max scaling fitted on the
    training rows. Rows are stored in canonical order and equal distances
    prefer the earlier stored row, so the fit ignores input row order.
    """

    algorithm = "KNN"

    arity: int
    k: int
    X: np.ndarray
    y: np.ndarray
    lo: np.ndarray
    span: np.ndarray

    def normalise(self, X: np.ndarray) -> np.ndarray:
        safe = np.where(self.span > 0, self.span, 1.0)
        Z = (np.asarray(X, dtype=float) - self.lo) / safe
        Z[..., self.span <= 0] = 0.0
        return Z

    def neighbours(self, features) -> np.ndarray:
        q = self.normalise(np.asarray(features, dtype=float))
        Z = self.normalise(self.X)
        d2 = np.sum((Z - q) ** 2, axis=1)
        order = np.argsort(d2, kind="stable")
        return np.sort(order[: self.k])

    def _predict(self, x):
        return stable_mean(self.y[self.neighbours(x)])

    def to_params(self):
        return {"k": self.k, "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_params(cls, arity, params):
        X = np.array(params["X"], dtype=float).reshape(-1, arity)
        return _build(X, np.array(params["y"], dtype=float), int(params["k"]))


def _build(X: np.ndarray, y: np.ndarray, k: int) -> KNearestNeighbours:
    X = np.array(X, dtype=float)
    y = np.array(y, dtype=float)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    for a in (X, y, lo, span):
        a.setflags(write=False)
    return KNearestNeighbours(X.shape[1], k, X, y, lo, span)


def fit_knn(d: Dataset, k: int = 1) -> KNearestNeighbours:
    require_rows(d)
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > d.n_rows:
        raise KTooLarge(f"k={k} but only {d.n_rows} training rows")
    order = canonical_order(d.X, d.y)
    return _build(d.X[order], d.y[order], k)
