from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np


class EmptyDataset(ValueError):
    pass


class ArityMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``X`` (n x p) and target vector ``y``; arrays are read-only."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(len(y), -1) if len(y) else X.reshape(0, 0)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError(f"{len(names)} feature names for {X.shape[1]} features")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[Sequence[float], float]], feature_names=()):
        if not rows:
            p = len(feature_names)
            return cls(np.zeros((0, p)), np.zeros(0), feature_names)
        return cls(np.array([r[0] for r in rows], dtype=float), [r[1] for r in rows], feature_names)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def rows(self):
        return [(tuple(x), t) for x, t in zip(self.X.tolist(), self.y.tolist())]

    def head(self, n: int) -> "Dataset":
        return Dataset(self.X[:n], self.y[:n], self.feature_names)

    def tail(self, start: int) -> "Dataset":
        return Dataset(self.X[start:], self.y[start:], self.feature_names)


@dataclass(frozen=True)
class FitReport:
    fit_duration: float
    training_rows: int


def require_rows(d: Dataset) -> None:
    if d.n_rows < 1:
        raise EmptyDataset("cannot fit on an empty dataset")


def stable_mean(values: np.ndarray) -> float:
    """Mean that is exact when all values are equal.

    Offsets by the minimum before summing; with math.fsum the result does
    not depend on the order of ``values``.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyDataset("mean of nothing")
    base = float(values.min())
    return base + math.fsum((values - base).tolist()) / values.size


def canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row permutation that sorts by (all features, target).

    Fitting on canonically ordered rows makes every floating-point sum
    independent of the order rows arrived in.
    """
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def ols(X: np.ndarray, y: np.ndarray, ridge: float | None = 1e-8):
    """Least squares with intercept on centred data.

    Rank-deficient normal equations are solved with ``ridge`` added to the
    diagonal; with ``ridge=None`` they return ``None`` instead.
    Returns ``(intercept, coef)``.
    """
    n, p = X.shape
    y_mean = stable_mean(y)
    if p == 0:
        return y_mean, np.zeros(0)
    x_mean = np.array([stable_mean(X[:, j]) for j in range(p)])
    Xc = X - x_mean
    yc = y - y_mean
    A = Xc.T @ Xc
    b = Xc.T @ yc
    if np.linalg.matrix_rank(A) < p:
        if ridge is None:
            return None
        A = A + ridge * np.eye(p)
    coef = np.linalg.solve(A, b)
    if not np.any(yc):
        coef = np.zeros(p)  # solve() may hand back -0.0
    intercept = y_mean - float(coef @ x_mean) if np.any(coef) else y_mean
    return intercept, coef


class Predictor:
    """Common contract: fitted, immutable, ``predict`` on one feature vector."""

    algorithm: ClassVar[str] = ""
    arity: int

    def predict(self, features: Sequence[float]) -> float:
        x = np.asarray(features, dtype=float).reshape(-1)
        if x.shape[0] != self.arity:
            raise ArityMismatch(f"{self.algorithm} fitted on {self.arity} features, got {x.shape[0]}")
        return float(self._predict(x))

    def predict_many(self, X) -> np.ndarray:
        return np.array([self.predict(row) for row in np.asarray(X, dtype=float)])

    def _predict(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def to_params(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_params(cls, arity: int, params: dict) -> "Predictor":
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LinearModel:
    """intercept + coef . x[features]; shared by linear regression and model-tree leaves."""

    intercept: float
    features: tuple[int, ...] = ()
    coef: tuple[float, ...] = field(default=())

    def __call__(self, x: np.ndarray) -> float:
        if not self.features:
            return self.intercept
        return self.intercept + float(np.dot(self.coef, x[list(self.features)]))

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        if not self.features:
            return np.full(X.shape[0], self.intercept)
        return self.intercept + X[:, list(self.features)] @ np.asarray(self.coef)

    def to_dict(self) -> dict:
        return {"intercept": self.intercept, "features": list(self.features), "coef": list(self.coef)}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(float(d["intercept"]), tuple(int(f) for f in d["features"]), tuple(float(c) for c in d["coef"]))
