from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Dataset, Predictor, require_rows, stable_mean

DEFAULT_BINS = 10


def _bin_codes(X: np.ndarray, lo: np.ndarray, width: np.ndarray, bins: int) -> np.ndarray:
    safe = np.where(width > 0, width, 1.0)
    codes = np.floor((X - lo) / safe).astype(np.int64)
    codes = np.clip(codes, 0, bins - 1)
    codes[:, width <= 0] = 0
    return codes


def loo_mse(codes: np.ndarray, yc: np.ndarray) -> float:
    """Leave-one-out MSE of a cell-mean table keyed on the columns of ``codes``.

    ``yc`` should be centred. A row alone in its cell is predicted by the
    mean of every other row, mirroring the global-mean fallback.
    """
    n = len(yc)
    total = float(yc.sum())
    if codes.shape[1] == 0:
        cells = np.zeros(n, dtype=np.int64)
    else:
        _, cells = np.unique(codes, axis=0, return_inverse=True)
        cells = cells.reshape(-1)
    counts = np.bincount(cells)
    sums = np.bincount(cells, weights=yc)
    c = counts[cells]
    s = sums[cells]
    own = np.where(c > 1, (s - yc) / np.maximum(c - 1, 1), (total - yc) / (n - 1))
    err = own - yc
    return float(np.dot(err, err) / n)


@dataclass(frozen=True, eq=False)
class DecisionTable(Predictor):
    algorithm = "DecisionTable"

    arity: int
    selected: tuple[int, ...]
    lo: tuple[float, ...]
    width: tuple[float, ...]
    bins: int
    cells: dict  # tuple of bin codes -> mean target
    default: float

    def _predict(self, x):
        if not self.selected:
            return self.default
        key = self._key(x)
        return self.cells.get(key, self.default)

    def _key(self, x):
        sel = list(self.selected)
        lo = np.array(self.lo)[sel]
        width = np.array(self.width)[sel]
        codes = _bin_codes(x[sel].reshape(1, -1), lo, width, self.bins)
        return tuple(int(c) for c in codes[0])

    def to_params(self):
        return {
            "selected": list(self.selected),
            "lo": list(self.lo),
            "width": list(self.width),
            "bins": self.bins,
            "default": self.default,
            "cells": [[list(k), v] for k, v in sorted(self.cells.items())],
        }

    @classmethod
    def from_params(cls, arity, params):
        return cls(
            arity,
            tuple(int(s) for s in params["selected"]),
            tuple(float(v) for v in params["lo"]),
            tuple(float(v) for v in params["width"]),
            int(params["bins"]),
            {tuple(int(c) for c in k): float(v) for k, v in params["cells"]},
            float(params["default"]),
        )


def fit_decision_table(d: Dataset, bins: int = DEFAULT_BINS) -> DecisionTable:
    """Lookup table over a greedily chosen subset of equal-width-binned features.

    Forward selection adds whichever feature lowers leave-one-out MSE the
    most and stops when nothing strictly improves it. Lookups that miss
    every training cell return the global mean.
    """
    require_rows(d)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    X, y = d.X, d.y
    n, p = X.shape
    lo = X.min(axis=0) if n else np.zeros(p)
    width = (X.max(axis=0) - lo) / bins if n else np.zeros(p)
    codes = _bin_codes(X, lo, width, bins)
    default = stable_mean(y)
    # centre on the minimum so constant targets give exactly-zero errors
    yc = y - y.min()

    selected: list[int] = []
    if n > 1:
        current = loo_mse(codes[:, []], yc)
        while True:
            best_err, best_f = None, None
            for f in range(p):
                if f in selected:
                    continue
                err = loo_mse(codes[:, selected + [f]], yc)
                if best_err is None or err < best_err:
                    best_err, best_f = err, f
            if best_f is None or not best_err < current:
                break
            selected.append(best_f)
            current = best_err

    cells = {}
    if selected:
        keys = codes[:, selected]
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        for i, key in enumerate(uniq):
            cells[tuple(int(c) for c in key)] = stable_mean(y[inv == i])
    return DecisionTable(p, tuple(selected), tuple(lo.tolist()), tuple(width.tolist()), bins, cells, default)
