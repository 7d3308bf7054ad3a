"""Five numeric predictors behind one ``fit`` / ``predict`` contract."""

from __future__ import annotations

import json
import os
import tempfile
import time
from pathlib import Path

from .base import ArityMismatch, Dataset, EmptyDataset, FitReport, Predictor, stable_mean
from .knn import KNearestNeighbours, KTooLarge, fit_knn
from .linear import LinearRegression, fit_linear_regression
from .m5p import ModelTree, fit_m5p
from .stump import DecisionStump, fit_decision_stump
from .table import DecisionTable, fit_decision_table

ALGORITHMS = ("LinearRegression", "DecisionStump", "DecisionTable", "KNN", "M5P")

_ALIASES = {
    "linearregression": "LinearRegression",
    "linear": "LinearRegression",
    "lr": "LinearRegression",
    "decisionstump": "DecisionStump",
    "stump": "DecisionStump",
    "decisiontable": "DecisionTable",
    "table": "DecisionTable",
    "knn": "KNN",
    "ibk": "KNN",
    "m5p": "M5P",
    "m5": "M5P",
}

_FITTERS = {
    "LinearRegression": fit_linear_regression,
    "DecisionStump": fit_decision_stump,
    "DecisionTable": fit_decision_table,
    "KNN": fit_knn,
    "M5P": fit_m5p,
}

_CLASSES = {
    "LinearRegression": LinearRegression,
    "DecisionStump": DecisionStump,
    "DecisionTable": DecisionTable,
    "KNN": KNearestNeighbours,
    "M5P": ModelTree,
}

MODEL_FORMAT = "wsnfault-model"
MODEL_VERSION = 1


class UnknownAlgorithm(ValueError):
    pass


def resolve_algorithm(name: str) -> str:
    tag = _ALIASES.get(name.strip().lower().replace("-", "").replace("_", ""))
    if tag is None:
        raise UnknownAlgorithm(f"unknown algorithm {name!r}; valid: {', '.join(sorted(_ALIASES))}")
    return tag


def fit(algorithm: str, d: Dataset, **options) -> Predictor:
    return _FITTERS[resolve_algorithm(algorithm)](d, **options)


def fit_timed(algorithm: str, d: Dataset, **options) -> tuple[Predictor, FitReport]:
    start = time.perf_counter()
    model = fit(algorithm, d, **options)
    return model, FitReport(time.perf_counter() - start, d.n_rows)


def predict(p: Predictor, features) -> float:
    return p.predict(features)


def model_to_dict(p: Predictor) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "algorithm": p.algorithm,
        "arity": p.arity,
        "params": p.to_params(),
    }


def model_from_dict(d: dict) -> Predictor:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model file (format={d.get('format')!r})")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    cls = _CLASSES[resolve_algorithm(d["algorithm"])]
    return cls.from_params(int(d["arity"]), d["params"])


def save_model(p: Predictor, path) -> None:
    """Write a JSON model file atomically. Floats use repr, so reloads are bit-identical."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(model_to_dict(p), fh)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path) -> Predictor:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


__all__ = [
    "ALGORITHMS",
    "ArityMismatch",
    "Dataset",
    "DecisionStump",
    "DecisionTable",
    "EmptyDataset",
    "FitReport",
    "KNearestNeighbours",
    "KTooLarge",
    "LinearRegression",
    "ModelTree",
    "Predictor",
    "UnknownAlgorithm",
    "fit",
    "fit_decision_stump",
    "fit_decision_table",
    "fit_knn",
    "fit_linear_regression",
    "fit_m5p",
    "fit_timed",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "resolve_algorithm",
    "save_model",
    "stable_mean",
]
