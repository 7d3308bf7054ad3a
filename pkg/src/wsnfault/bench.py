"""Per-algorithm timing, energy and error figures, plus the absolute-error histogram.

Timing and energy depend on the host; only the error columns are
comparable across machines.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import regressors
from .detector import deviation_percent
from .regressors import Dataset, EmptyDataset

BUCKETS = tuple(f"{lo}-{lo + 10}" for lo in range(0, 100, 10)) + (">100",)
REPORT_HEADER = (
    "algorithm",
    "instance_prediction_time_s",
    "energy_per_instance_j",
    "total_error_rate_pct",
    "model_generation_time_s",
)


@dataclass(frozen=True)
class EnergyModel:
    cpu_power_watts: float = 0.5
    radio_power_watts: float = 0.330 * 3.7  # 330 mA at 3.7 V
    radio_rate_bps: float = 1_000_000.0
    message_bits: int = 224

    def __post_init__(self):
        for name in ("cpu_power_watts", "radio_power_watts", "radio_rate_bps", "message_bits"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def energy_per_instance(predict_time_s: float, em: EnergyModel = EnergyModel()) -> float:
    if predict_time_s < 0:
        raise ValueError("predict_time_s must be >= 0")
    return em.cpu_power_watts * predict_time_s + em.radio_power_watts * (em.message_bits / em.radio_rate_bps)


def error_histogram(deviations: Iterable[float]) -> dict[str, int]:
    """Count deviations into 10%-wide buckets, lower bound inclusive; 100 and above go to ``>100``."""
    hist = dict.fromkeys(BUCKETS, 0)
    for d in deviations:
        idx = min(int(d // 10), len(BUCKETS) - 1) if d >= 0 else 0
        hist[BUCKETS[idx]] += 1
    return hist


@dataclass
class AlgorithmResult:
    algorithm: str
    fit_time_s: float
    predict_time_s: float
    energy_j: float
    total_error_rate_pct: float
    deviations: list[float] = field(repr=False, default_factory=list)


@dataclass
class BenchReport:
    results: list[AlgorithmResult]
    histograms: dict[str, dict[str, int]]
    test_size: int

    def row(self, algorithm: str) -> AlgorithmResult:
        return next(r for r in self.results if r.algorithm == algorithm)


def split_chronological(d: Dataset, holdout: float) -> tuple[Dataset, Dataset]:
    if not 0 < holdout < 1:
        raise ValueError("holdout must be in (0, 1)")
    n_train = int(round(d.n_rows * (1 - holdout)))
    if n_train < 1 or n_train >= d.n_rows:
        raise EmptyDataset(f"{d.n_rows} rows cannot be split {1 - holdout:.2f}/{holdout:.2f}")
    return d.head(n_train), d.tail(n_train)


def _evaluate(tag: str, train: Dataset, test: Dataset, epsilon: float, options: dict):
    model, report = regressors.fit_timed(tag, train, **options.get(tag, {}))
    devs = []
    elapsed = 0.0
    for x, actual in zip(test.X, test.y):
        start = time.perf_counter()
        pred = model.predict(x)
        elapsed += time.perf_counter() - start
        devs.append(deviation_percent(pred, float(actual), epsilon))
    return report.fit_duration, elapsed, devs


def run_bench(
    datasets: Dataset | Sequence[Dataset],
    algorithms: Sequence[str] = regressors.ALGORITHMS,
    holdout: float = 0.3,
    em: EnergyModel = EnergyModel(),
    epsilon: float = 1e-6,
    options: dict | None = None,
) -> BenchReport:
    """Fit on the earliest rows, predict the rest, pool the errors.

    Passing several datasets (one per target sensor) pools their test
    predictions; timing figures are then averaged over all of them.
    """
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    if not datasets:
        raise EmptyDataset("no datasets to benchmark")
    tags = [regressors.resolve_algorithm(a) for a in algorithms]
    splits = [split_chronological(d, holdout) for d in datasets]
    options = options or {}
    results, hists = [], {}
    for tag in tags:
        fit_total, pred_total, devs = 0.0, 0.0, []
        for train, test in splits:
            f, p, dv = _evaluate(tag, train, test, epsilon, options)
            fit_total += f
            pred_total += p
            devs.extend(dv)
        per_instance = pred_total / len(devs)
        results.append(
            AlgorithmResult(
                tag,
                fit_total / len(splits),
                per_instance,
                energy_per_instance(per_instance, em),
                float(np.mean(devs)),
                devs,
            )
        )
        hists[tag] = error_histogram(devs)
    return BenchReport(results, hists, sum(t.n_rows for _, t in splits))


def write_report(report: BenchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for r in report.results:
            w.writerow([r.algorithm, f"{r.predict_time_s:.9g}", f"{r.energy_j:.9g}", f"{r.total_error_rate_pct:.6f}", f"{r.fit_time_s:.9g}"])


def write_histogram(report: BenchReport, path) -> None:
    tags = [r.algorithm for r in report.results]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bucket", *tags])
        for b in BUCKETS:
            w.writerow([b, *(report.histograms[t][b] for t in tags)])


def histogram_path_for(report_path) -> Path:
    p = Path(report_path)
    return p.with_name(p.stem + "_histogram" + p.suffix)
