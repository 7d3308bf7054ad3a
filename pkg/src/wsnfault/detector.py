"""Two-stage fault detection over per-node prediction models.

Each incoming instance is pushed through the node's short-window models
(one predictor per sensor). A single sensor outside its deviation threshold
is either reported straight away (no long-window models yet) or re-checked
against the long-window model, and reported only if the deviation persists.
Two or more sensors breaching together are reported as a node-level
anomaly rather than a sensor fault.
"""

from __future__ import annotations

import enum
import json
import logging
import threading
from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

from . import regressors, windows
from .conversion import SENSORS, AccelCalibration, EngineeringInstance, to_instance
from .codec import RawFrame
from .regressors import Predictor
from .windows import NodeStore, WindowConfig, features_for

log = logging.getLogger(__name__)

DEFAULT_ALGORITHM = "DecisionStump"
DEFAULT_COOLDOWN = 60

# short names used in model file names
SENSOR_FILE_TAGS = {"light": "light", "temperature": "temp", "accel_x": "accel_x", "accel_y": "accel_y", "voltage": "voltage"}


@dataclass(frozen=True)
class ThresholdConfig:
    """Allowed deviation per sensor, in percent of the observed value."""

    light: float = 10.0
    temperature: float = 5.0
    accel_x: float = 10.0
    accel_y: float = 10.0
    voltage: float = 5.0
    epsilon: float = 1e-6

    def __post_init__(self):
        for s in SENSORS:
            if not getattr(self, s) > 0:
                raise ValueError(f"threshold for {s} must be > 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")

    def for_sensor(self, sensor: str) -> float:
        return getattr(self, sensor)

    @classmethod
    def uniform(cls, percent: float, epsilon: float = 1e-6) -> "ThresholdConfig":
        return cls(**{s: percent for s in SENSORS}, epsilon=epsilon)


class AlertStage(str, enum.Enum):
    SHORT_ONLY = "ShortOnlyNoLongModels"
    LONG_CONFIRMED = "LongConfirmed"


@dataclass(frozen=True)
class Ok:
    node_id: int
    timestamp_ms: int


@dataclass(frozen=True)
class Alert:
    node_id: int
    sensor: str
    observed: float
    predicted: float
    deviation_pct: float
    stage: AlertStage
    timestamp_ms: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["stage"] = self.stage.value
        return {"type": "alert", **d}

    def describe(self) -> str:
        return (
            f"ALERT node {self.node_id} sensor {self.sensor}: observed {self.observed:.4f}, "
            f"predicted {self.predicted:.4f} ({self.deviation_pct:.2f}% off, {self.stage.value}) "
            f"at {self.timestamp_ms}"
        )


@dataclass(frozen=True)
class NodeAnomalyEvent:
    node_id: int
    sensors: tuple[str, ...]
    timestamp_ms: int

    def to_json(self) -> dict:
        return {"type": "node_anomaly", "node_id": self.node_id, "sensors": list(self.sensors), "timestamp_ms": self.timestamp_ms}

    def describe(self) -> str:
        return f"ANOMALY node {self.node_id}: {', '.join(self.sensors)} breached together at {self.timestamp_ms}"


Verdict = Ok | Alert | NodeAnomalyEvent


@dataclass(frozen=True)
class ModelSet:
    node_id: int
    window: str
    algorithm: str
    built_at_ms: int
    predictors: Mapping[str, Predictor]

    def __post_init__(self):
        object.__setattr__(self, "predictors", MappingProxyType(dict(self.predictors)))

    def predict(self, inst: EngineeringInstance, sensor: str) -> float:
        return self.predictors[sensor].predict(features_for(inst, sensor))


def deviation_percent(predicted: float, actual: float, epsilon: float = 1e-6) -> float:
    return 100.0 * abs(predicted - actual) / max(abs(actual), epsilon)


def evaluate_instance(
    inst: EngineeringInstance,
    short: ModelSet,
    long: ModelSet | None,
    cfg: ThresholdConfig = ThresholdConfig(),
) -> Verdict:
    breaches = []
    for sensor in short.predictors:
        actual = inst.value(sensor)
        predicted = short.predict(inst, sensor)
        dev = deviation_percent(predicted, actual, cfg.epsilon)
        if dev > cfg.for_sensor(sensor):
            breaches.append((sensor, predicted, dev))
    if not breaches:
        return Ok(inst.node_id, inst.timestamp_ms)
    if len(breaches) > 1:
        return NodeAnomalyEvent(inst.node_id, tuple(b[0] for b in breaches), inst.timestamp_ms)

    sensor, predicted, dev = breaches[0]
    actual = inst.value(sensor)
    if long is None:
        return Alert(inst.node_id, sensor, actual, predicted, dev, AlertStage.SHORT_ONLY, inst.timestamp_ms)
    long_pred = long.predict(inst, sensor)
    long_dev = deviation_percent(long_pred, actual, cfg.epsilon)
    if long_dev > cfg.for_sensor(sensor):
        return Alert(inst.node_id, sensor, actual, long_pred, long_dev, AlertStage.LONG_CONFIRMED, inst.timestamp_ms)
    return Ok(inst.node_id, inst.timestamp_ms)


def fit_model_set(
    node_id: int,
    window: str,
    instances: Sequence[EngineeringInstance],
    algorithm: str = DEFAULT_ALGORITHM,
    sensors: Iterable[str] = SENSORS,
    options: Mapping | None = None,
) -> ModelSet:
    tag = regressors.resolve_algorithm(algorithm)
    predictors = {s: regressors.fit(tag, windows.build_dataset(instances, s), **(options or {})) for s in sensors}
    built_at = instances[-1].timestamp_ms if instances else 0
    return ModelSet(node_id, window, tag, built_at, predictors)


def rebuild_models(
    store: NodeStore,
    window: str,
    algorithm: str = DEFAULT_ALGORITHM,
    sensors: Iterable[str] = SENSORS,
    options: Mapping | None = None,
) -> ModelSet:
    sensors = tuple(sensors)
    # raises IncompleteWindow for a partial buffer
    for s in sensors:
        windows.snapshot_training_set(store, window, s)
    buf = list(store.short_buffer if window == "short" else store.long_buffer)
    return fit_model_set(store.node_id, window, buf, algorithm, sensors, options)


# -- node-level status --------------------------------------------------------


@dataclass(frozen=True)
class NodeHealth:
    status: str  # "Healthy" | "SensorFault" | "NodeSuspect"
    sensor: str | None = None


HEALTHY = NodeHealth("Healthy")


def node_health(
    recent: Sequence[Alert | NodeAnomalyEvent],
    horizon_ms: int,
    min_alerts: int = 3,
    now_ms: int | None = None,
) -> NodeHealth:
    """Collapse a node's recent alert history into one status.

    Only events within ``horizon_ms`` of ``now_ms`` (default: the newest
    event) count. Any node anomaly, or alerts naming two or more sensors,
    make the node suspect; ``min_alerts`` alerts on one sensor mark that
    sensor faulty; anything less is healthy.
    """
    if not recent:
        return HEALTHY
    now = max(e.timestamp_ms for e in recent) if now_ms is None else now_ms
    window = [e for e in recent if now - horizon_ms <= e.timestamp_ms <= now]
    if not window:
        return HEALTHY
    if any(isinstance(e, NodeAnomalyEvent) for e in window):
        return NodeHealth("NodeSuspect")
    sensors = {e.sensor for e in window}
    if len(sensors) >= 2:
        return NodeHealth("NodeSuspect")
    if len(window) >= min_alerts:
        return NodeHealth("SensorFault", sensors.pop())
    return HEALTHY


# -- streaming pipeline -------------------------------------------------------


def model_path(directory, node_id: int, sensor: str, window: str) -> Path:
    return Path(directory) / f"node_{node_id}_{SENSOR_FILE_TAGS[sensor]}_{window}.model"


class AlertLog:
    """Line-delimited JSON log of alerts and node anomalies."""

    def __init__(self, path, echo: bool = True, mode: str = "a"):
        self.path = Path(path) if path else None
        self.echo = echo
        self._fh = open(self.path, mode) if self.path else None
        self._lock = threading.Lock()

    def __call__(self, event: Alert | NodeAnomalyEvent) -> None:
        line = json.dumps(event.to_json(), sort_keys=True)
        with self._lock:
            if self._fh:
                self._fh.write(line + "\n")
                self._fh.flush()
            if self.echo:
                print(event.describe(), flush=True)

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None


@dataclass
class _NodeState:
    store: NodeStore
    evaluations: int = 0
    last_alert: dict = field(default_factory=dict)  # sensor -> evaluation index


class FaultMonitor:
    """Windows, model rebuilds and evaluation for every node in a stream.

    With ``executor=None`` rebuilds run inline, which makes the verdict
    sequence a pure function of the input. With an executor, fits run in
    the background against an immutable snapshot and the finished ModelSet
    replaces the old one in a single assignment; evaluation never waits.
    """

    def __init__(
        self,
        window_config: WindowConfig = WindowConfig(),
        thresholds: ThresholdConfig = ThresholdConfig(),
        algorithm: str = DEFAULT_ALGORITHM,
        *,
        data_dir=None,
        executor: Executor | None = None,
        cooldown: int = DEFAULT_COOLDOWN,
        calibration: AccelCalibration = AccelCalibration(),
        algorithm_options: Mapping | None = None,
        on_event: Callable[[Alert | NodeAnomalyEvent], None] | None = None,
        use_long_models: bool = True,
    ):
        self.window_config = window_config
        self.thresholds = thresholds
        self.algorithm = regressors.resolve_algorithm(algorithm)
        self.algorithm_options = dict(algorithm_options or {})
        self.data_dir = Path(data_dir) if data_dir else None
        self.executor = executor
        self.cooldown = cooldown
        self.calibration = calibration
        self.on_event = on_event
        self.use_long_models = use_long_models
        self.events: list[Alert | NodeAnomalyEvent] = []
        self._nodes: dict[int, _NodeState] = {}
        self._models: dict[tuple[int, str], ModelSet] = {}
        self._lock = threading.Lock()
        self._pending = []

    # models ------------------------------------------------------------

    def models(self, node_id: int) -> tuple[ModelSet | None, ModelSet | None]:
        with self._lock:
            short = self._models.get((node_id, "short"))
            long = self._models.get((node_id, "long")) if self.use_long_models else None
        return short, long

    def install(self, models: ModelSet) -> None:
        with self._lock:
            self._models[(models.node_id, models.window)] = models
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            for sensor, p in models.predictors.items():
                regressors.save_model(p, model_path(self.data_dir, models.node_id, sensor, models.window))

    def drop_models(self, window: str) -> None:
        with self._lock:
            for key in [k for k in self._models if k[1] == window]:
                del self._models[key]

    def _schedule_rebuild(self, node_id: int, window: str, instances: list) -> None:
        def job():
            ms = fit_model_set(node_id, window, instances, self.algorithm, SENSORS, self.algorithm_options)
            self.install(ms)
            log.info("rebuilt %s models for node %d from %d instances", window, node_id, len(instances))

        if self.executor is None:
            job()
        else:
            self._pending.append(self.executor.submit(job))

    # ingestion ---------------------------------------------------------

    def node(self, node_id: int) -> _NodeState:
        state = self._nodes.get(node_id)
        if state is None:
            store = NodeStore(node_id, self.window_config)
            if self.data_dir and windows.window_path(self.data_dir, node_id, "short").exists():
                store = windows.load(self.data_dir, node_id, self.window_config)
                self._load_models(node_id)
            state = self._nodes[node_id] = _NodeState(store)
        return state

    def _load_models(self, node_id: int) -> None:
        for window in ("short", "long"):
            paths = {s: model_path(self.data_dir, node_id, s, window) for s in SENSORS}
            if all(p.exists() for p in paths.values()):
                preds = {s: regressors.load_model(p) for s, p in paths.items()}
                algo = next(iter(preds.values())).algorithm
                with self._lock:
                    self._models[(node_id, window)] = ModelSet(node_id, window, algo, 0, preds)

    def ingest_frame(self, frame: RawFrame) -> Verdict | None:
        return self.ingest(to_instance(frame, self.calibration))

    def ingest(self, inst: EngineeringInstance) -> Verdict | None:
        """Evaluate (once short models exist), then store the instance.

        Returns the verdict, or None while the node has no short models.
        Alerts inside the cooldown are returned as Ok and not emitted.
        """
        state = self.node(inst.node_id)
        store = state.store
        if store.last_timestamp_ms is not None and inst.timestamp_ms <= store.last_timestamp_ms:
            log.warning("node %d: dropping out-of-order instance at %d", inst.node_id, inst.timestamp_ms)
            return None

        verdict = None
        short, long = self.models(inst.node_id)
        if short is not None:
            verdict = evaluate_instance(inst, short, long, self.thresholds)
            state.evaluations += 1
            if isinstance(verdict, Alert):
                last = state.last_alert.get(verdict.sensor)
                if last is not None and state.evaluations - last < self.cooldown:
                    verdict = Ok(inst.node_id, inst.timestamp_ms)
                else:
                    state.last_alert[verdict.sensor] = state.evaluations
            if isinstance(verdict, (Alert, NodeAnomalyEvent)):
                self.events.append(verdict)
                if self.on_event:
                    self.on_event(verdict)

        outcome = windows.append(store, inst)
        rolled = False
        if outcome.short_cycle_complete:
            self._schedule_rebuild(inst.node_id, "short", list(store.short_buffer))
            windows.rollover(store, "short")
            rolled = True
        if outcome.long_cycle_complete:
            self._schedule_rebuild(inst.node_id, "long", list(store.long_buffer))
            windows.rollover(store, "long")
            rolled = True
        if rolled and self.data_dir:
            windows.persist(store, self.data_dir)
        return verdict

    def wait(self) -> None:
        """Block until every scheduled background rebuild has published."""
        while self._pending:
            self._pending.pop(0).result()

    def close(self) -> None:
        self.wait()
        if self.data_dir:
            for state in self._nodes.values():
                windows.persist(state.store, self.data_dir)

    @property
    def alerts(self) -> list[Alert]:
        return [e for e in self.events if isinstance(e, Alert)]
