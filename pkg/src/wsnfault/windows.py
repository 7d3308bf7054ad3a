"""Per-node short and long sliding windows, backed by CSV files.

The short window holds raw per-tick instances. Every ``avg_group`` appended
instances are averaged into one entry of the long window. Averaging is
count based, so a lost packet stretches a group in wall-clock time rather
than being interpolated.

Files (one set per node, atomically replaced on every persist)::

    node_<id>_short.csv    short window
    node_<id>_long.csv     long window
    node_<id>_pending.csv  instances waiting to complete an averaging group

each with the header ``timestamp_ms,light_pct,temp_c,accel_x_g,accel_y_g,voltage_v``
and values written to 6 decimal places.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .conversion import SENSORS, EngineeringInstance
from .regressors.base import Dataset, stable_mean

CSV_HEADER = ("timestamp_ms", "light_pct", "temp_c", "accel_x_g", "accel_y_g", "voltage_v")
DAY_MS = 86_400_000


class NonMonotonicTimestamp(ValueError):
    pass


class IncompleteWindow(ValueError):
    pass


class EmptyGroup(ValueError):
    pass


class WindowFileError(ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


@dataclass(frozen=True)
class WindowConfig:
    tick_ms: int = 1000
    short_len: int = 3600
    avg_group: int = 60
    long_len: int = 1440

    def __post_init__(self):
        for name in ("tick_ms", "short_len", "avg_group", "long_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")


@dataclass(frozen=True)
class AppendOutcome:
    short_cycle_complete: bool = False
    long_entry_added: bool = False
    long_cycle_complete: bool = False


@dataclass
class NodeStore:
    node_id: int
    config: WindowConfig = field(default_factory=WindowConfig)
    short_buffer: list[EngineeringInstance] = field(default_factory=list)
    long_buffer: list[EngineeringInstance] = field(default_factory=list)
    pending_group: list[EngineeringInstance] = field(default_factory=list)
    last_timestamp_ms: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.last_timestamp_ms is None:
            stamps = [b[-1].timestamp_ms for b in (self.short_buffer, self.long_buffer, self.pending_group) if b]
            self.last_timestamp_ms = max(stamps) if stamps else None

    @property
    def short_full(self) -> bool:
        return len(self.short_buffer) >= self.config.short_len

    @property
    def long_full(self) -> bool:
        return len(self.long_buffer) >= self.config.long_len

    def append(self, inst: EngineeringInstance) -> AppendOutcome:
        return append(self, inst)


def minute_average(group: Sequence[EngineeringInstance]) -> EngineeringInstance:
    """Per-attribute mean of a group, stamped with the group's last timestamp."""
    if not group:
        raise EmptyGroup("cannot average an empty group")
    last = group[-1]
    means = {s: stable_mean(np.array([g.value(s) for g in group])) for s in SENSORS}
    return EngineeringInstance(node_id=last.node_id, timestamp_ms=last.timestamp_ms, **means)


def append(store: NodeStore, inst: EngineeringInstance) -> AppendOutcome:
    cfg = store.config
    if store.last_timestamp_ms is not None and inst.timestamp_ms <= store.last_timestamp_ms:
        raise NonMonotonicTimestamp(
            f"node {store.node_id}: timestamp {inst.timestamp_ms} not after {store.last_timestamp_ms}"
        )
    store.last_timestamp_ms = inst.timestamp_ms

    was_full = store.short_full
    store.short_buffer.append(inst)
    if len(store.short_buffer) > cfg.short_len:
        del store.short_buffer[0]
    short_done = not was_full and store.short_full

    store.pending_group.append(inst)
    added = long_done = False
    if len(store.pending_group) >= cfg.avg_group:
        was_full = store.long_full
        store.long_buffer.append(minute_average(store.pending_group))
        store.pending_group.clear()
        if len(store.long_buffer) > cfg.long_len:
            del store.long_buffer[0]
        added = True
        long_done = not was_full and store.long_full
    return AppendOutcome(short_done, added, long_done)


def seconds_of_day(timestamp_ms: int) -> float:
    return (timestamp_ms % DAY_MS) / 1000.0


def feature_names(target: str) -> tuple[str, ...]:
    if target not in SENSORS:
        raise ValueError(f"unknown sensor {target!r}")
    return ("time_of_day_s",) + tuple(s for s in SENSORS if s != target)


def features_for(inst: EngineeringInstance, target: str) -> list[float]:
    """Model inputs for predicting ``target``: time of day, then the other four sensors."""
    return [seconds_of_day(inst.timestamp_ms)] + [inst.value(s) for s in SENSORS if s != target]


def build_dataset(instances: Sequence[EngineeringInstance], target: str) -> Dataset:
    names = feature_names(target)
    X = np.array([features_for(i, target) for i in instances], dtype=float).reshape(-1, len(names))
    y = np.array([i.value(target) for i in instances], dtype=float)
    return Dataset(X, y, names)


def _buffer(store: NodeStore, which: str) -> tuple[list[EngineeringInstance], int]:
    if which == "short":
        return store.short_buffer, store.config.short_len
    if which == "long":
        return store.long_buffer, store.config.long_len
    raise ValueError(f"window must be 'short' or 'long', not {which!r}")


def snapshot_training_set(store: NodeStore, which: str, target: str) -> Dataset:
    buf, capacity = _buffer(store, which)
    if len(buf) < capacity:
        raise IncompleteWindow(f"node {store.node_id} {which} window has {len(buf)}/{capacity} instances")
    return build_dataset(list(buf), target)


def rollover(store: NodeStore, which: str) -> None:
    buf, capacity = _buffer(store, which)
    if len(buf) < capacity:
        raise IncompleteWindow(f"node {store.node_id} {which} window has {len(buf)}/{capacity} instances")
    buf.clear()


# -- persistence --------------------------------------------------------------


def window_path(directory, node_id: int, which: str) -> Path:
    return Path(directory) / f"node_{node_id}_{which}.csv"


def format_row(inst: EngineeringInstance) -> list[str]:
    return [str(int(inst.timestamp_ms))] + [f"{inst.value(s):.6f}" for s in SENSORS]


def write_instances(path, instances: Iterable[EngineeringInstance]) -> None:
    """Write a window CSV via temp file + rename so readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for inst in instances:
                w.writerow(format_row(inst))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_instances(path, node_id: int) -> list[EngineeringInstance]:
    path = Path(path)
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise WindowFileError(path, 1, f"expected header {','.join(CSV_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise WindowFileError(path, line, f"expected {len(CSV_HEADER)} fields, got {len(row)}")
            try:
                ts = int(row[0])
                vals = [float(v) for v in row[1:]]
            except ValueError as err:
                raise WindowFileError(path, line, str(err)) from None
            out.append(EngineeringInstance(node_id, ts, *vals))
    return out


def persist(store: NodeStore, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for which, buf in (("short", store.short_buffer), ("long", store.long_buffer), ("pending", store.pending_group)):
        write_instances(window_path(directory, store.node_id, which), buf)


def load(directory, node_id: int, config: WindowConfig | None = None) -> NodeStore:
    """Rebuild a node's windows from disk; missing files mean empty buffers."""
    config = config or WindowConfig()
    bufs = {}
    for which in ("short", "long", "pending"):
        path = window_path(directory, node_id, which)
        bufs[which] = read_instances(path, node_id) if path.exists() else []
    store = NodeStore(node_id, config, bufs["short"], bufs["long"], bufs["pending"])
    for which, limit in (("short", config.short_len), ("long", config.long_len), ("pending", config.avg_group - 1)):
        if len(bufs[which]) > limit:
            raise WindowFileError(window_path(directory, node_id, which), 0, f"{len(bufs[which])} rows exceed limit {limit}")
        stamps = [i.timestamp_ms for i in bufs[which]]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise WindowFileError(window_path(directory, node_id, which), 0, "timestamps not strictly increasing")
    return store
