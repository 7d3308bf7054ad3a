"""Synthetic base station: diurnal mote traces, scripted faults, TCP broadcast.

Readings are generated in raw ADC counts so they pass through the same
codec and conversion path as real telemetry. Noise for (seed, node, tick) is
drawn from its own generator, so a trace does not depend on which other
nodes exist or which faults are active.

Fault script format, one event per line (``#`` starts a comment)::

    <start_tick> <node_id> <sensor|-> stuck <adc>
    <start_tick> <node_id> <sensor|-> drift <counts_per_tick>
    <start_tick> <node_id> -          dropout <ticks>
    <start_tick> <node_id> -          death
"""

from __future__ import annotations

import logging
import math
import queue
import socket
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .codec import ADC_MAX, RawFrame, encode_frame
from .conversion import SENSORS

log = logging.getLogger(__name__)

HELLO = b"HELLO v1\n"
OK = b"OK\n"
# 2023-11-15T00:00:00Z; midnight aligned so time of day starts at 0
DEFAULT_EPOCH_MS = 1_700_006_400_000
DAY_MS = 86_400_000


@dataclass(frozen=True)
class NodeProfile:
    node_id: int
    baseline: dict = field(
        default_factory=lambda: {"light": 600.0, "temperature": 512.0, "accel_x": 717.0, "accel_y": 614.0, "voltage": 420.0}
    )
    amplitude: dict = field(
        default_factory=lambda: {"light": 0.0, "temperature": 0.0, "accel_x": 0.0, "accel_y": 0.0, "voltage": 0.0}
    )
    noise_sd: dict = field(
        default_factory=lambda: {"light": 2.0, "temperature": 1.0, "accel_x": 1.0, "accel_y": 1.0, "voltage": 0.5}
    )
    # ADC counts per tick; the voltage ADC rises as the battery sags
    decay: float = 0.0

    def __post_init__(self):
        for s in SENSORS:
            if self.noise_sd.get(s, 0.0) < 0:
                raise ValueError(f"noise sd for {s} must be >= 0")


def default_profiles(n: int, *, diurnal: bool = False, first_id: int = 1) -> list[NodeProfile]:
    """``n`` slightly different healthy nodes. ``diurnal`` adds day/night swings to light and temperature."""
    out = []
    for i in range(n):
        base = {
            "light": 600.0 + 15 * i,
            "temperature": 512.0 + 6 * i,
            "accel_x": 717.0 - 3 * i,
            "accel_y": 614.0 + 2 * i,
            "voltage": 420.0 + i,
        }
        amp = {s: 0.0 for s in SENSORS}
        if diurnal:
            amp["light"] = 250.0
            amp["temperature"] = 60.0
        out.append(NodeProfile(first_id + i, base, amp))
    return out


@dataclass
class SimClock:
    tick_ms: int = 1000
    seconds_per_day: float = 86400.0
    epoch_ms: int = DEFAULT_EPOCH_MS
    tick: int = 0

    def __post_init__(self):
        if self.tick_ms < 1 or self.seconds_per_day <= 0:
            raise ValueError("tick_ms and seconds_per_day must be positive")

    @property
    def sim_ms_per_tick(self) -> float:
        # one simulated day passes in seconds_per_day wall seconds
        return self.tick_ms * 86400.0 / self.seconds_per_day

    def timestamp_ms(self, tick: int | None = None) -> int:
        t = self.tick if tick is None else tick
        return self.epoch_ms + int(round(t * self.sim_ms_per_tick))

    def day_fraction(self, tick: int | None = None) -> float:
        return (self.timestamp_ms(tick) % DAY_MS) / DAY_MS

    def advance(self) -> int:
        self.tick += 1
        return self.tick


def _clamp(v: float) -> int:
    return int(min(max(round(v), 0), ADC_MAX))


def generate_reading(profile: NodeProfile, clock: SimClock, seed: int, tick: int | None = None) -> list[int]:
    t = clock.tick if tick is None else tick
    rng = np.random.default_rng([seed, profile.node_id, t])
    noise = rng.standard_normal(len(SENSORS))
    phase = math.sin(2 * math.pi * clock.day_fraction(t) - math.pi / 2)
    out = []
    for k, s in enumerate(SENSORS):
        v = profile.baseline[s] + profile.noise_sd.get(s, 0.0) * noise[k]
        if s in ("light", "temperature"):
            v += profile.amplitude.get(s, 0.0) * phase
        elif s == "voltage":
            v += profile.decay * t
        out.append(_clamp(v))
    return out


# -- faults -------------------------------------------------------------------

KINDS = ("stuck", "drift", "dropout", "death")


@dataclass(frozen=True)
class FaultEvent:
    start_tick: int
    node_id: int
    sensor: str | None
    kind: str
    value: float = 0.0  # stuck ADC, drift rate, or dropout duration

    def __post_init__(self):
        if self.start_tick < 0:
            raise ValueError("start_tick must be non-negative")
        if self.kind not in KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if self.kind in ("stuck", "drift") and self.sensor not in SENSORS:
            raise ValueError(f"{self.kind} needs a sensor, got {self.sensor!r}")
        if self.kind == "dropout" and self.value < 1:
            raise ValueError("dropout duration must be >= 1 tick")

    @property
    def end_tick(self) -> float:
        return self.start_tick + self.value if self.kind == "dropout" else math.inf

    def active(self, tick: int) -> bool:
        return self.start_tick <= tick < self.end_tick


class FaultScript:
    def __init__(self, events: Sequence[FaultEvent] = ()):
        self.events = sorted(events, key=lambda e: (e.start_tick, e.node_id))
        slots: dict = {}
        for e in self.events:
            key = (e.node_id, e.sensor if e.kind in ("stuck", "drift") else "*")
            for other in slots.get(key, []):
                if e.start_tick < other.end_tick and other.start_tick < e.end_tick:
                    raise ValueError(f"overlapping faults on node {e.node_id} {key[1]}: {other} / {e}")
            slots.setdefault(key, []).append(e)

    def __len__(self):
        return len(self.events)

    @classmethod
    def parse(cls, text: str) -> "FaultScript":
        events = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                start, node, sensor, kind = int(parts[0]), int(parts[1]), parts[2], parts[3].lower()
                sensor = None if sensor == "-" else sensor
                value = float(parts[4]) if len(parts) > 4 else 0.0
                if kind in ("stuck", "drift", "dropout") and len(parts) < 5:
                    raise ValueError(f"{kind} needs an argument")
                events.append(FaultEvent(start, node, sensor, kind, value))
            except (IndexError, ValueError) as err:
                raise ValueError(f"fault script line {lineno}: {err}") from None
        return cls(events)

    @classmethod
    def load(cls, path) -> "FaultScript":
        return cls.parse(Path(path).read_text())


def apply_fault(readings: list[int], script: FaultScript, tick: int, node_id: int) -> list[int] | None:
    """Apply active faults for this node; ``None`` means no frame is sent this tick."""
    out = list(readings)
    for e in script.events:
        if e.node_id != node_id or not e.active(tick):
            continue
        if e.kind in ("dropout", "death"):
            return None
        k = SENSORS.index(e.sensor)
        if e.kind == "stuck":
            out[k] = _clamp(e.value)
        else:
            out[k] = _clamp(out[k] + e.value * (tick - e.start_tick))
    return out


class BaseStation:
    """Deterministic frame source: (seed, profiles, script) fix the byte stream."""

    def __init__(self, profiles: Sequence[NodeProfile], script: FaultScript | None = None, clock: SimClock | None = None, seed: int = 0):
        self.profiles = list(profiles)
        self.script = script or FaultScript()
        self.clock = clock or SimClock()
        self.seed = seed

    def frames_at(self, tick: int) -> list[RawFrame]:
        ts = self.clock.timestamp_ms(tick)
        out = []
        for prof in self.profiles:
            adc = apply_fault(generate_reading(prof, self.clock, self.seed, tick), self.script, tick, prof.node_id)
            if adc is not None:
                out.append(RawFrame(prof.node_id, tick, ts, tuple(adc)))
        return out

    def frames(self, ticks: int, start: int = 0) -> Iterator[RawFrame]:
        for t in range(start, start + ticks):
            yield from self.frames_at(t)

    def stream(self, ticks: int, start: int = 0) -> bytes:
        return b"".join(encode_frame(f) for f in self.frames(ticks, start))


# -- TCP broadcast -------------------------------------------------------------


class _Client:
    def __init__(self, sock: socket.socket, addr, depth: int):
        self.sock = sock
        self.addr = addr
        self.queue: queue.Queue = queue.Queue(maxsize=depth)
        self.alive = True
        self.thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        try:
            while True:
                item = self.queue.get()
                if item is None:
                    break
                self.sock.sendall(item)
        except OSError as err:
            log.info("client %s dropped: %s", self.addr, err)
        finally:
            self.alive = False
            try:
                self.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.sock.close()

    def offer(self, data: bytes) -> bool:
        try:
            self.queue.put_nowait(data)
            return True
        except queue.Full:
            return False

    def finish(self):
        try:
            self.queue.put(None, timeout=1.0)
        except queue.Full:
            self.alive = False
            self.sock.close()


class SimulatorServer:
    """TCP listener that broadcasts one frame per live node per tick.

    Clients must send ``HELLO v1`` and receive ``OK`` before frames flow. A
    client whose queue fills up is disconnected so it cannot stall the tick
    loop.
    """

    def __init__(self, station: BaseStation, host: str = "127.0.0.1", port: int = 0, queue_depth: int = 4096):
        self.station = station
        self.queue_depth = queue_depth
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(0.2)
        self.address = self._listener.getsockname()[:2]
        self._clients: list[_Client] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()
        self.ticks_sent = 0

    @property
    def port(self) -> int:
        return self.address[1]

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            threading.Thread(target=self._handshake, args=(sock, addr), daemon=True).start()

    def _handshake(self, sock: socket.socket, addr):
        sock.settimeout(5.0)
        try:
            line = b""
            while not line.endswith(b"\n") and len(line) < 64:
                chunk = sock.recv(1)
                if not chunk:
                    break
                line += chunk
            if line.strip() != HELLO.strip():
                sock.sendall(b"ERR\n")
                sock.close()
                return
            sock.sendall(OK)
            sock.settimeout(None)
        except OSError:
            sock.close()
            return
        client = _Client(sock, addr, self.queue_depth)
        client.thread.start()
        with self._lock:
            self._clients.append(client)
        log.info("client %s connected", addr)

    @property
    def client_count(self) -> int:
        with self._lock:
            return sum(c.alive for c in self._clients)

    def wait_for_clients(self, n: int, timeout: float = 10.0) -> bool:
        deadline = time.monotonic() + timeout
        while self.client_count < n:
            if time.monotonic() > deadline:
                return False
            time.sleep(0.01)
        return True

    def broadcast(self, data: bytes) -> None:
        with self._lock:
            for c in self._clients:
                if c.alive and not c.offer(data):
                    log.warning("client %s too slow; disconnecting", c.addr)
                    c.alive = False
                    c.sock.close()
            self._clients = [c for c in self._clients if c.alive]

    def run(self, ticks: int | None = None, realtime: bool = True, on_tick=None) -> int:
        """Tick loop. ``ticks=None`` runs until :meth:`stop`. Returns ticks emitted."""
        clock = self.station.clock
        period = clock.tick_ms / 1000.0
        next_at = time.monotonic()
        t = clock.tick
        while not self._stop.is_set() and (ticks is None or self.ticks_sent < ticks):
            frames = self.station.frames_at(t)
            self.broadcast(b"".join(encode_frame(f) for f in frames))
            if on_tick:
                on_tick(t, frames)
            self.ticks_sent += 1
            t = clock.advance()
            if realtime:
                next_at += period
                delay = next_at - time.monotonic()
                if delay > 0:
                    self._stop.wait(delay)
        return self.ticks_sent

    def stop(self) -> None:
        self._stop.set()

    def close(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            clients, self._clients = self._clients, []
        for c in clients:
            c.finish()
        for c in clients:
            c.thread.join(timeout=2.0)
        self._accept_thread.join(timeout=2.0)


def serve(profiles, script, clock, endpoint: tuple[str, int], seed: int = 0, ticks: int | None = None, wait_clients: int = 0) -> int:
    server = SimulatorServer(BaseStation(profiles, script, clock, seed), *endpoint)
    try:
        if wait_clients:
            server.wait_for_clients(wait_clients, timeout=60.0)
        return server.run(ticks)
    finally:
        server.close()
