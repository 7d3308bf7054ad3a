"""TCP ingestion loop: handshake, frame scanning, hand-off to a FaultMonitor."""

from __future__ import annotations

import logging
import socket
import threading
import time

from .codec import FrameError, StreamScanner
from .conversion import Unconvertible
from .detector import FaultMonitor
from .simulator import HELLO, OK

log = logging.getLogger(__name__)


class HandshakeError(ConnectionError):
    pass


def open_stream(host: str, port: int, timeout: float = 5.0) -> socket.socket:
    sock = socket.create_connection((host, port), timeout=timeout)
    try:
        sock.sendall(HELLO)
        reply = b""
        while not reply.endswith(b"\n") and len(reply) < 64:
            chunk = sock.recv(1)
            if not chunk:
                break
            reply += chunk
        if reply != OK:
            raise HandshakeError(f"base station refused access: {reply!r}")
    except BaseException:
        sock.close()
        raise
    sock.settimeout(None)
    return sock


class StreamStats:
    def __init__(self):
        self.frames = 0
        self.frame_errors = 0
        self.unconvertible = 0


def run_monitor(
    monitor: FaultMonitor,
    host: str,
    port: int,
    *,
    retries: int = 3,
    retry_delay: float = 0.5,
    max_frames: int | None = None,
    stop: threading.Event | None = None,
    recorder=None,
) -> StreamStats:
    """Ingest frames until the stream ends for good, ``max_frames`` arrive, or ``stop`` is set.

    A dropped connection is retried ``retries`` times. Connection failures
    before any frame was received propagate to the caller.
    """
    stats = StreamStats()
    stop = stop or threading.Event()
    attempts = 0
    while not stop.is_set():
        try:
            sock = open_stream(host, port)
        except (OSError, HandshakeError):
            if stats.frames == 0 and attempts >= retries:
                raise
            attempts += 1
            if attempts > retries:
                break
            time.sleep(retry_delay)
            continue
        attempts = 0
        scanner = StreamScanner()
        sock.settimeout(0.2)
        try:
            while not stop.is_set():
                try:
                    chunk = sock.recv(65536)
                except socket.timeout:
                    continue
                if not chunk:
                    break
                for item in scanner.feed(chunk):
                    if isinstance(item, FrameError):
                        stats.frame_errors += 1
                        log.debug("frame error: %s", item)
                        continue
                    stats.frames += 1
                    try:
                        monitor.ingest_frame(item)
                    except Unconvertible as err:
                        stats.unconvertible += 1
                        log.warning("node %d: %s", item.node_id, err)
                    if recorder is not None:
                        recorder(item)
                    if max_frames is not None and stats.frames >= max_frames:
                        stop.set()
                        break
        except OSError as err:
            log.warning("stream error: %s", err)
        finally:
            sock.close()
        if stop.is_set():
            break
        attempts += 1
        if attempts > retries:
            log.info("stream closed")
            break
        log.warning("stream closed; reconnecting (%d/%d)", attempts, retries)
        time.sleep(retry_delay)
    return stats
