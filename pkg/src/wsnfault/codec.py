"""Fixed-size binary frame for mote telemetry.

Every frame is 28 bytes (224 bits), big-endian::

    offset  size  field
    0       2     magic 0xA5 0x5A
    2       1     version (0x01)
    3       1     node_id
    4       4     sequence counter
    8       8     timestamp_ms (epoch milliseconds, stamped by the source)
    16      10    five 16-bit ADC readings: light, temperature, accel_x,
                  accel_y, voltage (each 0..1023)
    26      2     CRC-16/CCITT-FALSE over bytes 0..25

Frames travel back to back over TCP with no extra transport framing.
:class:`StreamScanner` recovers frames from an arbitrary byte stream and
resynchronises after corruption.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

MAGIC = b"\xa5\x5a"
VERSION = 0x01
FRAME_SIZE = 28
ADC_MAX = 1023

_BODY = struct.Struct(">2sBBIQ5H")
assert _BODY.size == FRAME_SIZE - 2


def _make_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
        table.append(crc & 0xFFFF)
    return table


_CRC_TABLE = _make_table()


def crc16(data: bytes, crc: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no xorout)."""
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


class FrameErrorKind(enum.Enum):
    BAD_MAGIC = "BadMagic"
    BAD_VERSION = "BadVersion"
    BAD_CRC = "BadCrc"
    TRUNCATED = "Truncated"
    ADC_OUT_OF_RANGE = "AdcOutOfRange"


class FrameError(ValueError):
    """A frame failed validation. ``offset`` is the stream position, if known."""

    def __init__(self, kind: FrameErrorKind, offset: int = 0, detail: str = ""):
        self.kind = kind
        self.offset = offset
        self.detail = detail
        msg = f"{kind.value} at offset {offset}"
        super().__init__(f"{msg}: {detail}" if detail else msg)

    def __eq__(self, other):
        if not isinstance(other, FrameError):
            return NotImplemented
        return (self.kind, self.offset) == (other.kind, other.offset)

    def __hash__(self):
        return hash((self.kind, self.offset))


@dataclass(frozen=True)
class RawFrame:
    node_id: int
    sequence: int
    timestamp_ms: int
    adc: tuple[int, int, int, int, int]  # light, temperature, accel_x, accel_y, voltage

    @property
    def light(self) -> int:
        return self.adc[0]

    @property
    def temperature(self) -> int:
        return self.adc[1]

    @property
    def accel_x(self) -> int:
        return self.adc[2]

    @property
    def accel_y(self) -> int:
        return self.adc[3]

    @property
    def voltage(self) -> int:
        return self.adc[4]


def encode_frame(frame: RawFrame) -> bytes:
    if len(frame.adc) != 5:
        raise ValueError(f"expected 5 ADC readings, got {len(frame.adc)}")
    for value in frame.adc:
        if not 0 <= value <= ADC_MAX:
            raise FrameError(FrameErrorKind.ADC_OUT_OF_RANGE, detail=f"reading {value}")
    if not 0 <= frame.node_id <= 0xFF:
        raise ValueError(f"node_id {frame.node_id} does not fit in one byte")
    body = _BODY.pack(
        MAGIC, VERSION, frame.node_id, frame.sequence, frame.timestamp_ms, *frame.adc
    )
    return body + crc16(body).to_bytes(2, "big")


def decode_frame(data: bytes, offset: int = 0) -> RawFrame:
    """Validate and unpack one frame, raising :class:`FrameError` on any failure.

    Checks run in wire order: length, magic, version, CRC, then ADC bounds.
    """
    if len(data) != FRAME_SIZE:
        raise FrameError(FrameErrorKind.TRUNCATED, offset, f"{len(data)} bytes")
    if data[:2] != MAGIC:
        raise FrameError(FrameErrorKind.BAD_MAGIC, offset)
    if data[2] != VERSION:
        raise FrameError(FrameErrorKind.BAD_VERSION, offset, f"version {data[2]}")
    if crc16(data[:26]) != int.from_bytes(data[26:28], "big"):
        raise FrameError(FrameErrorKind.BAD_CRC, offset)
    _, _, node_id, seq, ts, *adc = _BODY.unpack(data[:26])
    if any(v > ADC_MAX for v in adc):
        raise FrameError(FrameErrorKind.ADC_OUT_OF_RANGE, offset, f"readings {adc}")
    return RawFrame(node_id, seq, ts, tuple(adc))


class StreamScanner:
    """Incremental frame extractor for a byte stream delivered in arbitrary chunks.

    Single consumer; not thread safe.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self._base = 0  # stream offset of _buf[0]

    @property
    def position(self) -> int:
        return self._base

    def feed(self, chunk: bytes) -> list[RawFrame | FrameError]:
        self._buf += chunk
        out: list[RawFrame | FrameError] = []
        while True:
            idx = self._buf.find(MAGIC)
            if idx < 0:
                # a lone trailing 0xA5 may be the first half of the next magic
                keep = 1 if self._buf[-1:] == MAGIC[:1] else 0
                self._drop(len(self._buf) - keep)
                return out
            self._drop(idx)
            if len(self._buf) < FRAME_SIZE:
                return out
            try:
                out.append(decode_frame(bytes(self._buf[:FRAME_SIZE]), self._base))
            except FrameError as err:
                out.append(err)
                self._drop(1)
            else:
                self._drop(FRAME_SIZE)

    def close(self) -> list[FrameError]:
        """Flush at end of stream; a partial frame left in the buffer is reported."""
        out = []
        if self._buf.startswith(MAGIC):
            out.append(FrameError(FrameErrorKind.TRUNCATED, self._base, f"{len(self._buf)} bytes"))
        self._drop(len(self._buf))
        return out

    def _drop(self, n: int) -> None:
        if n:
            del self._buf[:n]
            self._base += n


def scan_stream(chunks: Iterable[bytes]) -> Iterator[RawFrame | FrameError]:
    scanner = StreamScanner()
    for chunk in chunks:
        yield from scanner.feed(chunk)
    yield from scanner.close()
