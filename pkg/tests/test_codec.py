import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import crc16_bitwise
from wsnfault.codec import (
    FRAME_SIZE,
    FrameError,
    FrameErrorKind,
    RawFrame,
    StreamScanner,
    crc16,
    decode_frame,
    encode_frame,
    scan_stream,
)

frames = st.builds(
    RawFrame,
    node_id=st.integers(0, 255),
    sequence=st.integers(0, 2**32 - 1),
    timestamp_ms=st.integers(0, 2**64 - 1),
    adc=st.tuples(*[st.integers(0, 1023)] * 5),
)

FIXED = RawFrame(3, 1234, 1_700_006_400_000, (512, 600, 717, 614, 420))


def test_crc_check_value():
    assert crc16(b"123456789") == 0x29B1
    assert crc16_bitwise(b"123456789") == 0x29B1
    assert crc16(b"") == 0xFFFF


@given(st.binary(max_size=64))
def test_crc_matches_bitwise_oracle(data):
    assert crc16(data) == crc16_bitwise(data)


@given(frames)
def test_roundtrip(frame):
    raw = encode_frame(frame)
    assert len(raw) == FRAME_SIZE
    assert decode_frame(raw) == frame


def test_layout_is_big_endian():
    raw = encode_frame(FIXED)
    assert raw[:3] == b"\xa5\x5a\x01"
    assert raw[3] == 3
    assert int.from_bytes(raw[4:8], "big") == 1234
    assert int.from_bytes(raw[8:16], "big") == 1_700_006_400_000
    assert int.from_bytes(raw[16:18], "big") == 512
    assert int.from_bytes(raw[26:28], "big") == crc16(raw[:26])


def test_every_single_bit_flip_is_rejected():
    raw = encode_frame(FIXED)
    for bit in range(FRAME_SIZE * 8):
        bad = bytearray(raw)
        bad[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(FrameError):
            decode_frame(bytes(bad))


def test_error_kinds():
    raw = bytearray(encode_frame(FIXED))
    with pytest.raises(FrameError) as e:
        decode_frame(bytes(raw[:20]))
    assert e.value.kind is FrameErrorKind.TRUNCATED
    bad = bytearray(raw)
    bad[0] = 0
    with pytest.raises(FrameError) as e:
        decode_frame(bytes(bad))
    assert e.value.kind is FrameErrorKind.BAD_MAGIC
    bad = bytearray(raw)
    bad[2] = 2
    with pytest.raises(FrameError) as e:
        decode_frame(bytes(bad))
    assert e.value.kind is FrameErrorKind.BAD_VERSION
    bad = bytearray(raw)
    bad[10] ^= 0xFF
    with pytest.raises(FrameError) as e:
        decode_frame(bytes(bad))
    assert e.value.kind is FrameErrorKind.BAD_CRC


def test_adc_out_of_range():
    with pytest.raises(FrameError) as e:
        encode_frame(RawFrame(1, 0, 0, (1024, 0, 0, 0, 0)))
    assert e.value.kind is FrameErrorKind.ADC_OUT_OF_RANGE


@settings(max_examples=50)
@given(st.lists(frames, min_size=1, max_size=8), st.binary(max_size=40), st.integers(1, 30))
def test_scanner_resyncs_after_garbage(fs, garbage, chunk):
    data = garbage.replace(b"\xa5", b"\x00") + b"".join(encode_frame(f) for f in fs)
    got = [x for x in scan_stream(data[i : i + chunk] for i in range(0, len(data), chunk)) if isinstance(x, RawFrame)]
    assert got == fs


def test_scanner_byte_at_a_time_and_corruption():
    good = [RawFrame(1, i, 1000 + i, (i, 2, 3, 4, 5)) for i in range(5)]
    blobs = [encode_frame(f) for f in good]
    corrupted = bytearray(blobs[2])
    corrupted[20] ^= 0x01
    stream = b"".join(blobs[:2]) + bytes(corrupted) + b"".join(blobs[3:])
    sc = StreamScanner()
    out = []
    for b in stream:
        out.extend(sc.feed(bytes([b])))
    out.extend(sc.close())
    got = [x for x in out if isinstance(x, RawFrame)]
    assert got == [good[0], good[1], good[3], good[4]]
    assert any(isinstance(x, FrameError) and x.kind is FrameErrorKind.BAD_CRC for x in out)


def test_scanner_reports_truncated_tail():
    raw = encode_frame(FIXED)
    sc = StreamScanner()
    assert sc.feed(raw + raw[:10]) == [FIXED]
    errs = sc.close()
    assert len(errs) == 1 and errs[0].kind is FrameErrorKind.TRUNCATED


def test_random_roundtrip_bulk():
    rng = random.Random(1)
    for _ in range(2000):
        f = RawFrame(rng.randrange(256), rng.randrange(2**32), rng.randrange(2**64), tuple(rng.randrange(1024) for _ in range(5)))
        assert decode_frame(encode_frame(f)) == f
