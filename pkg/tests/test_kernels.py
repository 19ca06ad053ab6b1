"""Both kernel backends against bitwise references and each other."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from narrowcast import _pure
from narrowcast.codec import (
    ObjectKind,
    ScanStatus,
    Segment,
    decode_next,
    encode_group,
)

try:
    from narrowcast import _native
except ImportError:
    _native = None

BACKENDS = [_pure] if _native is None else [_pure, _native]


def crc16_bitwise(data: bytes, crc: int = 0xFFFF) -> int:
    """Independent bit-at-a-time CRC-16/CCITT-FALSE."""
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
    return crc


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_crc16_check_value(backend):
    assert backend.crc16_ccitt(b"123456789") == 0x29B1


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_crc16_empty_is_init(backend):
    assert backend.crc16_ccitt(b"") == 0xFFFF


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
@given(data=st.binary(max_size=512))
def test_crc16_matches_bitwise_reference(backend, data):
    assert backend.crc16_ccitt(data) == crc16_bitwise(data)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_crc16_incremental_chaining(backend):
    data = bytes(range(256)) * 3
    split = 100
    partial = backend.crc16_ccitt(data[:split])
    assert backend.crc16_ccitt(data[split:], partial) == backend.crc16_ccitt(data)


def _noisy_stream(seed: int) -> bytes:
    """Random noise with valid groups planted at random positions."""
    rnd = random.Random(seed)
    out = bytearray()
    for _ in range(rnd.randrange(1, 6)):
        out += rnd.randbytes(rnd.randrange(0, 40))
        segment = Segment(
            object_kind=ObjectKind(rnd.randrange(2)),
            transport_id=rnd.randrange(1 << 16),
            segment_number=rnd.randrange(1 << 15),
            is_last=rnd.random() < 0.5,
            payload=rnd.randbytes(rnd.randrange(1, 50)),
        )
        group = bytearray(encode_group(segment))
        if rnd.random() < 0.4:  # damage some of them
            group[rnd.randrange(len(group))] ^= 1 << rnd.randrange(8)
        out += group
    out += rnd.randbytes(rnd.randrange(0, 20))
    return bytes(out)


@pytest.mark.skipif(_native is None, reason="compiled kernel not built")
@pytest.mark.parametrize("seed", range(200))
def test_backends_agree_on_noisy_streams(seed):
    stream = _noisy_stream(seed)
    assert _native.scan_groups(stream, 0) == _pure.scan_groups(stream, 0)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
@pytest.mark.parametrize("seed", range(60))
def test_scan_equals_repeated_decode_next(backend, seed):
    """The batch kernel is decode_next applied to exhaustion."""
    stream = _noisy_stream(seed)
    groups, cursor, corrupt = backend.scan_groups(stream, 0)

    expected_groups = []
    expected_corrupt = 0
    at = 0
    while True:
        step = decode_next(stream, at)
        if step.status is ScanStatus.NEED_MORE_DATA:
            at = step.cursor
            break
        if step.status is ScanStatus.CORRUPT_SKIPPED:
            expected_corrupt += 1
        else:
            seg = step.segment
            seg_word = (0x8000 if seg.is_last else 0) | seg.segment_number
            expected_groups.append(
                (int(seg.object_kind), seg.transport_id, seg_word, seg.payload)
            )
        at = step.cursor

    assert groups == expected_groups
    assert cursor == at
    assert corrupt == expected_corrupt


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_scan_accepts_bytearray_and_memoryview(backend):
    segment = Segment(ObjectKind.BODY, 5, 0, True, b"payload")
    stream = b"xx" + encode_group(segment)
    for view in (bytearray(stream), memoryview(stream)):
        groups, cursor, corrupt = backend.scan_groups(view, 0)
        assert [g[3] for g in groups] == [b"payload"]
        assert corrupt == 0
