"""Wire units: signaling object, payload segmentation, CRC-framed data groups.

Data group layout (big-endian):

    sync 0x4D47 | object_kind u8 | transport_id u16 | seg_word u16 |
    payload_len u16 | payload (1..4096 bytes) | crc16 u16

seg_word bit 15 flags the last segment; bits 14..0 are the segment number.
crc16 is CRC-16/CCITT-FALSE over object_kind through the end of the payload
(the sync word is excluded so that resynchronization stays cheap). Encoded
length is always 11 + payload_len.

Signaling object layout:

    "GAPH" | version u8 = 1 | app_id u64 | content_type u8 | autostart u8 |
    codec u8 | uncompressed_size u32 | compressed_size u32 | body_crc32 u32 |
    entry_point_len u16 | entry_point | file_count u16

Packed header+body files ("GPKG") are the signaling bytes followed by the
compressed body, behind a 4-byte magic.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import NamedTuple, Optional

from narrowcast import kernels
from narrowcast.bundle import Codec, ContentType
from narrowcast.errors import (
    BadMagicError,
    EntryPointTooLongError,
    IncompleteObjectError,
    InconsistentSegmentsError,
    MalformedHeaderError,
    PayloadEmptyError,
    TooManySegmentsError,
    TrailingGarbageError,
    TruncatedError,
    UnsupportedVersionError,
)

SYNC = b"MG"  # 0x4D47
GROUP_OVERHEAD = 11
MAX_SEGMENT_PAYLOAD = 4096
MAX_SEGMENT_NUMBER = 2**15 - 1

SIGNALING_MAGIC = b"GAPH"
SIGNALING_VERSION = 1
MAX_ENTRY_POINT_BYTES = 2**16 - 1
_SIGNALING_FIXED = struct.Struct(">QBBBIII")

PACKAGE_MAGIC = b"GPKG"

DEFAULT_SEGMENT_SIZE = 1024


class ObjectKind(IntEnum):
    HEADER = 0x00
    BODY = 0x01


def body_checksum(data: bytes) -> int:
    """CRC-32/ISO-HDLC over the compressed body bytes."""
    return zlib.crc32(data) & 0xFFFFFFFF


def crc16_ccitt(data, crc: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE used by group framing (delegates to the kernel)."""
    return kernels.crc16_ccitt(data, crc)


@dataclass(frozen=True)
class SignalingHeader:
    app_id: int
    content_type: ContentType
    autostart: bool
    codec: Codec
    uncompressed_size: int
    compressed_size: int
    body_crc32: int
    entry_point: str
    file_count: int


@dataclass(frozen=True)
class Segment:
    object_kind: ObjectKind
    transport_id: int
    segment_number: int
    is_last: bool
    payload: bytes

    def __post_init__(self) -> None:
        if not 0 <= self.transport_id < 2**16:
            raise ValueError("transport_id must fit an unsigned 16-bit field")
        if not 0 <= self.segment_number <= MAX_SEGMENT_NUMBER:
            raise ValueError("segment_number must fit a 15-bit field")
        if not 1 <= len(self.payload) <= MAX_SEGMENT_PAYLOAD:
            raise ValueError("segment payload must be 1..4096 bytes")


def encode_signaling(header: SignalingHeader) -> bytes:
    entry = header.entry_point.encode("utf-8")
    if len(entry) > MAX_ENTRY_POINT_BYTES:
        raise EntryPointTooLongError(f"entry point is {len(entry)} bytes, max 65535")
    if not 0 <= header.app_id < 2**64:
        raise ValueError("app_id out of range")
    for label, value in (
        ("uncompressed_size", header.uncompressed_size),
        ("compressed_size", header.compressed_size),
        ("body_crc32", header.body_crc32),
    ):
        if not 0 <= value < 2**32:
            raise ValueError(f"{label} out of range")
    if not 0 <= header.file_count < 2**16:
        raise ValueError("file_count out of range")
    out = bytearray(SIGNALING_MAGIC)
    out.append(SIGNALING_VERSION)
    out += _SIGNALING_FIXED.pack(
        header.app_id,
        int(header.content_type),
        1 if header.autostart else 0,
        int(header.codec),
        header.uncompressed_size,
        header.compressed_size,
        header.body_crc32,
    )
    out += struct.pack(">H", len(entry))
    out += entry
    out += struct.pack(">H", header.file_count)
    return bytes(out)


def read_signaling(data: bytes, offset: int = 0) -> tuple[SignalingHeader, int]:
    """Decode one signaling object at offset; returns (header, next_offset)."""
    if len(data) - offset < 5:
        raise TruncatedError("signaling object cut inside its magic or version")
    if data[offset : offset + 4] != SIGNALING_MAGIC:
        raise BadMagicError(f"bad signaling magic: {bytes(data[offset:offset + 4])!r}")
    version = data[offset + 4]
    if version != SIGNALING_VERSION:
        raise UnsupportedVersionError(f"signaling version {version}")
    fixed_at = offset + 5
    if len(data) - fixed_at < _SIGNALING_FIXED.size + 2:
        raise TruncatedError("signaling object cut inside its fixed fields")
    app_id, content_type, autostart, codec, unc, comp, crc = _SIGNALING_FIXED.unpack_from(
        data, fixed_at
    )
    (entry_len,) = struct.unpack_from(">H", data, fixed_at + _SIGNALING_FIXED.size)
    entry_at = fixed_at + _SIGNALING_FIXED.size + 2
    if len(data) - entry_at < entry_len + 2:
        raise TruncatedError("signaling object cut inside its entry point")
    entry_bytes = bytes(data[entry_at : entry_at + entry_len])
    (file_count,) = struct.unpack_from(">H", data, entry_at + entry_len)
    try:
        header = SignalingHeader(
            app_id=app_id,
            content_type=ContentType(content_type),
            autostart={0: False, 1: True}[autostart],
            codec=Codec(codec),
            uncompressed_size=unc,
            compressed_size=comp,
            body_crc32=crc,
            entry_point=entry_bytes.decode("utf-8"),
            file_count=file_count,
        )
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise MalformedHeaderError(f"signaling field out of range: {exc}") from exc
    return header, entry_at + entry_len + 2


def decode_signaling(data: bytes) -> SignalingHeader:
    """Inverse of encode_signaling. Bytes past the object are ignored."""
    return read_signaling(data, 0)[0]


def segment_payload(
    kind: ObjectKind,
    transport_id: int,
    data: bytes,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
) -> list[Segment]:
    """Split bytes into equal segments (the last carries the remainder)."""
    if not 1 <= segment_size <= MAX_SEGMENT_PAYLOAD:
        raise ValueError("segment_size must be 1..4096")
    if len(data) == 0:
        raise PayloadEmptyError("cannot segment an empty payload")
    if len(data) > MAX_SEGMENT_NUMBER * segment_size:
        raise TooManySegmentsError(
            f"{len(data)} bytes need more than {MAX_SEGMENT_NUMBER} segments of {segment_size}"
        )
    count = (len(data) + segment_size - 1) // segment_size
    segments = []
    for number in range(count):
        chunk = data[number * segment_size : (number + 1) * segment_size]
        segments.append(
            Segment(
                object_kind=kind,
                transport_id=transport_id,
                segment_number=number,
                is_last=number == count - 1,
                payload=bytes(chunk),
            )
        )
    return segments


def encode_group(segment: Segment) -> bytes:
    """Frame one segment as a data group with its CRC."""
    seg_word = (0x8000 if segment.is_last else 0) | segment.segment_number
    out = bytearray(SYNC)
    out += struct.pack(
        ">BHHH",
        int(segment.object_kind),
        segment.transport_id,
        seg_word,
        len(segment.payload),
    )
    out += segment.payload
    crc = kernels.crc16_ccitt(memoryview(out)[2:])
    out += struct.pack(">H", crc)
    return bytes(out)


class ScanStatus(Enum):
    GROUP = "group"
    CORRUPT_SKIPPED = "corrupt-skipped"
    NEED_MORE_DATA = "need-more-data"


class ScanStep(NamedTuple):
    status: ScanStatus
    segment: Optional[Segment]
    cursor: int


def decode_next(stream, cursor: int = 0) -> ScanStep:
    """One scanner step: next group, a corrupt skip, or a request for bytes.

    Never raises on noise. After a CRC failure (or an impossible field)
    the cursor resumes right past the sync word, so a corrupted length
    field cannot swallow groups that follow it. The kernel scan_groups
    is this step applied to exhaustion; the suite checks they agree.
    """
    if not isinstance(stream, (bytes, bytearray)):
        stream = bytes(stream)
    n = len(stream)
    i = stream.find(SYNC, cursor)
    if i < 0:
        if n > cursor and stream[n - 1] == 0x4D:
            return ScanStep(ScanStatus.NEED_MORE_DATA, None, n - 1)
        return ScanStep(ScanStatus.NEED_MORE_DATA, None, n)
    if i + 9 > n:
        return ScanStep(ScanStatus.NEED_MORE_DATA, None, i)
    kind = stream[i + 2]
    plen = (stream[i + 7] << 8) | stream[i + 8]
    if kind > 1 or plen < 1 or plen > MAX_SEGMENT_PAYLOAD:
        return ScanStep(ScanStatus.CORRUPT_SKIPPED, None, i + 2)
    end = i + 11 + plen
    if end > n:
        return ScanStep(ScanStatus.NEED_MORE_DATA, None, i)
    expect = (stream[end - 2] << 8) | stream[end - 1]
    if kernels.crc16_ccitt(memoryview(stream)[i + 2 : i + 9 + plen]) != expect:
        return ScanStep(ScanStatus.CORRUPT_SKIPPED, None, i + 2)
    tid = (stream[i + 3] << 8) | stream[i + 4]
    seg_word = (stream[i + 5] << 8) | stream[i + 6]
    segment = Segment(
        object_kind=ObjectKind(kind),
        transport_id=tid,
        segment_number=seg_word & 0x7FFF,
        is_last=bool(seg_word & 0x8000),
        payload=bytes(stream[i + 9 : i + 9 + plen]),
    )
    return ScanStep(ScanStatus.GROUP, segment, end)


def reassemble(segments) -> bytes:
    """Join the segments of one object; order of arrival does not matter.

    Raises IncompleteObjectError when numbers are missing or no segment is
    flagged last; InconsistentSegmentsError on contradictory duplicates,
    numbers past the last flag, mixed objects, or irregular sizes.
    """
    by_number: dict[int, Segment] = {}
    key = None
    for seg in segments:
        if key is None:
            key = (seg.object_kind, seg.transport_id)
        elif (seg.object_kind, seg.transport_id) != key:
            raise InconsistentSegmentsError("segments from more than one object")
        prev = by_number.get(seg.segment_number)
        if prev is None:
            by_number[seg.segment_number] = seg
        elif prev.payload != seg.payload or prev.is_last != seg.is_last:
            raise InconsistentSegmentsError(
                f"segment {seg.segment_number} arrived with two different contents"
            )
    if not by_number:
        raise IncompleteObjectError("no segments")
    lasts = [n for n, seg in by_number.items() if seg.is_last]
    if len(lasts) > 1:
        raise InconsistentSegmentsError(f"multiple last segments: {sorted(lasts)}")
    if not lasts:
        raise IncompleteObjectError("no last segment seen yet")
    last = lasts[0]
    if max(by_number) > last:
        raise InconsistentSegmentsError("segment numbered past the last flag")
    missing = [n for n in range(last + 1) if n not in by_number]
    if missing:
        raise IncompleteObjectError(f"missing segments: {missing}")
    if last > 0:
        regular = len(by_number[0].payload)
        for n in range(last):
            if len(by_number[n].payload) != regular:
                raise InconsistentSegmentsError("non-last segments differ in size")
        if len(by_number[last].payload) > regular:
            raise InconsistentSegmentsError("last segment larger than the others")
    return b"".join(by_number[n].payload for n in range(last + 1))


def encode_package(header: SignalingHeader, body: bytes) -> bytes:
    """GPKG blob: magic, signaling object, compressed body."""
    if len(body) != header.compressed_size:
        raise ValueError("body length does not match header.compressed_size")
    return PACKAGE_MAGIC + encode_signaling(header) + body


def decode_package(data: bytes) -> tuple[SignalingHeader, bytes]:
    if len(data) < 4:
        raise TruncatedError("package shorter than its magic")
    if data[:4] != PACKAGE_MAGIC:
        raise BadMagicError(f"bad package magic: {bytes(data[:4])!r}")
    header, offset = read_signaling(data, 4)
    body = bytes(data[offset : offset + header.compressed_size])
    if len(body) < header.compressed_size:
        raise TruncatedError("package cut inside its body")
    if offset + header.compressed_size != len(data):
        raise TrailingGarbageError("bytes after the package body")
    return header, body
