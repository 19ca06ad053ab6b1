"""Cyclic scheduling of data groups and fixed-bitrate framing.

The carousel is a continuous byte pipe: the encoded groups of one cycle are
concatenated and repeated forever, and frames are cut from that stream at
the configured capacity. Groups may span frame boundaries; nothing is
padded between cycles. Header groups lead each cycle so a receiver that
just joined learns the application metadata as early as possible.

Frame-stream file layout ("GFRM", big-endian):

    "GFRM" | capacity u32 | frame_count u64 | concatenated frame bytes
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

from narrowcast.bundle import CompressedPayload
from narrowcast.codec import (
    DEFAULT_SEGMENT_SIZE,
    ObjectKind,
    SignalingHeader,
    encode_group,
    encode_signaling,
    segment_payload,
)
from narrowcast.errors import BadMagicError, ConfigError, TruncatedError

FRAME_FILE_MAGIC = b"GFRM"
MIN_FRAME_CAPACITY = 12  # smallest group: 11 bytes of framing + 1 payload byte


@dataclass(frozen=True)
class MultiplexConfig:
    """Bitrate split of one broadcast channel.

    The audio stream is accounted capacity only; no audio bytes are
    modeled. frame_duration defaults to the 0.4 s transmission-frame
    cadence of low-band digital radio.
    """

    data_bitrate: int
    audio_bitrate: int = 0
    frame_duration: float = 0.4
    preset_name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.data_bitrate <= 0:
            raise ConfigError("data_bitrate must be positive")
        if self.audio_bitrate < 0:
            raise ConfigError("audio_bitrate must be >= 0")
        if self.frame_duration <= 0:
            raise ConfigError("frame_duration must be positive")
        if self.frame_capacity < MIN_FRAME_CAPACITY:
            raise ConfigError(
                f"frame capacity {self.frame_capacity} bytes cannot fit a minimal group"
            )

    @property
    def frame_capacity(self) -> int:
        """Data bytes per frame: floor(data_bitrate * frame_duration / 8)."""
        # round() clears float noise in the product before the floor
        return int(math.floor(round(self.data_bitrate * self.frame_duration, 6) / 8))

    @property
    def total_bitrate(self) -> int:
        return self.data_bitrate + self.audio_bitrate


PRESETS: dict[str, MultiplexConfig] = {
    # 5 kbps application / 16 kbps audio: the benchtop shortwave allocation
    "drm30-prototype": MultiplexConfig(5000, 16000, 0.4, "drm30-prototype"),
    "drm30-narrow": MultiplexConfig(2500, 8000, 0.4, "drm30-narrow"),
    "drm-vhf": MultiplexConfig(60000, 140000, 0.4, "drm-vhf"),
}


@dataclass(frozen=True)
class Frame:
    index: int
    timestamp: float
    data: bytes


@dataclass(frozen=True)
class CarouselSchedule:
    groups: tuple[bytes, ...]
    cycle_bytes: int = field(init=False)

    def __post_init__(self) -> None:
        groups = tuple(bytes(g) for g in self.groups)
        if not groups:
            raise ValueError("a schedule needs at least one group")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "cycle_bytes", sum(len(g) for g in groups))


def build_schedule(
    header: SignalingHeader,
    body: Union[CompressedPayload, bytes],
    segment_size: int = DEFAULT_SEGMENT_SIZE,
) -> CarouselSchedule:
    """Encode header and body objects into one cycle, header groups first.

    Both objects share the application's transport id (app_id mod 2^16);
    object kind tells them apart on the wire.
    """
    body_bytes = body.data if isinstance(body, CompressedPayload) else bytes(body)
    transport_id = header.app_id & 0xFFFF
    groups = [
        encode_group(seg)
        for seg in segment_payload(
            ObjectKind.HEADER, transport_id, encode_signaling(header), segment_size
        )
    ]
    groups += [
        encode_group(seg)
        for seg in segment_payload(ObjectKind.BODY, transport_id, body_bytes, segment_size)
    ]
    return CarouselSchedule(groups=tuple(groups))


def iter_frames(
    schedule: CarouselSchedule, config: MultiplexConfig, start: int = 0
) -> Iterator[Frame]:
    """Endless frames of the repeating cycle, starting at frame index `start`."""
    cycle = b"".join(schedule.groups)
    length = len(cycle)
    capacity = config.frame_capacity
    index = start
    position = (start * capacity) % length
    while True:
        need = capacity
        parts = []
        while need:
            take = min(need, length - position)
            parts.append(cycle[position : position + take])
            position = (position + take) % length
            need -= take
        yield Frame(index=index, timestamp=index * config.frame_duration, data=b"".join(parts))
        index += 1


def frame_stream(
    schedule: CarouselSchedule, config: MultiplexConfig, frame_count: int
) -> list[Frame]:
    """First frame_count frames of the infinite periodic stream."""
    if frame_count < 0:
        raise ValueError("frame_count must be >= 0")
    return list(islice(iter_frames(schedule, config, 0), frame_count))


def cycle_duration(schedule: CarouselSchedule, config: MultiplexConfig) -> float:
    """Seconds one full cycle occupies at the configured data bitrate."""
    return schedule.cycle_bytes * 8 / config.data_bitrate


def frames_for_cycles(
    schedule: CarouselSchedule, config: MultiplexConfig, cycles: float
) -> int:
    """Frame count whose payload covers at least `cycles` repetitions."""
    if cycles <= 0:
        raise ValueError("cycles must be positive")
    return math.ceil(cycles * schedule.cycle_bytes / config.frame_capacity)


def write_frame_file(path: Union[str, Path], frames: Iterable[Frame], capacity: int) -> int:
    """Write frames to a GFRM file; returns the frame count."""
    count = 0
    with open(path, "wb") as fp:
        fp.write(FRAME_FILE_MAGIC)
        fp.write(struct.pack(">I", capacity))
        fp.write(struct.pack(">Q", 0))  # patched after the frames are known
        for frame in frames:
            if len(frame.data) != capacity:
                raise ValueError(
                    f"frame {frame.index} is {len(frame.data)} bytes, capacity {capacity}"
                )
            fp.write(frame.data)
            count += 1
        fp.seek(len(FRAME_FILE_MAGIC) + 4)
        fp.write(struct.pack(">Q", count))
    return count


def read_frame_file_header(fp) -> tuple[int, int]:
    """Validate the GFRM magic and return (capacity, frame_count)."""
    head = fp.read(16)
    if len(head) < 4:
        raise TruncatedError("frame file shorter than its magic")
    if head[:4] != FRAME_FILE_MAGIC:
        raise BadMagicError(f"bad frame-file magic: {bytes(head[:4])!r}")
    if len(head) < 16:
        raise TruncatedError("frame file cut inside its header")
    (capacity,) = struct.unpack_from(">I", head, 4)
    (count,) = struct.unpack_from(">Q", head, 8)
    return capacity, count


def iter_frame_file(
    path: Union[str, Path], frame_duration: float = 0.4
) -> Iterator[Frame]:
    """Stream frames out of a GFRM file one at a time.

    Frames are indexed 0..n-1 with timestamps on this file's clock.
    """
    with open(path, "rb") as fp:
        capacity, count = read_frame_file_header(fp)
        for index in range(count):
            data = fp.read(capacity)
            if len(data) < capacity:
                raise TruncatedError("frame file cut inside its frames")
            yield Frame(index=index, timestamp=index * frame_duration, data=data)


def read_frame_file(
    path: Union[str, Path], frame_duration: float = 0.4
) -> tuple[int, list[Frame]]:
    """Read a whole GFRM file; see iter_frame_file for the streaming form."""
    with open(path, "rb") as fp:
        capacity, _ = read_frame_file_header(fp)
    return capacity, list(iter_frame_file(path, frame_duration))
