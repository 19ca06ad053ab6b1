"""Receive side: scan frames for groups, rebuild objects, verify, hand off.

The receiver never aborts on noise. Corrupt groups are counted and skipped;
a reassembled body that fails its announced CRC-32 is thrown away and the
acquisition restarts, because the carousel will resend everything. The only
exceptions raised here are contract violations (frames out of order,
delivering before completion) and delivery verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import MutableMapping, Optional, Union

from narrowcast import kernels
from narrowcast.bundle import (
    ApplicationMetadata,
    CompressedPayload,
    ContentType,
    FileEntry,
    decompress_payload,
    parse_container,
)
from narrowcast.carousel import Frame
from narrowcast.codec import (
    ObjectKind,
    Segment,
    SignalingHeader,
    body_checksum,
    decode_signaling,
    reassemble,
)
from narrowcast.errors import (
    BodyCrcMismatchError,
    ContainerParseFailureError,
    DecompressFailureError,
    EntryPointMissingError,
    NarrowcastError,
    NotCompleteError,
    OutOfOrderFrameError,
)

OutputSink = Union[str, Path, MutableMapping[str, bytes], None]


class AcquisitionOutcome(Enum):
    COMPLETE = "Complete"
    TIMED_OUT = "TimedOut"


@dataclass(frozen=True)
class LaunchEvent:
    app_id: int
    entry_point: str
    autostart: bool

    def line(self) -> str:
        """The structured launch line printed on the report stream."""
        return (
            f"launch app_id={self.app_id:x} entry={self.entry_point} "
            f"autostart={1 if self.autostart else 0}"
        )


@dataclass(frozen=True)
class DeliveredApplication:
    files: tuple[FileEntry, ...]
    metadata: ApplicationMetadata
    launch: LaunchEvent


@dataclass(frozen=True)
class AcquisitionReport:
    join_time: float
    header_complete_time: Optional[float]
    completion_time: Optional[float]
    elapsed: Optional[float]
    cycles_spanned: Optional[float]
    frames_seen: int
    groups_ok: int
    groups_corrupt: int
    outcome: AcquisitionOutcome


class Receiver:
    """Single-owner acquisition state; feed frames strictly in index order."""

    def __init__(self, frame_duration: float = 0.4, join_time: Optional[float] = None):
        self.frame_duration = frame_duration
        self.join_time = join_time
        self.decoded_header: Optional[SignalingHeader] = None
        self.header_complete_time: Optional[float] = None
        self.completion_time: Optional[float] = None
        self.frames_seen = 0
        self.groups_ok = 0
        self.groups_corrupt = 0
        self._buffer = bytearray()
        self._cursor = 0
        self._segments: dict[tuple[int, int], dict[int, tuple[bool, bytes]]] = {}
        self._complete_objects: set[tuple[int, int]] = set()
        self._header_tid: Optional[int] = None
        self._body_bytes: Optional[bytes] = None
        self._last_index: Optional[int] = None

    @property
    def is_complete(self) -> bool:
        return self.completion_time is not None

    def ingest_frame(self, frame: Frame) -> None:
        """Append a frame's bytes, scan for groups, advance object state."""
        if self._last_index is not None and frame.index <= self._last_index:
            raise OutOfOrderFrameError(
                f"frame {frame.index} after frame {self._last_index}"
            )
        self._last_index = frame.index
        if self.join_time is None:
            self.join_time = frame.timestamp
        self.frames_seen += 1
        self._buffer += frame.data
        groups, cursor, corrupt = kernels.scan_groups(self._buffer, self._cursor)
        self.groups_corrupt += corrupt
        del self._buffer[:cursor]
        self._cursor = 0
        for kind, tid, seg_word, payload in groups:
            self._file_segment(kind, tid, seg_word, payload)
        self._advance(frame.timestamp + self.frame_duration)

    def _file_segment(self, kind: int, tid: int, seg_word: int, payload: bytes) -> None:
        self.groups_ok += 1
        number = seg_word & 0x7FFF
        is_last = bool(seg_word & 0x8000)
        by_number = self._segments.setdefault((kind, tid), {})
        if number not in by_number:
            by_number[number] = (is_last, payload)
        # a conflicting duplicate keeps the first arrival; the object-level
        # checksum arbitrates and a discard restarts collection
        lasts = [n for n, (last, _) in by_number.items() if last]
        if len(lasts) == 1 and len(by_number) == lasts[0] + 1 and max(by_number) == lasts[0]:
            self._complete_objects.add((kind, tid))

    def _object_segments(self, kind: int, tid: int) -> list[Segment]:
        by_number = self._segments[(kind, tid)]
        return [
            Segment(
                object_kind=ObjectKind(kind),
                transport_id=tid,
                segment_number=number,
                is_last=last,
                payload=payload,
            )
            for number, (last, payload) in by_number.items()
        ]

    def _drop_object(self, kind: int, tid: int) -> None:
        self._segments.pop((kind, tid), None)
        self._complete_objects.discard((kind, tid))

    def _advance(self, end_time: float) -> None:
        if self.decoded_header is None:
            for kind, tid in sorted(self._complete_objects):
                if kind != ObjectKind.HEADER:
                    continue
                try:
                    header = decode_signaling(reassemble(self._object_segments(kind, tid)))
                except NarrowcastError:
                    self._drop_object(kind, tid)
                    continue
                self.decoded_header = header
                self._header_tid = tid
                self.header_complete_time = end_time
                break
        if self.decoded_header is None or self.completion_time is not None:
            return
        body_key = (int(ObjectKind.BODY), self._header_tid)
        if body_key in self._complete_objects:
            try:
                body = reassemble(self._object_segments(*body_key))
            except NarrowcastError:
                self._drop_object(*body_key)
                return
            self._body_bytes = body
            self.completion_time = end_time

    def _discard_acquisition(self) -> None:
        """Restart collection from nothing; counters and the buffer survive."""
        self._segments.clear()
        self._complete_objects.clear()
        self.decoded_header = None
        self._header_tid = None
        self._body_bytes = None
        self.header_complete_time = None
        self.completion_time = None

    def deliver(self, sink: OutputSink = None) -> DeliveredApplication:
        """Verify the acquired body end to end, unpack it, emit the launch event.

        A CRC-32 mismatch discards the acquisition (header included) and
        raises BodyCrcMismatchError: the caller should keep feeding frames.
        Decompression and container failures are terminal; the carousel
        would only resend the same broken content.
        """
        if not self.is_complete:
            raise NotCompleteError("receiver has no complete header+body pair")
        header = self.decoded_header
        body = self._body_bytes
        assert header is not None and body is not None
        if len(body) != header.compressed_size or body_checksum(body) != header.body_crc32:
            self._discard_acquisition()
            raise BodyCrcMismatchError(
                "reassembled body does not match the announced size/CRC-32"
            )
        payload = CompressedPayload(
            codec=header.codec, uncompressed_size=header.uncompressed_size, data=body
        )
        try:
            container = decompress_payload(payload)
        except NarrowcastError as exc:
            raise DecompressFailureError(str(exc)) from exc
        try:
            files = parse_container(container)
        except NarrowcastError as exc:
            raise ContainerParseFailureError(str(exc)) from exc
        names = {f.name for f in files}
        if (
            header.content_type == ContentType.INTERACTIVE_APPLICATION
            and header.entry_point not in names
        ):
            raise EntryPointMissingError(
                f"entry point {header.entry_point!r} not among the delivered files"
            )
        self._write_sink(sink, files)
        metadata = ApplicationMetadata(
            app_id=header.app_id,
            entry_point=header.entry_point,
            autostart=header.autostart,
            content_type=header.content_type,
        )
        launch = LaunchEvent(
            app_id=header.app_id,
            entry_point=header.entry_point,
            autostart=header.autostart,
        )
        return DeliveredApplication(files=tuple(files), metadata=metadata, launch=launch)

    @staticmethod
    def _write_sink(sink: OutputSink, files: list[FileEntry]) -> None:
        if sink is None:
            return
        if isinstance(sink, (str, Path)):
            base = Path(sink)
            base.mkdir(parents=True, exist_ok=True)
            for entry in files:
                target = base / entry.name  # names were validated during parsing
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(entry.data)
        else:
            for entry in files:
                sink[entry.name] = entry.data

    def report(
        self,
        cycle_duration: Optional[float] = None,
        extra_latency: float = 0.0,
    ) -> AcquisitionReport:
        """Snapshot of counters and times; extra_latency models launch delay."""
        join = self.join_time if self.join_time is not None else 0.0
        complete = self.completion_time is not None
        elapsed = None
        cycles = None
        if complete:
            radio_elapsed = self.completion_time - join
            elapsed = radio_elapsed + extra_latency
            if cycle_duration:
                cycles = radio_elapsed / cycle_duration
        return AcquisitionReport(
            join_time=join,
            header_complete_time=self.header_complete_time,
            completion_time=self.completion_time,
            elapsed=elapsed,
            cycles_spanned=cycles,
            frames_seen=self.frames_seen,
            groups_ok=self.groups_ok,
            groups_corrupt=self.groups_corrupt,
            outcome=AcquisitionOutcome.COMPLETE if complete else AcquisitionOutcome.TIMED_OUT,
        )
