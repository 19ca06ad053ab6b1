"""Application bundles and the GBDL byte container.

Container layout (big-endian throughout):

    "GBDL" | file_count u16 | per file: name_len u16 | name | data_len u32 | data

The layout carries no timestamps or permissions, so identical bundles
serialize to identical bytes. The whole container is compressed as one
stream; per-file compression is deliberately not supported.
"""

from __future__ import annotations

import lzma
import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum

from narrowcast.errors import (
    BadMagicError,
    CorruptStreamError,
    DuplicateNameError,
    EntryPointMissingError,
    IllegalNameError,
    SizeMismatchError,
    TrailingGarbageError,
    TruncatedError,
    UnsupportedCodecError,
)

CONTAINER_MAGIC = b"GBDL"
MAX_NAME_BYTES = 255
MAX_DATA_BYTES = 2**32 - 1
MAX_FILE_COUNT = 2**16 - 1


class ContentType(IntEnum):
    RAW_FILE_SET = 0x00
    INTERACTIVE_APPLICATION = 0x01


class Codec(IntEnum):
    NONE = 0
    DEFLATE = 1
    LZMA = 2


def _validate_name(name: str) -> bytes:
    """Check the receiver-side file-writing safety rules; return UTF-8 bytes."""
    if not name:
        raise IllegalNameError("file name is empty")
    if "\x00" in name:
        raise IllegalNameError(f"file name contains NUL: {name!r}")
    if name.startswith("/"):
        raise IllegalNameError(f"file name is absolute: {name!r}")
    if ".." in name.split("/"):
        raise IllegalNameError(f"file name has a '..' component: {name!r}")
    encoded = name.encode("utf-8")
    if len(encoded) > MAX_NAME_BYTES:
        raise IllegalNameError(f"file name longer than {MAX_NAME_BYTES} bytes")
    return encoded


@dataclass(frozen=True)
class FileEntry:
    name: str
    data: bytes

    def __post_init__(self) -> None:
        _validate_name(self.name)
        if len(self.data) > MAX_DATA_BYTES:
            raise ValueError(f"file {self.name!r} exceeds the u32 size field")


@dataclass(frozen=True)
class ApplicationMetadata:
    app_id: int
    entry_point: str
    autostart: bool
    content_type: ContentType = ContentType.INTERACTIVE_APPLICATION

    def __post_init__(self) -> None:
        if not 0 <= self.app_id < 2**64:
            raise ValueError("app_id must fit an unsigned 64-bit field")


@dataclass(frozen=True)
class ApplicationBundle:
    files: tuple[FileEntry, ...]
    metadata: ApplicationMetadata

    @property
    def total_uncompressed_size(self) -> int:
        return sum(len(f.data) for f in self.files)


@dataclass(frozen=True)
class CompressedPayload:
    # For codec NONE, data length must equal uncompressed_size; the check
    # lives in decompress_payload so a receiver can represent (and then
    # reject) a payload whose announced sizes are wrong.
    codec: Codec
    uncompressed_size: int
    data: bytes


def pack_bundle(files, metadata: ApplicationMetadata) -> ApplicationBundle:
    """Assemble validated file entries and metadata into a bundle.

    File order is preserved; it becomes the container byte order.
    """
    entries = tuple(files)
    if len(entries) > MAX_FILE_COUNT:
        raise ValueError(f"more than {MAX_FILE_COUNT} files")
    seen: set[str] = set()
    for entry in entries:
        if entry.name in seen:
            raise DuplicateNameError(f"duplicate file name: {entry.name!r}")
        seen.add(entry.name)
    if metadata.content_type == ContentType.INTERACTIVE_APPLICATION:
        if metadata.entry_point not in seen:
            raise EntryPointMissingError(
                f"entry point {metadata.entry_point!r} names no file in the bundle"
            )
    return ApplicationBundle(files=entries, metadata=metadata)


def serialize_container(bundle: ApplicationBundle) -> bytes:
    """Deterministic GBDL bytes for a bundle's file list."""
    out = bytearray(CONTAINER_MAGIC)
    out += struct.pack(">H", len(bundle.files))
    for entry in bundle.files:
        name = entry.name.encode("utf-8")
        out += struct.pack(">H", len(name))
        out += name
        out += struct.pack(">I", len(entry.data))
        out += entry.data
    return bytes(out)


def parse_container(data: bytes) -> list[FileEntry]:
    """Inverse of serialize_container; returns the file list.

    Raises BadMagicError / TruncatedError / DuplicateNameError /
    TrailingGarbageError, and IllegalNameError for names the container
    should never carry.
    """
    if len(data) < 4:
        raise TruncatedError("container shorter than its magic")
    if data[:4] != CONTAINER_MAGIC:
        raise BadMagicError(f"bad container magic: {bytes(data[:4])!r}")
    if len(data) < 6:
        raise TruncatedError("container missing file count")
    (count,) = struct.unpack_from(">H", data, 4)
    offset = 6
    files: list[FileEntry] = []
    seen: set[str] = set()
    for _ in range(count):
        if offset + 2 > len(data):
            raise TruncatedError("container cut inside a name length")
        (name_len,) = struct.unpack_from(">H", data, offset)
        offset += 2
        if offset + name_len > len(data):
            raise TruncatedError("container cut inside a file name")
        name_bytes = bytes(data[offset : offset + name_len])
        offset += name_len
        try:
            name = name_bytes.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IllegalNameError(f"file name is not UTF-8: {name_bytes!r}") from exc
        if offset + 4 > len(data):
            raise TruncatedError("container cut inside a data length")
        (data_len,) = struct.unpack_from(">I", data, offset)
        offset += 4
        if offset + data_len > len(data):
            raise TruncatedError("declared data length exceeds remaining bytes")
        if name in seen:
            raise DuplicateNameError(f"duplicate file name: {name!r}")
        seen.add(name)
        files.append(FileEntry(name=name, data=bytes(data[offset : offset + data_len])))
        offset += data_len
    if offset != len(data):
        raise TrailingGarbageError(f"{len(data) - offset} bytes after the last file")
    return files


def compress_payload(data: bytes, codec: Codec) -> CompressedPayload:
    if len(data) > MAX_DATA_BYTES:
        raise ValueError("payload exceeds the u32 size field")
    if codec == Codec.NONE:
        body = bytes(data)
    elif codec == Codec.DEFLATE:
        body = zlib.compress(bytes(data), 9)
    elif codec == Codec.LZMA:
        body = lzma.compress(bytes(data), preset=6)
    else:
        raise UnsupportedCodecError(f"unknown codec: {codec!r}")
    return CompressedPayload(codec=codec, uncompressed_size=len(data), data=body)


def decompress_payload(payload: CompressedPayload) -> bytes:
    try:
        codec = Codec(payload.codec)
    except ValueError:
        raise UnsupportedCodecError(f"unknown codec: {payload.codec!r}") from None
    if codec == Codec.NONE:
        data = payload.data
    elif codec == Codec.DEFLATE:
        try:
            data = zlib.decompress(payload.data)
        except zlib.error as exc:
            raise CorruptStreamError(f"deflate: {exc}") from exc
    elif codec == Codec.LZMA:
        try:
            data = lzma.decompress(payload.data)
        except lzma.LZMAError as exc:
            raise CorruptStreamError(f"lzma: {exc}") from exc
    if len(data) != payload.uncompressed_size:
        raise SizeMismatchError(
            f"decoded {len(data)} bytes, header announced {payload.uncompressed_size}"
        )
    return data
