"""Shared fixtures: the reference nine-file tree and a sync-clean small schedule."""

import hashlib

import pytest

from narrowcast.bundle import (
    ApplicationMetadata,
    Codec,
    ContentType,
    FileEntry,
    pack_bundle,
)
from narrowcast.carousel import build_schedule
from narrowcast.codec import SYNC, SignalingHeader, body_checksum

# Reference fixture: nine files totalling 14141 bytes, one of them an
# incompressible image stand-in, the rest text-like.
REFERENCE_SIZES = (
    ("demo1.ncl", 5734),
    ("equipe.txt", 7),
    ("logo.png", 6922),
    ("prog.txt", 14),
    ("sair.txt", 5),
    ("sobre.txt", 6),
    ("text1.txt", 537),
    ("text2.txt", 794),
    ("text3.txt", 122),
)
REFERENCE_TOTAL = 14141
REFERENCE_ENTRY = "demo1.ncl"

_VOCAB = (
    b"carousel ", b"receiver ", b"bundle ", b"frame ", b"cycle ", b"signal ",
    b"audio ", b"channel ", b"segment ", b"header ", b"bitrate ", b"antenna ",
    b"schedule ", b"multiplex ", b"broadcast ", b"interleave ",
)


def byte_stream(tag: str, n: int) -> bytes:
    """Deterministic pseudo-random bytes, stable across platforms."""
    out = bytearray()
    counter = 0
    while len(out) < n:
        out += hashlib.sha256(f"{tag}:{counter}".encode()).digest()
        counter += 1
    return bytes(out[:n])


def text_stream(tag: str, n: int) -> bytes:
    """Word soup with prose-like redundancy (compresses well)."""
    driver = byte_stream("text:" + tag, n)
    out = bytearray()
    i = 0
    while len(out) < n:
        out += _VOCAB[driver[i % len(driver)] & 15]
        i += 1
    return bytes(out[:n])


def reference_file_entries() -> tuple[FileEntry, ...]:
    entries = []
    for name, size in REFERENCE_SIZES:
        if name.endswith(".png"):
            data = byte_stream(name, size)
        else:
            data = text_stream(name, size)
        entries.append(FileEntry(name=name, data=data))
    return tuple(entries)


@pytest.fixture(scope="session")
def reference_files() -> tuple[FileEntry, ...]:
    return reference_file_entries()


@pytest.fixture(scope="session")
def reference_bundle(reference_files):
    metadata = ApplicationMetadata(
        app_id=0x2A,
        entry_point=REFERENCE_ENTRY,
        autostart=True,
        content_type=ContentType.INTERACTIVE_APPLICATION,
    )
    return pack_bundle(reference_files, metadata)


@pytest.fixture()
def reference_tree(tmp_path, reference_files):
    """The reference files written to disk for CLI runs."""
    root = tmp_path / "app"
    root.mkdir()
    for entry in reference_files:
        (root / entry.name).write_bytes(entry.data)
    return root


def make_small_schedule(segment_size: int = 256, body_size: int = 2000):
    """A few-group schedule whose cycle contains sync patterns only at
    group starts, so joining mid-group cannot stall the scanner on a
    phantom group. Returns (header, body, schedule)."""
    body = bytes(b & 0x3F for b in byte_stream("liveness-body", body_size))
    header = SignalingHeader(
        app_id=7,
        content_type=ContentType.RAW_FILE_SET,
        autostart=False,
        codec=Codec.NONE,
        uncompressed_size=len(body),
        compressed_size=len(body),
        body_crc32=body_checksum(body),
        entry_point="a.bin",
        file_count=1,
    )
    schedule = build_schedule(header, body, segment_size)
    cycle = b"".join(schedule.groups)
    starts = set()
    offset = 0
    for group in schedule.groups:
        starts.add(offset)
        offset += len(group)
    found = set()
    at = cycle.find(SYNC)
    while at != -1:
        found.add(at)
        at = cycle.find(SYNC, at + 1)
    assert found == starts, "fixture grew a stray sync pattern; change the tag"
    return header, body, schedule


# --- acceptance summary -------------------------------------------------

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE_RESULTS[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[nodeid]
        label = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{label}  {nodeid.split('::')[-1]}")
