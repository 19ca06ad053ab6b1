"""Throughput of the scan kernels: compiled extension vs pure Python.

Usage: python benchmarks/bench_kernels.py [--mib N]

Builds a realistic carousel byte stream (framed groups with a sprinkling of
corruption), then times crc16_ccitt and scan_groups on each available
backend.
"""

import argparse
import random
import time

from narrowcast import _pure
from narrowcast.codec import ObjectKind, Segment, encode_group

try:
    from narrowcast import _native
except ImportError:
    _native = None


def build_stream(target_bytes: int) -> bytes:
    rnd = random.Random(2024)
    out = bytearray()
    number = 0
    while len(out) < target_bytes:
        segment = Segment(
            object_kind=ObjectKind.BODY,
            transport_id=7,
            segment_number=number % 32768,
            is_last=False,
            payload=rnd.randbytes(1024),
        )
        group = bytearray(encode_group(segment))
        if number % 17 == 0:  # damage ~6% of groups to exercise resync
            group[rnd.randrange(len(group))] ^= 0xFF
        out += group
        number += 1
    return bytes(out)


def timed(fn, *args) -> float:
    start = time.perf_counter()
    fn(*args)
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mib", type=float, default=8.0, help="stream size in MiB")
    opts = parser.parse_args()

    stream = build_stream(int(opts.mib * 1024 * 1024))
    size_mib = len(stream) / (1024 * 1024)
    backends = [("python", _pure)] + ([("c", _native)] if _native else [])
    if _native is None:
        print("note: compiled extension not built; only the fallback is timed")

    print(f"stream: {size_mib:.1f} MiB of framed groups (~6% corrupted)")
    print(f"{'backend':<8} {'crc16 MiB/s':>12} {'scan MiB/s':>12}")
    results = {}
    for name, impl in backends:
        crc_s = timed(impl.crc16_ccitt, stream)
        scan_s = timed(impl.scan_groups, stream, 0)
        results[name] = (size_mib / crc_s, size_mib / scan_s)
        print(f"{name:<8} {results[name][0]:>12.1f} {results[name][1]:>12.1f}")

    if "c" in results:
        crc_x = results["c"][0] / results["python"][0]
        scan_x = results["c"][1] / results["python"][1]
        print(f"speedup: crc16 {crc_x:.0f}x, scan {scan_x:.0f}x")

    sanity = _pure.scan_groups(stream[: 64 * 1024], 0)
    if _native is not None:
        assert _native.scan_groups(stream[: 64 * 1024], 0) == sanity
        print("backends agree on a 64 KiB probe")


if __name__ == "__main__":
    main()
