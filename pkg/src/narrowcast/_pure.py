"""Pure-Python scan kernels.

Reference implementation for the optional compiled extension
(narrowcast._native). The two must stay byte-for-byte equivalent; the
test suite checks them against each other and against the single-step
decoder in narrowcast.codec.
"""

BACKEND = "python"

SYNC = b"MG"  # 0x4D47
MAX_PAYLOAD = 4096


def _build_table() -> list[int]:
    table = []
    for i in range(256):
        crc = i << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
        table.append(crc)
    return table


_CRC_TABLE = _build_table()


def crc16_ccitt(data, crc: int = 0xFFFF) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor."""
    table = _CRC_TABLE
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ table[((crc >> 8) ^ b) & 0xFF]
    return crc


def scan_groups(buf, cursor: int = 0):
    """Scan a byte buffer for framed data groups, to exhaustion.

    Returns (groups, cursor, corrupt_count) where groups is a list of
    (object_kind, transport_id, seg_word, payload) tuples and cursor is
    where the next scan should resume once more bytes arrive. Bad CRCs
    and impossible field values skip just past the sync word so that a
    corrupted length field cannot desynchronize the stream.
    """
    if not isinstance(buf, (bytes, bytearray)):
        buf = bytes(buf)
    n = len(buf)
    groups = []
    corrupt = 0
    while True:
        i = buf.find(SYNC, cursor)
        if i < 0:
            # Keep a trailing 0x4D: the second sync byte may still arrive.
            if n > cursor and buf[n - 1] == 0x4D:
                cursor = n - 1
            else:
                cursor = n
            break
        if i + 9 > n:
            cursor = i
            break
        kind = buf[i + 2]
        plen = (buf[i + 7] << 8) | buf[i + 8]
        if kind > 1 or plen < 1 or plen > MAX_PAYLOAD:
            corrupt += 1
            cursor = i + 2
            continue
        end = i + 11 + plen
        if end > n:
            cursor = i
            break
        expect = (buf[end - 2] << 8) | buf[end - 1]
        if crc16_ccitt(memoryview(buf)[i + 2 : i + 9 + plen]) != expect:
            corrupt += 1
            cursor = i + 2
            continue
        tid = (buf[i + 3] << 8) | buf[i + 4]
        seg_word = (buf[i + 5] << 8) | buf[i + 6]
        groups.append((kind, tid, seg_word, bytes(buf[i + 9 : i + 9 + plen])))
        cursor = end
    return groups, cursor, corrupt
