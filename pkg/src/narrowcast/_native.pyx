# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled scan kernels. Must mirror narrowcast._pure exactly."""

from cpython.bytes cimport PyBytes_FromStringAndSize
from libc.stdint cimport uint8_t, uint16_t, uint32_t

BACKEND = "c"

MAX_PAYLOAD = 4096

cdef uint16_t CRC_TABLE[256]


cdef void _init_table() noexcept:
    cdef uint32_t crc
    cdef int i, j
    for i in range(256):
        crc = <uint32_t>(i << 8)
        for j in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
        CRC_TABLE[i] = <uint16_t>crc


_init_table()


cdef inline uint16_t _crc16_raw(const uint8_t* p, Py_ssize_t n, uint16_t crc) noexcept:
    cdef Py_ssize_t k
    for k in range(n):
        crc = <uint16_t>(((crc << 8) & 0xFFFF) ^ CRC_TABLE[((crc >> 8) ^ p[k]) & 0xFF])
    return crc


def crc16_ccitt(data, crc=0xFFFF):
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor."""
    cdef const uint8_t[:] view = data
    cdef Py_ssize_t n = view.shape[0]
    cdef uint16_t c = <uint16_t>crc
    if n == 0:
        return int(c)
    return int(_crc16_raw(&view[0], n, c))


def scan_groups(buf, Py_ssize_t cursor=0):
    """Scan a byte buffer for framed data groups, to exhaustion.

    Same contract as narrowcast._pure.scan_groups.
    """
    cdef const uint8_t[:] view = buf
    cdef Py_ssize_t n = view.shape[0]
    cdef const uint8_t* p = NULL
    cdef Py_ssize_t i, end
    cdef int kind, plen, tid, seg_word
    cdef uint16_t expect
    cdef long corrupt = 0
    groups = []
    if n > 0:
        p = &view[0]
    while True:
        # find the 0x4D47 sync pattern
        i = cursor
        while i + 1 < n and not (p[i] == 0x4D and p[i + 1] == 0x47):
            i += 1
        if i + 1 >= n:
            if n > cursor and p[n - 1] == 0x4D:
                cursor = n - 1
            else:
                cursor = n
            break
        if i + 9 > n:
            cursor = i
            break
        kind = p[i + 2]
        plen = (p[i + 7] << 8) | p[i + 8]
        if kind > 1 or plen < 1 or plen > 4096:
            corrupt += 1
            cursor = i + 2
            continue
        end = i + 11 + plen
        if end > n:
            cursor = i
            break
        expect = <uint16_t>((p[end - 2] << 8) | p[end - 1])
        if _crc16_raw(p + i + 2, 7 + plen, 0xFFFF) != expect:
            corrupt += 1
            cursor = i + 2
            continue
        tid = (p[i + 3] << 8) | p[i + 4]
        seg_word = (p[i + 5] << 8) | p[i + 6]
        groups.append(
            (kind, tid, seg_word, PyBytes_FromStringAndSize(<const char*>(p + i + 9), plen))
        )
        cursor = end
    return groups, cursor, corrupt
