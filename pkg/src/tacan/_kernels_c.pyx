# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Bit-for-bit equivalent to ``_kernels_py``: float accumulations are plain
sequential sums so both backends produce identical IEEE-754 results.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "c"

cdef int _CRC8_POLY = 0x1D
cdef int _CRC8_INIT = 0xFF
cdef int _CRC8_XOR_OUT = 0xFF

cdef unsigned char[256] _CRC8_TABLE

cdef void _fill_crc8_table():
    cdef int byte, k, crc
    for byte in range(256):
        crc = byte
        for k in range(8):
            if crc & 0x80:
                crc = ((crc << 1) ^ _CRC8_POLY) & 0xFF
            else:
                crc = (crc << 1) & 0xFF
        _CRC8_TABLE[byte] = <unsigned char> crc

_fill_crc8_table()


def crc8(data) -> int:
    """CRC-8 (poly 0x1D, init 0xFF, MSB first, final xor 0xFF) of a byte string."""
    cdef const unsigned char[::1] buf = bytes(data)
    cdef Py_ssize_t i, n = buf.shape[0]
    cdef int crc = _CRC8_INIT
    for i in range(n):
        crc = _CRC8_TABLE[crc ^ buf[i]]
    return crc ^ _CRC8_XOR_OUT


def stuff_bits(cnp.ndarray bits not None):
    """Insert an opposite-polarity bit after every run of five identical bits."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] a = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t n = a.shape[0]
    # worst case: one stuff bit per four payload bits after the first five
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.empty(n + n // 4 + 1, dtype=np.uint8)
    cdef Py_ssize_t i, j = 0
    cdef int run_val = -1, run_len = 0, b, stuffed
    for i in range(n):
        b = a[i]
        out[j] = <cnp.uint8_t> b
        j += 1
        if b == run_val:
            run_len += 1
        else:
            run_val = b
            run_len = 1
        if run_len == 5:
            stuffed = run_val ^ 1
            out[j] = <cnp.uint8_t> stuffed
            j += 1
            run_val = stuffed
            run_len = 1
    return out[:j].copy()


def destuff_bits(cnp.ndarray bits not None):
    """Inverse of stuff_bits; returns (payload, violation_index_or_minus_1)."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] a = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.empty(n, dtype=np.uint8)
    cdef Py_ssize_t i = 0, j = 0
    cdef int run_val = -1, run_len = 0, b
    while i < n:
        b = a[i]
        if run_len == 5:
            if b == run_val:
                return out[:j].copy(), i
            run_val = b
            run_len = 1
            i += 1
            continue
        out[j] = <cnp.uint8_t> b
        j += 1
        if b == run_val:
            run_len += 1
        else:
            run_val = b
            run_len = 1
        i += 1
    return out[:j].copy(), -1


def running_mean(cnp.ndarray x not None, Py_ssize_t window):
    """Mean over each length-``window`` sliding window (full windows only)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c = np.empty(n + 1, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double acc = 0.0
    c[0] = 0.0
    for i in range(n):
        acc += a[i]
        c[i + 1] = acc
    cdef Py_ssize_t m = n - window + 1
    if m <= 0:
        return np.empty(0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    cdef double w = <double> window
    for i in range(m):
        out[i] = (c[i + window] - c[i]) / w
    return out


def batch_offsets(cnp.ndarray iats not None, double period):
    """Accumulated offsets O[i] = (i+1)*period - sum(iats[:i+1])."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(iats, dtype=np.float64)
    cdef Py_ssize_t i, n = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double acc = 0.0
    for i in range(n):
        acc += a[i]
        out[i] = (<double> (i + 1)) * period - acc
    return out
