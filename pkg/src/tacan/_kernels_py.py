"""Pure-Python/numpy implementations of the hot kernels.

Semantics (including float summation order) are pinned to match the
compiled backend in ``_kernels_c`` bit for bit: running means and offset
accumulations go through a sequential cumulative sum in both.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "py"

_CRC8_POLY = 0x1D
_CRC8_INIT = 0xFF
_CRC8_XOR_OUT = 0xFF


def _make_crc8_table(poly: int) -> np.ndarray:
    table = np.zeros(256, dtype=np.uint8)
    for byte in range(256):
        crc = byte
        for _ in range(8):
            if crc & 0x80:
                crc = ((crc << 1) ^ poly) & 0xFF
            else:
                crc = (crc << 1) & 0xFF
        table[byte] = crc
    return table


_CRC8_TABLE = _make_crc8_table(_CRC8_POLY)


def crc8(data: bytes | bytearray | np.ndarray) -> int:
    """CRC-8 (poly 0x1D, init 0xFF, MSB first, final xor 0xFF) of a byte string."""
    buf = np.frombuffer(bytes(data), dtype=np.uint8)
    crc = _CRC8_INIT
    table = _CRC8_TABLE
    for byte in buf:
        crc = int(table[crc ^ byte])
    return crc ^ _CRC8_XOR_OUT


def stuff_bits(bits: np.ndarray) -> np.ndarray:
    """Insert an opposite-polarity bit after every run of five identical bits.

    Stuffed bits count toward subsequent runs, matching CAN transmitter
    behaviour; a run reaching five at the very end still gets its stuff bit.
    """
    out = []
    run_val = -1
    run_len = 0
    for b in bits.tolist():
        out.append(b)
        if b == run_val:
            run_len += 1
        else:
            run_val = b
            run_len = 1
        if run_len == 5:
            stuffed = run_val ^ 1
            out.append(stuffed)
            run_val = stuffed
            run_len = 1
    return np.asarray(out, dtype=np.uint8)


def destuff_bits(bits: np.ndarray) -> tuple[np.ndarray, int]:
    """Inverse of :func:`stuff_bits`.

    Returns ``(payload, violation)`` where ``violation`` is -1 on success or
    the index (into the stuffed input) of the sixth identical bit otherwise.
    """
    out = []
    run_val = -1
    run_len = 0
    seq = bits.tolist()
    i = 0
    n = len(seq)
    while i < n:
        b = seq[i]
        if run_len == 5:
            if b == run_val:
                return np.asarray(out, dtype=np.uint8), i
            run_val = b
            run_len = 1
            i += 1
            continue
        out.append(b)
        if b == run_val:
            run_len += 1
        else:
            run_val = b
            run_len = 1
        i += 1
    return np.asarray(out, dtype=np.uint8), -1


def running_mean(x: np.ndarray, window: int) -> np.ndarray:
    """Mean over each length-``window`` sliding window (full windows only)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    c = np.empty(x.size + 1, dtype=np.float64)
    c[0] = 0.0
    np.cumsum(x, out=c[1:])
    return (c[window:] - c[:-window]) / window


def batch_offsets(iats: np.ndarray, period: float) -> np.ndarray:
    """Accumulated offsets O[i] = (i+1)*period - sum(iats[:i+1])."""
    iats = np.ascontiguousarray(iats, dtype=np.float64)
    c = np.cumsum(iats)
    idx = np.arange(1, iats.size + 1, dtype=np.float64)
    return idx * period - c
