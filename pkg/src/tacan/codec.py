"""Bit-level frame codec for covert-channel transport.

Frame layout on the wire::

    SOF (one 0) | data | CRC-8 | EOF (seven 1s)

The SOF+data+CRC region is bit-stuffed (an opposite bit after every run of
five identical bits); the EOF is sent raw. Idle periods are all-ones, so a
0 bit always marks a frame start.

Because the stuffed region may legitimately end with up to four 1 bits that
merge with the EOF run, the end of a frame is not recoverable from the run
structure alone. ``decode_frame`` therefore tries every plausible EOF
position (each window of seven 1s), validates the prefix by destuffing and
CRC, and keeps the last candidate that checks out. Candidates past the true
EOF always contain a six-run and fail destuffing, so a well-formed frame is
recovered exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .bits import Bits

SOF_BITS = 1
CRC_BITS = 8
EOF_BITS = 7
MAX_DATA_BITS = 2048

# destuffed region = SOF + at least one data bit + CRC
_MIN_REGION = SOF_BITS + 1 + CRC_BITS


class FrameError(ValueError):
    """Base class for frame decode failures."""


class CrcMismatch(FrameError):
    pass


class StuffingViolation(FrameError):
    pass


class MissingEof(FrameError):
    pass


def crc8(data: bytes | bytearray) -> int:
    """CRC-8, SAE-J1850 profile: poly 0x1D, init 0xFF, MSB first, xor-out 0xFF."""
    return kernels.crc8(data)


def crc8_bits(data: Bits) -> int:
    """CRC-8 of a bit string, packed MSB first with zero padding on the right."""
    return kernels.crc8(data.to_bytes())


def stuff(data: Bits) -> Bits:
    return Bits(kernels.stuff_bits(data.array))


def destuff(data: Bits) -> Bits:
    payload, violation = kernels.destuff_bits(data.array)
    if violation >= 0:
        raise StuffingViolation(f"six identical bits at stuffed index {violation}")
    return Bits(payload)


def worst_case_frame_len(n_f: int) -> int:
    """Maximum stuffed length of a frame whose unstuffed length is ``n_f``.

    Only SOF+data+CRC is stuffable, so at most one stuff bit per four bits
    beyond the first of that region: n_f + floor((n_f - 8) / 4).
    """
    if n_f < SOF_BITS + EOF_BITS:
        raise ValueError(f"n_f must be at least {SOF_BITS + EOF_BITS}")
    return n_f + (n_f - SOF_BITS - EOF_BITS) // 4


def encode_frame(message: Bits) -> Bits:
    """Frame a message: stuff(SOF | message | CRC-8(message)) | EOF."""
    if not 1 <= len(message) <= MAX_DATA_BITS:
        raise ValueError(f"message length {len(message)} outside [1, {MAX_DATA_BITS}]")
    region = Bits([0]) + message + Bits.from_int(crc8_bits(message), CRC_BITS)
    return stuff(region) + Bits.ones(EOF_BITS)


@dataclass
class FrameScan:
    """One decode attempt from a stream scan."""

    offset: int  # bit index of the SOF that started the attempt
    end: int  # first bit index after the consumed frame (resume point)
    data: Bits | None
    error: FrameError | None

    @property
    def ok(self) -> bool:
        return self.error is None


def _eof_windows(a: np.ndarray) -> np.ndarray:
    """Boolean array: w[i] is True when a[i:i+7] is all ones."""
    if a.size < EOF_BITS:
        return np.zeros(0, dtype=bool)
    windows = np.lib.stride_tricks.sliding_window_view(a, EOF_BITS)
    return windows.min(axis=1) == 1


def _decode_at(a: np.ndarray, start: int, eof_ok: np.ndarray) -> tuple[int, Bits]:
    """Decode the frame whose SOF sits at ``start``; return (end, data)."""
    best: tuple[int, Bits] | None = None
    saw_candidate = False
    saw_violation = False
    saw_crc_fail = False
    e = start + 1
    while e < eof_ok.size:
        if not eof_ok[e]:
            e += 1
            continue
        saw_candidate = True
        payload, violation = kernels.destuff_bits(a[start:e])
        if violation >= 0:
            # Every later candidate contains this six-run too.
            saw_violation = True
            break
        if payload.size >= _MIN_REGION:
            data = Bits(payload[SOF_BITS:-CRC_BITS])
            if crc8_bits(data) == Bits(payload[-CRC_BITS:]).to_int():
                best = (e + EOF_BITS, data)
            else:
                saw_crc_fail = True
        e += 1
    if best is not None:
        return best
    if saw_crc_fail:
        raise CrcMismatch(f"no candidate frame end with a valid CRC after bit {start}")
    if saw_violation:
        raise StuffingViolation(f"six identical bits inside the frame at bit {start}")
    if saw_candidate:
        raise MissingEof(f"frame at bit {start} too short for counter and CRC")
    raise MissingEof(f"no EOF terminator after SOF at bit {start}")


def decode_frame(frame: Bits) -> Bits:
    """Decode one frame that begins at bit 0; trailing bits are ignored."""
    a = frame.array
    if a.size == 0 or a[0] != 0:
        raise MissingEof("frame does not begin with a SOF (0) bit")
    _, data = _decode_at(a, 0, _eof_windows(a))
    return data


def scan_stream(stream: Bits) -> list[FrameScan]:
    """Walk a bit stream, decoding every frame found.

    Idle 1 bits are skipped; each 0 starts a decode attempt. A failed
    attempt is recorded and the scan resumes at the bit after its SOF, so
    one corrupt frame never hides the rest of the stream.
    """
    a = stream.array
    eof_ok = _eof_windows(a)
    results: list[FrameScan] = []
    i = 0
    n = a.size
    while i < n:
        if a[i] == 1:
            i += 1
            continue
        try:
            end, data = _decode_at(a, i, eof_ok)
        except FrameError as exc:
            results.append(FrameScan(offset=i, end=i + 1, data=None, error=exc))
            i += 1
        else:
            results.append(FrameScan(offset=i, end=end, data=data, error=None))
            i = end
    return results
