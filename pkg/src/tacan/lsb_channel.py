"""LSB-based covert channel: frames ride in payload least-significant bits.

Each carrier message donates the ``l`` low bits of one byte (index
``beta``). Frame bits fill those bits most-significant-first: stream bit
i*l lands in bit position l-1. Idle gaps are all-ones, so extraction can
hand the gathered bit stream straight to the frame scanner. The channel
itself is noise free; decode errors only appear under injected corruption.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import codec
from .bits import Bits

PayloadStream = list[bytes]


@dataclass
class LsbChannelConfig:
    lsb_count: int  # bits donated per message
    byte_index: int  # target byte within the payload (0-based)

    def __post_init__(self) -> None:
        if not 1 <= self.lsb_count <= 8:
            raise ValueError("lsb_count must be in [1, 8]")
        if self.byte_index < 0:
            raise ValueError("byte_index must be >= 0")


def _check_carriers(payloads: PayloadStream, cfg: LsbChannelConfig) -> None:
    for i, p in enumerate(payloads):
        if len(p) <= cfg.byte_index:
            raise ValueError(
                f"carrier {i} has {len(p)} bytes, byte index {cfg.byte_index} out of range"
            )


def messages_needed(n_bits: int, cfg: LsbChannelConfig) -> int:
    return -(-n_bits // cfg.lsb_count)


def embed(frame_bits: Bits, payloads: PayloadStream, cfg: LsbChannelConfig) -> PayloadStream:
    """Write a frame into the low bits of consecutive carrier payloads.

    The final group is padded with idle 1s when the frame length is not a
    multiple of lsb_count; carriers beyond the frame are left untouched, and
    a carrier whose low bits already match is passed through unchanged.
    """
    _check_carriers(payloads, cfg)
    needed = messages_needed(len(frame_bits), cfg)
    if len(payloads) < needed:
        raise ValueError(f"need {needed} carrier messages, got {len(payloads)}")
    l = cfg.lsb_count
    mask = (1 << l) - 1
    padded = frame_bits + Bits.ones(needed * l - len(frame_bits))
    out: PayloadStream = []
    for i, carrier in enumerate(payloads):
        if i >= needed:
            out.append(carrier)
            continue
        group = padded[i * l : (i + 1) * l].to_int()
        old = carrier[cfg.byte_index]
        new = (old & ~mask & 0xFF) | group
        if new == old:
            out.append(carrier)
        else:
            modified = bytearray(carrier)
            modified[cfg.byte_index] = new
            out.append(bytes(modified))
    return out


def gather_bits(payloads: PayloadStream, cfg: LsbChannelConfig) -> Bits:
    """Concatenate the donated low bits of every payload, MSB first per group."""
    _check_carriers(payloads, cfg)
    l = cfg.lsb_count
    out = []
    for p in payloads:
        group = p[cfg.byte_index] & ((1 << l) - 1)
        out.extend((group >> (l - 1 - k)) & 1 for k in range(l))
    return Bits(out)


def extract(payloads: PayloadStream, cfg: LsbChannelConfig) -> list[codec.FrameScan]:
    """Recover every embedded frame from a carrier stream.

    Scan results carry bit offsets into the gathered stream; divide by
    lsb_count for the carrier message index.
    """
    return codec.scan_stream(gather_bits(payloads, cfg))


def max_accuracy_error(lsb_count: int, resolution: float) -> float:
    """Worst-case signal deviation: (2^l - 1) quantization steps."""
    if not 1 <= lsb_count <= 8:
        raise ValueError("lsb_count must be in [1, 8]")
    return float((1 << lsb_count) - 1) * resolution


def measure_accuracy_loss(
    original: PayloadStream,
    modified: PayloadStream,
    byte_index: int,
    resolution: float,
) -> float:
    """Largest embedding-induced deviation of the carrier signal."""
    if len(original) != len(modified):
        raise ValueError("payload streams differ in length")
    worst = 0
    for before, after in zip(original, modified):
        if len(before) <= byte_index or len(after) <= byte_index:
            raise ValueError(f"byte index {byte_index} out of range")
        worst = max(worst, abs(after[byte_index] - before[byte_index]))
    return worst * resolution
