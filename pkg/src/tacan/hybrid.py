"""Hybrid channel: split each message across the IAT and LSB channels.

Both halves are framed independently (SOF/CRC/EOF per part), so the
receiver never needs to know the split point: each part is self-delimiting.
The per-message latency is set by the slower part, so the splitting ratio
balances the two transmit durations: with an IAT window of l1 the first
part needs (bits + overhead) * l1 message periods, while the LSB side moves
l2 bits per period and needs ceil((bits + overhead) / l2).

Equating the two nominal durations gives the fraction sent over IATs:

    alpha = (n_m + n_o * (1 - l1*l2)) / (n_m * (1 + l1*l2)),  clamped to [0, 1]

Stuffing makes actual frame lengths data dependent, so the nominal split is
refined per message with a +/-1-bit local search on the measured slot gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import codec
from .bits import Bits


@dataclass
class HybridConfig:
    iat_window: int  # l1
    lsb_bits: int  # l2
    message_bits: int  # n_m
    overhead_bits: int = codec.SOF_BITS + codec.CRC_BITS + codec.EOF_BITS

    def __post_init__(self) -> None:
        if self.iat_window < 1:
            raise ValueError("iat_window must be >= 1")
        if not 1 <= self.lsb_bits <= 8:
            raise ValueError("lsb_bits must be in [1, 8]")
        if self.message_bits < 1:
            raise ValueError("message_bits must be >= 1")
        if self.overhead_bits < 0:
            raise ValueError("overhead_bits must be >= 0")


def splitting_ratio(cfg: HybridConfig) -> float:
    """Duration-balancing fraction of each message sent on the IAT side."""
    product = cfg.iat_window * cfg.lsb_bits
    alpha = (cfg.message_bits + cfg.overhead_bits * (1 - product)) / (
        cfg.message_bits * (1 + product)
    )
    return min(1.0, max(0.0, alpha))


def split_message(message: Bits, alpha: float) -> tuple[Bits, Bits]:
    """First ceil(alpha * n) bits to the IAT side, the rest to the LSB side."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    cut = math.ceil(alpha * len(message))
    return message[:cut], message[cut:]


def reassemble(iat_part: Bits, lsb_part: Bits) -> Bits:
    """Inverse of split_message; both parts must have decoded cleanly."""
    return iat_part + lsb_part


def part_slots(message: Bits, cut: int, cfg: HybridConfig) -> tuple[int, int]:
    """Message periods each side occupies when splitting at ``cut`` bits.

    An empty part occupies zero slots (nothing is framed for it).
    """
    n1 = len(codec.encode_frame(message[:cut])) if cut > 0 else 0
    rest = len(message) - cut
    n2 = len(codec.encode_frame(message[cut:])) if rest > 0 else 0
    slots_iat = n1 * cfg.iat_window
    slots_lsb = -(-n2 // cfg.lsb_bits) if n2 else 0
    return slots_iat, slots_lsb


def refine_split(message: Bits, cfg: HybridConfig, max_iter: int = 16) -> int:
    """Per-message split point: local +/-1-bit search from the nominal cut.

    Minimizes the absolute slot gap between the two framed parts. When the
    nominal ratio is 0 (or 1) the whole message belongs to one side and no
    search runs.
    """
    n = len(message)
    alpha = splitting_ratio(cfg)
    cut = math.ceil(alpha * n)
    if cut <= 0:
        return 0
    if cut >= n:
        return n
    cut = min(max(cut, 1), n - 1)

    def gap(k: int) -> int:
        a, b = part_slots(message, k, cfg)
        return abs(a - b)

    best = gap(cut)
    for _ in range(max_iter):
        moved = False
        for candidate in (cut - 1, cut + 1):
            if 1 <= candidate <= n - 1 and gap(candidate) < best:
                cut = candidate
                best = gap(candidate)
                moved = True
                break
        if not moved:
            break
    return cut


def hybrid_duration(cfg: HybridConfig, period: float) -> float:
    """Nominal (pre-stuffing) per-message duration at the balanced split."""
    if period <= 0.0:
        raise ValueError("period must be positive")
    alpha = splitting_ratio(cfg)
    n_iat = math.ceil(alpha * cfg.message_bits)
    n_lsb = math.ceil((1.0 - alpha) * cfg.message_bits)
    slots_iat = (n_iat + cfg.overhead_bits) * cfg.iat_window if n_iat else 0
    slots_lsb = -(-(n_lsb + cfg.overhead_bits) // cfg.lsb_bits) if n_lsb else 0
    return period * max(slots_iat, slots_lsb)


def measured_duration(message: Bits, cfg: HybridConfig, period: float, cut: int) -> float:
    """Actual per-message duration for a given split, stuffing included."""
    slots_iat, slots_lsb = part_slots(message, cut, cfg)
    return period * max(slots_iat, slots_lsb)
