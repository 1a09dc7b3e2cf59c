"""Offset-based covert channel: ternary signaling in accumulated offsets.

Instead of holding each ITT away from the period for a whole window (which
shows up in simple IAT statistics), a bit is shaped as a there-and-back
excursion of the *accumulated* offset

    O[i] = (i + 1) * period - sum(iats[: i + 1])

A 0 bit sends window/2 ITTs of period-deviation then window/2 of
period+deviation (offset rises to deviation*window/2 and returns); a 1 bit
is the mirror image; silence sends the plain period. The receiver works in
batches of frame_symbols * window IATs: it centers the batch at kappa =
(max O + min O) / 2, recovers the sampling phase as the argmax of summed
|O - kappa|, and slices one sample per window against the thresholds
kappa +/- deviation*window/4. Silence doubles as the inter-frame separator,
so a batch carries one silence-padded frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .bits import Bits

BIT0 = 0
BIT1 = 1
SILENCE = 2


@dataclass
class OffsetChannelConfig:
    period: float
    deviation: float
    window: int  # even: half the ITTs lean early, half late
    frame_symbols: int  # symbols per batch; batch size = frame_symbols * window
    skew: float = 0.0

    def __post_init__(self) -> None:
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        if not 0.0 < self.deviation < self.period:
            raise ValueError("deviation must be in (0, period)")
        if self.window < 2 or self.window % 2 != 0:
            raise ValueError("window must be even and >= 2")
        if self.frame_symbols < 1:
            raise ValueError("frame_symbols must be >= 1")
        if self.skew <= -1.0:
            raise ValueError("skew must be > -1")

    @property
    def batch_size(self) -> int:
        return self.frame_symbols * self.window


def modulate(symbols: np.ndarray, cfg: OffsetChannelConfig) -> np.ndarray:
    """Symbols -> ITTs, window per symbol."""
    symbols = np.asarray(symbols)
    half = cfg.window // 2
    early = cfg.period - cfg.deviation
    late = cfg.period + cfg.deviation
    chunks = {
        BIT0: np.concatenate([np.full(half, early), np.full(half, late)]),
        BIT1: np.concatenate([np.full(half, late), np.full(half, early)]),
        SILENCE: np.full(cfg.window, cfg.period),
    }
    out = np.empty(symbols.size * cfg.window, dtype=np.float64)
    for i, s in enumerate(symbols.tolist()):
        if s not in chunks:
            raise ValueError(f"symbol {s} is not 0, 1, or silence ({SILENCE})")
        out[i * cfg.window : (i + 1) * cfg.window] = chunks[s]
    return out


def batch_offsets(iat_values: np.ndarray, period: float) -> np.ndarray:
    """Accumulated offsets of one batch, measured against the nominal period."""
    return kernels.batch_offsets(np.asarray(iat_values, dtype=np.float64), period)


def _demodulate_batch(offsets: np.ndarray, cfg: OffsetChannelConfig) -> np.ndarray:
    lo = float(offsets.min())
    hi = float(offsets.max())
    symbols = np.full(cfg.frame_symbols, SILENCE, dtype=np.uint8)
    if hi == lo:
        return symbols  # flat batch: nothing keyed
    kappa = 0.5 * (hi + lo)
    scores = np.empty(cfg.window, dtype=np.float64)
    for tau in range(cfg.window):
        picks = offsets[tau :: cfg.window][: cfg.frame_symbols]
        scores[tau] = np.sum(np.abs(picks - kappa))
    tau = int(np.argmax(scores))
    half_band = cfg.deviation * cfg.window / 4.0 / (1.0 + cfg.skew)
    samples = offsets[tau :: cfg.window][: cfg.frame_symbols]
    symbols[samples > kappa + half_band] = BIT0
    symbols[samples < kappa - half_band] = BIT1
    return symbols


def demodulate(iat_values: np.ndarray, cfg: OffsetChannelConfig) -> np.ndarray:
    """Recover the symbol stream, one batch at a time.

    The IAT count must be a whole number of batches; each batch yields
    frame_symbols symbols.
    """
    x = np.asarray(iat_values, dtype=np.float64)
    batch = cfg.batch_size
    if x.size % batch != 0:
        raise ValueError(f"IAT count {x.size} is not a multiple of the batch size {batch}")
    out = []
    for k in range(x.size // batch):
        offsets = batch_offsets(x[k * batch : (k + 1) * batch], cfg.period)
        out.append(_demodulate_batch(offsets, cfg))
    if not out:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(out)


def frames_to_symbols(frames: list[Bits], cfg: OffsetChannelConfig) -> np.ndarray:
    """One batch per frame: the frame's bits, silence-padded to frame_symbols."""
    out = np.full(len(frames) * cfg.frame_symbols, SILENCE, dtype=np.uint8)
    for i, frame in enumerate(frames):
        if len(frame) > cfg.frame_symbols:
            raise ValueError(
                f"frame of {len(frame)} bits does not fit a {cfg.frame_symbols}-symbol batch"
            )
        out[i * cfg.frame_symbols : i * cfg.frame_symbols + len(frame)] = frame.array
    return out


def split_at_silence(symbols: np.ndarray) -> list[tuple[int, Bits]]:
    """Maximal silence-free runs as (start_index, bits)."""
    symbols = np.asarray(symbols)
    out: list[tuple[int, Bits]] = []
    start = None
    for i, s in enumerate(symbols.tolist()):
        if s == SILENCE:
            if start is not None:
                out.append((start, Bits(symbols[start:i])))
                start = None
        elif start is None:
            start = i
    if start is not None:
        out.append((start, Bits(symbols[start:])))
    return out
