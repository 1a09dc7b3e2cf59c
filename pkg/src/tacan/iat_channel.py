"""IAT-based covert channel: BPSK on inter-transmission times.

A 0 bit is sent as ``window`` consecutive ITTs of ``period + deviation``, a
1 bit as ``period - deviation``. The receiver takes the running average of
its IATs over the window length, finds the sampling phase tau* that
maximizes the summed distance from the decision threshold

    Gamma = period / (1 + skew)

and slices one sample per window; samples at or above Gamma decode as 0.

With IAT noise of standard deviation sigma (= sqrt(2) sigma_eta), the
averaged sample keeps the full +/- deviation/(1+skew) signal while its noise
shrinks to sigma/window (the window sum of IAT noises telescopes), giving

    P_e = Q(window * deviation / ((1 + skew) * sigma)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bits import Bits


@dataclass
class IatChannelConfig:
    period: float
    deviation: float
    window: int
    skew: float = 0.0

    def __post_init__(self) -> None:
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        if not 0.0 < self.deviation < self.period:
            raise ValueError("deviation must be in (0, period)")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.skew <= -1.0:
            raise ValueError("skew must be > -1")


def modulate(bits: Bits, cfg: IatChannelConfig) -> np.ndarray:
    """One bit -> ``window`` ITTs; 0 maps to period+deviation, 1 to period-deviation."""
    signs = 1.0 - 2.0 * np.asarray(bits.array, dtype=np.float64)  # 0 -> +1, 1 -> -1
    itts = cfg.period + signs * cfg.deviation
    return np.repeat(itts, cfg.window)


def running_average(iat_values: np.ndarray, window: int) -> np.ndarray:
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(iat_values, dtype=np.float64)
    if x.size < window:
        raise ValueError(f"need at least {window} IATs, got {x.size}")
    if window == 1:
        return x.copy()  # exact identity; the cumsum kernel would add dust
    return kernels.running_mean(x, window)


def decision_threshold(cfg: IatChannelConfig) -> float:
    return cfg.period / (1.0 + cfg.skew)


def find_sampling_offset(averages: np.ndarray, window: int, threshold: float) -> int:
    """Phase recovery: argmax over tau of sum_j |avg[j*window + tau] - threshold|.

    Ties break toward the smallest tau.
    """
    averages = np.asarray(averages, dtype=np.float64)
    if averages.size == 0:
        return 0
    scores = np.empty(window, dtype=np.float64)
    for tau in range(window):
        picks = averages[tau::window]
        scores[tau] = np.sum(np.abs(picks - threshold)) if picks.size else -np.inf
    return int(np.argmax(scores))


def demodulate(iat_values: np.ndarray, cfg: IatChannelConfig) -> Bits:
    """Recover the bit stream from receiver IATs.

    A trailing partial window decodes no bit. Samples exactly on the
    threshold decode as 0.
    """
    x = np.asarray(iat_values, dtype=np.float64)
    if x.size < cfg.window:
        return Bits()
    avg = running_average(x, cfg.window)
    gamma = decision_threshold(cfg)
    tau = find_sampling_offset(avg, cfg.window, gamma)
    samples = avg[tau :: cfg.window]
    return Bits(np.where(samples >= gamma, 0, 1).astype(np.uint8))


def q_function(x: float) -> float:
    """Standard normal tail probability Q(x) = P(Z > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_inverse(p: float, tol: float = 1e-10) -> float:
    """Inverse of q_function by bisection (monotone decreasing)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if q_function(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def analytic_ber(cfg: IatChannelConfig, sigma: float) -> float:
    """Predicted bit error rate for IAT noise of standard deviation sigma."""
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return 0.0
    return q_function(cfg.window * cfg.deviation / ((1.0 + cfg.skew) * sigma))


def min_window(deviation: float, skew: float, sigma: float, target_ber: float) -> int:
    """Smallest window meeting a BER target: max(1, ceil((1+S) sigma Qinv(eps)/deviation))."""
    if deviation <= 0.0:
        raise ValueError("deviation must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    if not 0.0 < target_ber < 1.0:
        raise ValueError("target BER must be in (0, 1)")
    if sigma == 0.0 or target_ber >= 0.5:
        return 1
    need = (1.0 + skew) * sigma * q_inverse(target_ber) / deviation
    return max(1, math.ceil(need))
