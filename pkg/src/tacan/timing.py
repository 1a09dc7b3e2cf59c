"""Clock model, arrival simulation, IAT statistics, and trace ingestion.

A transmitter emits at true times t_i; a receiver with relative skew S and
jittery timestamping records

    a_i = t_i / (1 + S) + eta_i,    eta_i ~ N(d, sigma_eta^2) i.i.d.

so inter-arrival times are Delta a_i = Delta t_i / (1 + S) + (eta_i -
eta_{i-1}). For a periodic transmitter the IATs have mean T / (1 + S) and
variance 2 sigma_eta^2; consecutive IAT noises share one eta term, giving
lag-1 autocovariance -sigma_eta^2.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np


@dataclass
class ClockModel:
    """Receiver-relative clock: skew, timestamp noise, fixed delay, RNG seed.

    noise_dist selects the timestamp-noise shape. The default is gaussian;
    "laplace" (matched to the same standard deviation) exists only for
    robustness experiments and is never used by the shipped tables.
    """

    skew: float = 0.0
    noise_sigma: float = 0.0
    mean_delay: float = 0.0
    seed: int = 0
    noise_dist: str = "gaussian"

    def __post_init__(self) -> None:
        if self.skew <= -1.0:
            raise ValueError("skew must be > -1")
        if self.noise_sigma < 0.0:
            raise ValueError("noise sigma must be >= 0")
        if self.noise_dist not in ("gaussian", "laplace"):
            raise ValueError(f"unknown noise distribution {self.noise_dist!r}")


@dataclass
class TimingTrace:
    """Timestamped arrivals of one message ID, optionally with payloads."""

    msg_id: int
    arrivals: np.ndarray
    nominal_period: float | None = None
    payloads: list[bytes] | None = None

    def __post_init__(self) -> None:
        self.arrivals = np.asarray(self.arrivals, dtype=np.float64)
        if self.payloads is not None and len(self.payloads) != self.arrivals.size:
            raise ValueError("one payload per arrival required")

    def __len__(self) -> int:
        return int(self.arrivals.size)


@dataclass
class IatStats:
    mean: float
    sigma: float
    n_used: int


def make_periodic_itts(period: float, count: int) -> np.ndarray:
    """Inter-transmission times of an unmodulated periodic sender."""
    if period <= 0.0:
        raise ValueError("period must be positive")
    if count < 0:
        raise ValueError("count must be >= 0")
    return np.full(count, period, dtype=np.float64)


def simulate_arrivals(
    itts: np.ndarray, clock: ClockModel, msg_id: int = 0, start_time: float = 0.0
) -> TimingTrace:
    """Turn inter-transmission times into receiver timestamps.

    n ITTs produce n+1 arrivals (the initial transmission plus one per
    interval); arrival 0 carries only the timestamping noise.
    """
    itts = np.asarray(itts, dtype=np.float64)
    rng = np.random.default_rng(clock.seed)
    t = np.empty(itts.size + 1, dtype=np.float64)
    t[0] = 0.0
    np.cumsum(itts, out=t[1:])
    if clock.noise_dist == "laplace":
        # scale b = sigma / sqrt(2) keeps noise_sigma the standard deviation
        eta = rng.laplace(clock.mean_delay, clock.noise_sigma / np.sqrt(2.0), size=t.size)
    else:
        eta = rng.normal(clock.mean_delay, clock.noise_sigma, size=t.size)
    arrivals = start_time + t / (1.0 + clock.skew) + eta
    return TimingTrace(msg_id=msg_id, arrivals=arrivals)


def iats(trace: TimingTrace) -> np.ndarray:
    """First differences of the arrival timestamps."""
    if len(trace) < 2:
        raise ValueError("need at least two arrivals to form IATs")
    return np.diff(trace.arrivals)


def robust_sigma(iat_values: np.ndarray, period: float) -> IatStats:
    """Mean and standard deviation of the IATs within +/-20% of the period.

    Arbitration outliers (queueing stalls, merged slots) fall outside the
    window and are excluded, matching how per-message jitter is profiled.
    """
    if period <= 0.0:
        raise ValueError("period must be positive")
    x = np.asarray(iat_values, dtype=np.float64)
    kept = x[(x >= 0.8 * period) & (x <= 1.2 * period)]
    if kept.size == 0:
        raise ValueError("no IATs within 20% of the nominal period")
    mean = float(np.mean(kept))
    if kept.size > 1 and np.ptp(kept) > 0.0:
        sigma = float(np.std(kept, ddof=1))
    else:
        sigma = 0.0  # identical samples must not report rounding dust
    return IatStats(mean=mean, sigma=sigma, n_used=int(kept.size))


_CANDUMP_RE = re.compile(
    r"^\((?P<stamp>\d+(?:\.\d+)?)\)\s+(?P<iface>\S+)\s+"
    r"(?P<id>[0-9A-Fa-f]{1,8})#(?P<data>(?:[0-9A-Fa-f]{2})*)\s*$"
)


@dataclass
class CandumpLog:
    traces: dict[int, TimingTrace]
    errors: list[tuple[int, str]]


def parse_candump(lines: Iterable[str]) -> CandumpLog:
    """Parse candump -L style logs: ``(stamp) iface ID#HEXDATA`` per line.

    Records are grouped by message ID into per-ID traces (arrival order
    preserved); malformed lines are collected as (line_number, text) and
    never abort the parse.
    """
    stamps: dict[int, list[float]] = {}
    payloads: dict[int, list[bytes]] = {}
    errors: list[tuple[int, str]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        m = _CANDUMP_RE.match(line)
        if m is None:
            errors.append((lineno, line))
            continue
        msg_id = int(m.group("id"), 16)
        stamps.setdefault(msg_id, []).append(float(m.group("stamp")))
        payloads.setdefault(msg_id, []).append(bytes.fromhex(m.group("data")))
    traces = {
        msg_id: TimingTrace(
            msg_id=msg_id,
            arrivals=np.asarray(vals, dtype=np.float64),
            payloads=payloads[msg_id],
        )
        for msg_id, vals in stamps.items()
    }
    return CandumpLog(traces=traces, errors=errors)


def write_trace_csv(trace: TimingTrace, fobj: IO[str]) -> None:
    """Two-column export: index, timestamp in seconds."""
    fobj.write("index,timestamp_seconds\n")
    for i, a in enumerate(trace.arrivals.tolist()):
        fobj.write(f"{i},{a!r}\n")
