"""Attack transformations on timing traces, and the monitor-side detector.

Attacks are modeled at the trace level: suspension truncates the arrival
stream, injection merges a second stream, masquerade is suspension followed
by injection of the attacker's own transmissions. Forgery and replay act on
the frame content instead and are built from the auth primitives.

The detector counts consecutive authentication failures and raises an
alarm whenever the count reaches the threshold K; any success resets it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bits import Bits
from .timing import TimingTrace

OK = "ok"
RECEPTION_FAILURE = "reception_failure"
VERIFICATION_FAILURE = "verification_failure"

_KINDS = (OK, RECEPTION_FAILURE, VERIFICATION_FAILURE)


@dataclass
class AuthResult:
    """Outcome of one expected authentication frame at the monitor."""

    kind: str
    detail: str = ""

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")

    @property
    def ok(self) -> bool:
        return self.kind == OK


@dataclass
class DetectorState:
    k_threshold: int
    consecutive_failures: int = 0
    alarms: list[tuple[int, str]] = field(default_factory=list)
    _step: int = 0

    def __post_init__(self) -> None:
        if self.k_threshold < 1:
            raise ValueError("k_threshold must be >= 1")


def monitor_step(state: DetectorState, result: AuthResult) -> tuple[DetectorState, bool]:
    """Advance the detector by one frame outcome; returns (state, alarm)."""
    index = state._step
    state._step += 1
    if result.ok:
        state.consecutive_failures = 0
        return state, False
    state.consecutive_failures += 1
    alarm = state.consecutive_failures >= state.k_threshold
    if alarm:
        state.alarms.append((index, result.kind))
    return state, alarm


def run_detector(results: Iterable[AuthResult], k_threshold: int) -> DetectorState:
    state = DetectorState(k_threshold=k_threshold)
    for result in results:
        monitor_step(state, result)
    return state


def apply_suspension(trace: TimingTrace, t_start: float) -> TimingTrace:
    """Silence the transmitter from t_start on: later arrivals are removed."""
    if t_start < 0.0:
        raise ValueError("t_start must be >= 0")
    keep = trace.arrivals < t_start
    payloads = None
    if trace.payloads is not None:
        payloads = [p for p, k in zip(trace.payloads, keep) if k]
    return TimingTrace(
        msg_id=trace.msg_id,
        arrivals=trace.arrivals[keep],
        nominal_period=trace.nominal_period,
        payloads=payloads,
    )


def apply_injection(trace: TimingTrace, injected: TimingTrace) -> TimingTrace:
    """Merge a fabricated stream into a trace (same message ID)."""
    if trace.msg_id != injected.msg_id:
        raise ValueError("injected stream must use the same message id")
    arrivals = np.concatenate([trace.arrivals, injected.arrivals])
    order = np.argsort(arrivals, kind="stable")
    payloads = None
    if trace.payloads is not None or injected.payloads is not None:
        combined = list(trace.payloads or [b""] * len(trace)) + list(
            injected.payloads or [b""] * len(injected)
        )
        payloads = [combined[i] for i in order.tolist()]
    return TimingTrace(
        msg_id=trace.msg_id,
        arrivals=arrivals[order],
        nominal_period=trace.nominal_period,
        payloads=payloads,
    )


def apply_masquerade(target: TimingTrace, t_start: float, forged: TimingTrace) -> TimingTrace:
    """Suspend the real transmitter and put the attacker's stream in its place."""
    return apply_injection(apply_suspension(target, t_start), forged)


def forge_auth_stream(
    n_frames: int, m: int, seed: int, counter_bits: int = 24
) -> list[Bits]:
    """Messages with the correct counter progression but random digests.

    This is the strongest forger without the key: it observes the bus, so
    counters line up, and it guesses each m-bit digest uniformly.
    """
    if n_frames < 0:
        raise ValueError("n_frames must be >= 0")
    if m < 1:
        raise ValueError("digest width must be >= 1")
    rng = np.random.default_rng(seed)
    n_bytes = (m + 7) // 8
    out = []
    for counter in range(1, n_frames + 1):
        raw = rng.integers(0, 256, size=n_bytes, dtype=np.uint8).tobytes()
        guess = int.from_bytes(raw, "big") & ((1 << m) - 1)
        out.append(Bits.from_int(counter, counter_bits) + Bits.from_int(guess, m))
    return out


def evaluate_rates(
    runs: Sequence[tuple[bool, Sequence[AuthResult]]], k_threshold: int
) -> tuple[float, float]:
    """(P_FA, P_D) over labeled runs.

    P_FA is the fraction of attack-free runs with at least one alarm; P_D
    the fraction of attack runs with at least one alarm. A rate with no
    runs of its label is reported as 0.
    """
    if not runs:
        raise ValueError("no runs to evaluate")
    fa_runs = fa_alarmed = d_runs = d_alarmed = 0
    for attack_present, results in runs:
        state = run_detector(results, k_threshold)
        alarmed = bool(state.alarms)
        if attack_present:
            d_runs += 1
            d_alarmed += int(alarmed)
        else:
            fa_runs += 1
            fa_alarmed += int(alarmed)
    p_fa = fa_alarmed / fa_runs if fa_runs else 0.0
    p_d = d_alarmed / d_runs if d_runs else 0.0
    return p_fa, p_d
