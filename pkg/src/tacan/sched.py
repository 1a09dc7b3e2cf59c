"""Fixed-priority CAN response-time analysis, with covert-channel overhead.

Classic analysis: a frame with s_k payload bytes occupies C_k =
(80 + 10 s_k) tau_bit on the wire (worst-case stuffing included). Priority
k suffers blocking B_k from the longest lower-priority frame and
interference from higher priorities via the fixed point

    w <- B_k + sum_{i in hp(k)} ceil((w + J_i + tau_bit) / T_i) C_i

with response time R_k = J_k + w + C_k, unschedulable when that exceeds
the deadline.

Keying ITTs away from the period by a fraction f of T adds, for the
analysis: release jitter f*T_k on the message itself; extra blocking
(f/(1-f)) C_i summed over higher priorities; and inflated interference
C_i / (1 - f) for higher-priority senders (their effective period shrinks
to (1-f) T_i in the worst case). The message's own transmission time is
unchanged. f = 0 reduces bit-exactly to the classic analysis.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO

_MAX_ITERATIONS = 100_000


@dataclass
class MessageSpec:
    msg_id: int
    priority: int  # smaller number = higher priority, unique per bus
    payload_bytes: int
    period: float
    deadline: float
    jitter: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.payload_bytes <= 8:
            raise ValueError("payload must be 0..8 bytes")
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        if self.deadline <= 0.0:
            raise ValueError("deadline must be positive")
        if self.jitter < 0.0:
            raise ValueError("jitter must be >= 0")


@dataclass
class BusSpec:
    bit_time: float
    messages: list[MessageSpec]

    def __post_init__(self) -> None:
        if self.bit_time <= 0.0:
            raise ValueError("bit time must be positive")
        priorities = [m.priority for m in self.messages]
        if len(set(priorities)) != len(priorities):
            raise ValueError("priorities must be unique")

    def by_priority(self) -> list[MessageSpec]:
        return sorted(self.messages, key=lambda m: m.priority)

    def message(self, priority: int) -> MessageSpec:
        for m in self.messages:
            if m.priority == priority:
                return m
        raise KeyError(f"no message with priority {priority}")


@dataclass
class ResponseReport:
    msg_id: int
    priority: int
    transmission: float
    blocking: float
    queueing: float  # converged w (blocking + interference)
    response: float
    jitter: float
    schedulable: bool
    iterations: int


def transmission_time(payload_bytes: int, bit_time: float) -> float:
    """Worst-case frame time: (80 + 10 * payload_bytes) bit times."""
    if not 0 <= payload_bytes <= 8:
        raise ValueError("payload must be 0..8 bytes")
    if bit_time <= 0.0:
        raise ValueError("bit time must be positive")
    return (80 + 10 * payload_bytes) * bit_time


def blocking_delay(bus: BusSpec, priority: int) -> float:
    """Longest lower-priority frame already on the wire; 0 if none."""
    times = [
        transmission_time(m.payload_bytes, bus.bit_time)
        for m in bus.messages
        if m.priority > priority
    ]
    return max(times, default=0.0)


def _response(
    bus: BusSpec,
    priority: int,
    *,
    deviation_frac: float = 0.0,
) -> ResponseReport:
    if not 0.0 <= deviation_frac < 1.0:
        raise ValueError("deviation fraction must be in [0, 1)")
    f = deviation_frac
    me = bus.message(priority)
    hp = [m for m in bus.messages if m.priority < priority]
    c_me = transmission_time(me.payload_bytes, bus.bit_time)
    c_hp = [transmission_time(m.payload_bytes, bus.bit_time) for m in hp]

    blocking = blocking_delay(bus, priority)
    if f > 0.0:
        blocking = blocking + (f / (1.0 - f)) * sum(c_hp)
        c_hp = [c / (1.0 - f) for c in c_hp]
    jitter = me.jitter + f * me.period

    w = blocking
    iterations = 0
    while True:
        iterations += 1
        if iterations > _MAX_ITERATIONS:
            raise RuntimeError(f"response-time recurrence for priority {priority} diverged")
        interference = 0.0
        for m, c in zip(hp, c_hp):
            interference += math.ceil((w + m.jitter + bus.bit_time) / m.period) * c
        w_next = blocking + interference
        response = jitter + w_next + c_me
        if response > me.deadline:
            return ResponseReport(
                msg_id=me.msg_id,
                priority=priority,
                transmission=c_me,
                blocking=blocking,
                queueing=w_next,
                response=response,
                jitter=jitter,
                schedulable=False,
                iterations=iterations,
            )
        if w_next == w:
            return ResponseReport(
                msg_id=me.msg_id,
                priority=priority,
                transmission=c_me,
                blocking=blocking,
                queueing=w_next,
                response=response,
                jitter=jitter,
                schedulable=True,
                iterations=iterations,
            )
        w = w_next


def worst_case_response(bus: BusSpec, priority: int) -> ResponseReport:
    """Classic worst-case response time for one priority."""
    return _response(bus, priority)


def tacan_adjusted_response(bus: BusSpec, priority: int, deviation_frac: float) -> ResponseReport:
    """Response time when every sender keys its ITTs by up to f*T."""
    return _response(bus, priority, deviation_frac=deviation_frac)


def bus_schedulable(bus: BusSpec, deviation_frac: float = 0.0) -> tuple[bool, list[ResponseReport]]:
    """Analyze every message; the bus is schedulable iff all of them are."""
    reports = [
        _response(bus, m.priority, deviation_frac=deviation_frac) for m in bus.by_priority()
    ]
    return all(r.schedulable for r in reports), reports


_BUS_COLUMNS = ["id", "priority", "bytes", "period_ms", "jitter_ms", "deadline_ms"]


def read_bus_csv(fobj: IO[str], bit_time: float) -> BusSpec:
    """Bus description: one row per message with the columns
    id,priority,bytes,period_ms,jitter_ms,deadline_ms (ids may be hex)."""
    reader = csv.DictReader(fobj)
    missing = [c for c in _BUS_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"bus file missing columns: {', '.join(missing)}")
    messages = []
    for row in reader:
        messages.append(
            MessageSpec(
                msg_id=int(row["id"], 0),
                priority=int(row["priority"]),
                payload_bytes=int(row["bytes"]),
                period=float(row["period_ms"]) * 1e-3,
                jitter=float(row["jitter_ms"]) * 1e-3,
                deadline=float(row["deadline_ms"]) * 1e-3,
            )
        )
    return BusSpec(bit_time=bit_time, messages=messages)


def write_report_csv(reports: list[ResponseReport], fobj: IO[str]) -> None:
    fobj.write(
        "id,priority,transmission_us,blocking_us,queueing_us,jitter_us,response_us,schedulable\n"
    )
    for r in reports:
        fobj.write(
            f"{r.msg_id:#x},{r.priority},{r.transmission * 1e6:.3f},{r.blocking * 1e6:.3f},"
            f"{r.queueing * 1e6:.3f},{r.jitter * 1e6:.3f},{r.response * 1e6:.3f},"
            f"{int(r.schedulable)}\n"
        )
