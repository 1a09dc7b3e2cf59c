from __future__ import annotations

import io

import pytest

from tacan import sched

US = 1e-6
MS = 1e-3
TAU = 2e-6  # 500 kbit/s bus


def _msg(msg_id, priority, size=8, period=10 * MS, deadline=None, jitter=0.0):
    return sched.MessageSpec(
        msg_id=msg_id,
        priority=priority,
        payload_bytes=size,
        period=period,
        deadline=period if deadline is None else deadline,
        jitter=jitter,
    )


# ---------------------------------------------------------------------------
# building blocks


def test_transmission_time_fixtures():
    assert sched.transmission_time(8, TAU) == pytest.approx(320 * US)
    assert sched.transmission_time(0, TAU) == pytest.approx(160 * US)


def test_transmission_time_linear_in_payload():
    times = [sched.transmission_time(s, TAU) for s in range(9)]
    steps = [b - a for a, b in zip(times, times[1:])]
    assert all(step == pytest.approx(20 * US) for step in steps)


def test_transmission_time_validation():
    with pytest.raises(ValueError):
        sched.transmission_time(9, TAU)
    with pytest.raises(ValueError):
        sched.transmission_time(-1, TAU)
    with pytest.raises(ValueError):
        sched.transmission_time(8, 0.0)


def test_message_spec_validation():
    with pytest.raises(ValueError):
        _msg(1, 1, size=9)
    with pytest.raises(ValueError):
        _msg(1, 1, period=0.0)
    with pytest.raises(ValueError):
        _msg(1, 1, deadline=-1.0)
    with pytest.raises(ValueError):
        _msg(1, 1, jitter=-1.0)


def test_bus_spec_rejects_duplicate_priorities():
    with pytest.raises(ValueError):
        sched.BusSpec(bit_time=TAU, messages=[_msg(1, 1), _msg(2, 1)])
    with pytest.raises(ValueError):
        sched.BusSpec(bit_time=0.0, messages=[])


def test_blocking_delay():
    bus = sched.BusSpec(
        bit_time=TAU, messages=[_msg(1, 1, size=0), _msg(2, 2, size=8), _msg(3, 3, size=4)]
    )
    # longest lower-priority frame: the 8-byte message below priority 1
    assert sched.blocking_delay(bus, 1) == pytest.approx(320 * US)
    assert sched.blocking_delay(bus, 2) == pytest.approx(240 * US)
    assert sched.blocking_delay(bus, 3) == 0.0
    with pytest.raises(KeyError):
        bus.message(9)


# ---------------------------------------------------------------------------
# classic response times


def test_lone_message_response_is_its_transmission_time():
    bus = sched.BusSpec(bit_time=TAU, messages=[_msg(1, 1)])
    report = sched.worst_case_response(bus, 1)
    assert report.response == pytest.approx(320 * US)
    assert report.blocking == 0.0
    assert report.iterations == 1
    assert report.schedulable


def test_two_message_hand_fixture():
    bus = sched.BusSpec(
        bit_time=TAU,
        messages=[_msg(0x10, 1, period=5 * MS), _msg(0x20, 2, period=10 * MS)],
    )
    report = sched.worst_case_response(bus, 2)
    # one higher-priority preemption: w = 320 us, R = 0 + 320 + 320
    assert report.queueing == pytest.approx(320 * US)
    assert report.response == pytest.approx(640 * US)
    assert report.schedulable


def test_missed_deadline_reports_unschedulable():
    bus = sched.BusSpec(bit_time=TAU, messages=[_msg(1, 1, deadline=100 * US)])
    report = sched.worst_case_response(bus, 1)
    assert not report.schedulable
    assert report.response > 100 * US


def test_overloaded_bus_terminates_via_deadline_cutoff():
    # utilization far above 1: the recurrence would grow forever without
    # the deadline escape hatch
    hogs = [_msg(i, i, period=1 * MS) for i in range(1, 5)]
    bus = sched.BusSpec(bit_time=TAU, messages=hogs + [_msg(9, 9, period=2 * MS)])
    report = sched.worst_case_response(bus, 9)
    assert not report.schedulable


def test_response_identity():
    bus = sched.BusSpec(
        bit_time=TAU,
        messages=[_msg(1, 1, period=5 * MS, jitter=50 * US), _msg(2, 2), _msg(3, 3)],
    )
    for prio in (1, 2, 3):
        r = sched.worst_case_response(bus, prio)
        assert r.response == pytest.approx(r.jitter + r.queueing + r.transmission, rel=1e-12)


# ---------------------------------------------------------------------------
# keying overhead


def _flat_bus(n_hp: int) -> sched.BusSpec:
    messages = [_msg(i, i, size=8, period=10 * MS) for i in range(1, n_hp + 1)]
    messages.append(_msg(0x7FF, n_hp + 1, size=8, period=10 * MS, deadline=1.0))
    return sched.BusSpec(bit_time=TAU, messages=messages)


def test_f_zero_is_bit_exact_classic():
    bus = _flat_bus(3)
    for prio in (1, 2, 3, 4):
        classic = sched.worst_case_response(bus, prio)
        adjusted = sched.tacan_adjusted_response(bus, prio, 0.0)
        assert adjusted == classic


def test_jitter_increase_is_f_times_period():
    bus = _flat_bus(2)
    classic = sched.worst_case_response(bus, 3)
    adjusted = sched.tacan_adjusted_response(bus, 3, 0.01)
    assert adjusted.jitter - classic.jitter == pytest.approx(100 * US, abs=1e-12)


def test_blocking_increase_forty_five_senders():
    bus = _flat_bus(45)
    target = 46
    classic = sched.worst_case_response(bus, target)
    adjusted = sched.tacan_adjusted_response(bus, target, 0.01)
    increase = adjusted.blocking - classic.blocking
    assert increase == pytest.approx(45 * (0.01 / 0.99) * 320 * US, rel=1e-9)
    assert increase == pytest.approx(145.45 * US, abs=1 * US)


def test_per_sender_transmission_inflation():
    bus = _flat_bus(1)
    classic = sched.worst_case_response(bus, 2)
    adjusted = sched.tacan_adjusted_response(bus, 2, 0.01)
    # one preemption each: queueing difference minus blocking difference
    # isolates the hp frame's inflated transmission time
    inflation = (adjusted.queueing - classic.queueing) - (adjusted.blocking - classic.blocking)
    assert inflation == pytest.approx(320 * US / 0.99 - 320 * US, rel=1e-9)
    assert inflation == pytest.approx(3.23 * US, abs=0.1 * US)


def test_deviation_fraction_validation():
    bus = _flat_bus(1)
    with pytest.raises(ValueError):
        sched.tacan_adjusted_response(bus, 1, 1.0)
    with pytest.raises(ValueError):
        sched.tacan_adjusted_response(bus, 1, -0.1)


def test_response_non_decreasing_in_f():
    bus = sched.BusSpec(
        bit_time=TAU,
        messages=[
            _msg(1, 1, period=5 * MS),
            _msg(2, 2, period=10 * MS, jitter=20 * US),
            _msg(3, 3, size=4, period=20 * MS, deadline=1.0),
        ],
    )
    for prio in (1, 2, 3):
        responses = [
            sched.tacan_adjusted_response(bus, prio, f).response
            for f in (0.0, 0.005, 0.01, 0.02, 0.05)
        ]
        assert all(b >= a - 1e-15 for a, b in zip(responses, responses[1:]))


# ---------------------------------------------------------------------------
# whole-bus verdicts


def test_empty_bus_is_schedulable():
    ok, reports = sched.bus_schedulable(sched.BusSpec(bit_time=TAU, messages=[]))
    assert ok and reports == []


def test_keying_can_break_schedulability():
    bus = sched.BusSpec(
        bit_time=TAU,
        messages=[_msg(1, 1, period=10 * MS), _msg(2, 2, period=10 * MS, deadline=700 * US)],
    )
    ok_plain, _ = sched.bus_schedulable(bus, 0.0)
    ok_keyed, reports = sched.bus_schedulable(bus, 0.2)
    assert ok_plain
    assert not ok_keyed
    assert [r.priority for r in reports] == [1, 2]


# ---------------------------------------------------------------------------
# file formats


BUS_CSV = """\
id,priority,bytes,period_ms,jitter_ms,deadline_ms
0x10,1,8,5,0.05,5
0x20,2,4,10,0,10
32,3,8,20,0,20
"""


def test_read_bus_csv():
    bus = sched.read_bus_csv(io.StringIO(BUS_CSV), bit_time=TAU)
    assert bus.bit_time == TAU
    assert [m.msg_id for m in bus.by_priority()] == [0x10, 0x20, 32]
    first = bus.message(1)
    assert first.period == pytest.approx(5 * MS)
    assert first.jitter == pytest.approx(50 * US)
    assert bus.message(2).payload_bytes == 4


def test_read_bus_csv_missing_column():
    bad = "id,priority,bytes,period_ms\n1,1,8,10\n"
    with pytest.raises(ValueError, match="jitter_ms"):
        sched.read_bus_csv(io.StringIO(bad), bit_time=TAU)


def test_write_report_csv_golden():
    bus = sched.BusSpec(bit_time=TAU, messages=[_msg(0x10, 1), _msg(0x20, 2)])
    _, reports = sched.bus_schedulable(bus)
    out = io.StringIO()
    sched.write_report_csv(reports, out)
    assert out.getvalue() == (
        "id,priority,transmission_us,blocking_us,queueing_us,jitter_us,response_us,schedulable\n"
        "0x10,1,320.000,320.000,320.000,0.000,640.000,1\n"
        "0x20,2,320.000,0.000,320.000,0.000,640.000,1\n"
    )
