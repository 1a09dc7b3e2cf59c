from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tacan import codec, hybrid
from tacan.bits import Bits


def _cfg(l1: int = 1, l2: int = 1, n_m: int = 32, n_o: int = 16) -> hybrid.HybridConfig:
    return hybrid.HybridConfig(iat_window=l1, lsb_bits=l2, message_bits=n_m, overhead_bits=n_o)


# ---------------------------------------------------------------------------
# configuration


def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(l1=0)
    with pytest.raises(ValueError):
        _cfg(l2=0)
    with pytest.raises(ValueError):
        _cfg(l2=9)
    with pytest.raises(ValueError):
        _cfg(n_m=0)
    with pytest.raises(ValueError):
        hybrid.HybridConfig(iat_window=1, lsb_bits=1, message_bits=8, overhead_bits=-1)


def test_default_overhead_matches_frame_framing():
    assert hybrid.HybridConfig(iat_window=1, lsb_bits=1, message_bits=32).overhead_bits == 16


# ---------------------------------------------------------------------------
# splitting ratio


def test_splitting_ratio_fixtures():
    assert hybrid.splitting_ratio(_cfg(1, 1)) == pytest.approx(0.5, abs=1e-12)
    assert hybrid.splitting_ratio(_cfg(2, 1)) == pytest.approx(1.0 / 6.0, abs=1e-12)
    assert hybrid.splitting_ratio(_cfg(2, 1)) == pytest.approx(0.167, abs=1e-3)
    assert hybrid.splitting_ratio(_cfg(3, 1)) == 0.0


def test_splitting_ratio_clamps_high():
    # tiny l1*l2 with heavy overhead pushes the raw ratio above 1
    cfg = hybrid.HybridConfig(iat_window=1, lsb_bits=1, message_bits=4, overhead_bits=0)
    assert 0.0 <= hybrid.splitting_ratio(cfg) <= 1.0


def test_splitting_ratio_shrinks_with_faster_iat_side():
    ratios = [hybrid.splitting_ratio(_cfg(l1, 1)) for l1 in (1, 2, 3)]
    assert ratios[0] > ratios[1] > ratios[2] == 0.0


# ---------------------------------------------------------------------------
# split and reassemble


def test_split_fixtures():
    message = Bits.from_int(0xDEADBEEF, 32)
    empty_first, whole = hybrid.split_message(message, 0.0)
    assert empty_first == Bits() and whole == message
    first, second = hybrid.split_message(message, 0.5)
    assert len(first) == 16 and len(second) == 16
    all_first, empty_second = hybrid.split_message(message, 1.0)
    assert all_first == message and empty_second == Bits()


def test_split_uses_ceiling():
    first, second = hybrid.split_message(Bits.zeros(10), 0.31)
    assert (len(first), len(second)) == (4, 6)


def test_split_rejects_bad_alpha():
    with pytest.raises(ValueError):
        hybrid.split_message(Bits.zeros(8), -0.1)
    with pytest.raises(ValueError):
        hybrid.split_message(Bits.zeros(8), 1.1)


def test_reassemble_is_inverse():
    message = Bits.from_int(0xA5A5, 16)
    for alpha in (0.0, 0.25, 0.5, 0.99, 1.0):
        part1, part2 = hybrid.split_message(message, alpha)
        assert hybrid.reassemble(part1, part2) == message
    assert hybrid.reassemble(Bits(), message) == message


@given(st.lists(st.integers(0, 1), min_size=1, max_size=64), st.floats(0.0, 1.0))
@settings(max_examples=120, deadline=None)
def test_split_reassemble_bijection(bits, alpha):
    message = Bits(bits)
    part1, part2 = hybrid.split_message(message, alpha)
    assert hybrid.reassemble(part1, part2) == message


# ---------------------------------------------------------------------------
# durations


def test_hybrid_duration_fixture():
    assert hybrid.hybrid_duration(_cfg(1, 1), 0.01) == pytest.approx(0.32, abs=1e-12)


def test_alpha_zero_duration_is_lsb_only():
    for l1, l2 in ((3, 1), (2, 2), (1, 8)):
        cfg = _cfg(l1, l2)
        if hybrid.splitting_ratio(cfg) != 0.0:
            continue
        lsb_only_slots = -(-(cfg.message_bits + cfg.overhead_bits) // l2)
        assert hybrid.hybrid_duration(cfg, 0.01) == 0.01 * lsb_only_slots


def test_hybrid_duration_validation():
    with pytest.raises(ValueError):
        hybrid.hybrid_duration(_cfg(), 0.0)


def test_nominal_split_balances_within_ceiling_slack():
    for l1, l2 in ((1, 1), (2, 1), (1, 2)):
        cfg = _cfg(l1, l2)
        alpha = hybrid.splitting_ratio(cfg)
        assert 0.0 < alpha < 1.0
        n_iat = math.ceil(alpha * cfg.message_bits)
        d1 = (n_iat + cfg.overhead_bits) * l1
        d2 = -(-(cfg.message_bits - n_iat + cfg.overhead_bits) // l2)
        assert abs(d1 - d2) <= l1 + 1


def test_duration_dominates_each_part():
    for l1, l2 in ((1, 1), (2, 1), (1, 2), (2, 2)):
        cfg = _cfg(l1, l2)
        alpha = hybrid.splitting_ratio(cfg)
        n_iat = math.ceil(alpha * cfg.message_bits)
        n_lsb = math.ceil((1.0 - alpha) * cfg.message_bits)
        d = hybrid.hybrid_duration(cfg, 0.01)
        if n_iat:
            assert d >= 0.01 * (n_iat + cfg.overhead_bits) * l1 - 1e-12
        if n_lsb:
            assert d >= 0.01 * -(-(n_lsb + cfg.overhead_bits) // l2) - 1e-12


# ---------------------------------------------------------------------------
# per-message refinement


def test_part_slots_empty_sides():
    message = Bits.from_int(0x1234, 16)
    cfg = _cfg(1, 1, n_m=16)
    slots_iat, slots_lsb = hybrid.part_slots(message, 0, cfg)
    assert slots_iat == 0 and slots_lsb == len(codec.encode_frame(message))
    slots_iat, slots_lsb = hybrid.part_slots(message, 16, cfg)
    assert slots_lsb == 0 and slots_iat == len(codec.encode_frame(message))


def test_refine_split_degenerate_ratios():
    message = Bits.from_int(0xCAFEBABE, 32)
    assert hybrid.refine_split(message, _cfg(3, 1)) == 0  # alpha = 0
    no_overhead = hybrid.HybridConfig(iat_window=1, lsb_bits=1, message_bits=32, overhead_bits=0)
    if hybrid.splitting_ratio(no_overhead) >= 1.0:
        assert hybrid.refine_split(message, no_overhead) == 32


def test_refine_split_never_worse_than_nominal():
    rng = np.random.default_rng(41)
    for l1, l2 in ((1, 1), (2, 1), (1, 2)):
        cfg = _cfg(l1, l2)
        alpha = hybrid.splitting_ratio(cfg)
        for _ in range(25):
            message = Bits.from_int(int(rng.integers(0, 1 << 32)), 32)
            nominal = min(max(math.ceil(alpha * 32), 1), 31)
            refined = hybrid.refine_split(message, cfg)
            assert 1 <= refined <= 31

            def gap(cut: int) -> int:
                a, b = hybrid.part_slots(message, cut, cfg)
                return abs(a - b)

            assert gap(refined) <= gap(nominal)


def test_measured_duration_matches_part_slots():
    message = Bits.from_int(0xFEEDFACE, 32)
    cfg = _cfg(1, 2)
    cut = hybrid.refine_split(message, cfg)
    slots = hybrid.part_slots(message, cut, cfg)
    assert hybrid.measured_duration(message, cfg, 0.01, cut) == pytest.approx(
        0.01 * max(slots), rel=1e-12
    )


def test_refined_parts_round_trip_through_frames():
    rng = np.random.default_rng(43)
    cfg = _cfg(1, 1)
    for _ in range(20):
        message = Bits.from_int(int(rng.integers(0, 1 << 32)), 32)
        cut = hybrid.refine_split(message, cfg)
        part1, part2 = message[:cut], message[cut:]
        back1 = codec.decode_frame(codec.encode_frame(part1)) if len(part1) else Bits()
        back2 = codec.decode_frame(codec.encode_frame(part2)) if len(part2) else Bits()
        assert hybrid.reassemble(back1, back2) == message
