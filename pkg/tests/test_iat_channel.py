from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy import stats as sp_stats

from tacan import iat_channel, timing
from tacan.bits import Bits

T = 0.01
DELTA = 0.0001


def _cfg(window: int = 2, skew: float = 0.0) -> iat_channel.IatChannelConfig:
    return iat_channel.IatChannelConfig(period=T, deviation=DELTA, window=window, skew=skew)


# ---------------------------------------------------------------------------
# configuration


def test_config_validation():
    with pytest.raises(ValueError):
        iat_channel.IatChannelConfig(period=0.0, deviation=DELTA, window=2)
    with pytest.raises(ValueError):
        iat_channel.IatChannelConfig(period=T, deviation=0.0, window=2)
    with pytest.raises(ValueError):
        iat_channel.IatChannelConfig(period=T, deviation=T, window=2)
    with pytest.raises(ValueError):
        iat_channel.IatChannelConfig(period=T, deviation=DELTA, window=0)
    with pytest.raises(ValueError):
        iat_channel.IatChannelConfig(period=T, deviation=DELTA, window=2, skew=-1.0)


# ---------------------------------------------------------------------------
# modulation


def test_modulate_fixtures():
    assert iat_channel.modulate(Bits([0]), _cfg()).tolist() == [0.0101, 0.0101]
    assert iat_channel.modulate(Bits([1]), _cfg()).tolist() == [0.0099, 0.0099]
    assert iat_channel.modulate(Bits(), _cfg()).size == 0


def test_modulate_length_contract():
    for window in (1, 3, 8):
        itts = iat_channel.modulate(Bits([1, 0, 1]), _cfg(window))
        assert itts.size == 3 * window


# ---------------------------------------------------------------------------
# running average


def test_running_average_identity_at_window_one():
    x = np.array([0.3, 0.1, 0.9])
    assert iat_channel.running_average(x, 1).tolist() == x.tolist()


def test_running_average_fixture():
    assert iat_channel.running_average(np.array([1.0, 3.0]), 2).tolist() == [2.0]


def test_running_average_errors():
    with pytest.raises(ValueError):
        iat_channel.running_average(np.array([1.0]), 2)
    with pytest.raises(ValueError):
        iat_channel.running_average(np.array([1.0, 2.0]), 0)


def test_running_average_suppresses_noise_by_window():
    rng = np.random.default_rng(17)
    noise = rng.normal(0.0, 1.0, size=20_000)
    for window in (4, 8):
        averaged = iat_channel.running_average(noise, window)
        assert np.var(averaged) == pytest.approx(1.0 / window, rel=0.10)


# ---------------------------------------------------------------------------
# phase search


def test_offset_zero_for_window_one():
    avg = np.array([0.0099, 0.0101, 0.0099])
    assert iat_channel.find_sampling_offset(avg, 1, T) == 0


def test_offset_recovers_constructed_phase():
    window = 4
    # signal samples sit at indices p, p+4, ... ; everything else rides Gamma
    for p in range(window):
        avg = np.full(40, T)
        avg[p::window] = T + DELTA
        assert iat_channel.find_sampling_offset(avg, window, T) == p


def test_offset_tie_breaks_low():
    assert iat_channel.find_sampling_offset(np.full(12, T), 3, T) == 0


# ---------------------------------------------------------------------------
# demodulation


def test_round_trip_exhaustive_noiseless():
    for window in range(1, 9):
        cfg = _cfg(window)
        for width in range(1, 6):
            for value in range(1 << width):
                bits = Bits.from_int(value, width)
                assert iat_channel.demodulate(iat_channel.modulate(bits, cfg), cfg) == bits


def test_samples_on_threshold_decode_as_zero():
    # dyadic period: window sums and means are exact, so every sample sits
    # exactly on Gamma and the >= convention must call them all 0
    period = 0.0078125
    cfg = iat_channel.IatChannelConfig(period=period, deviation=1e-4, window=3)
    assert iat_channel.demodulate(np.full(9, period), cfg) == Bits.zeros(3)
    one_wide = iat_channel.IatChannelConfig(period=T, deviation=1e-4, window=1)
    assert iat_channel.demodulate(np.full(4, T), one_wide) == Bits.zeros(4)


def test_trailing_partial_window_discarded():
    cfg = _cfg(4)
    bits = Bits.from_str("1011")
    itts = iat_channel.modulate(bits, cfg)
    # an incomplete extra symbol at the tail must not decode
    assert iat_channel.demodulate(np.append(itts, [T, T]), cfg) == bits
    assert iat_channel.demodulate(itts[:-1], cfg) == bits[:3]


def test_demodulate_short_stream_is_empty():
    cfg = _cfg(4)
    assert iat_channel.demodulate(np.array([T, T, T]), cfg) == Bits()


def test_phase_invariance_on_balanced_payload():
    payload = Bits.from_str("1010101010101010")
    for window in (2, 3, 4):
        cfg = _cfg(window)
        itts = iat_channel.modulate(payload, cfg)
        for shift in range(window):
            stream = np.concatenate([np.full(shift, T), itts])
            assert iat_channel.demodulate(stream, cfg) == payload


def test_skewed_receiver_round_trip():
    skew = 0.002
    cfg = _cfg(3, skew=skew)
    bits = Bits.from_str("1001101")
    itts = iat_channel.modulate(bits, iat_channel.IatChannelConfig(T, DELTA, 3))
    received = itts / (1.0 + skew)  # noiseless skewed clock
    assert iat_channel.demodulate(received, cfg) == bits


# ---------------------------------------------------------------------------
# error model


def test_q_function_against_quadrature():
    phi = lambda z: np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    for x in (-3.0, -1.0, 0.0, 0.5, 1.0, 2.326, 4.0):
        ref, err = integrate.quad(phi, x, np.inf)
        assert abs(iat_channel.q_function(x) - ref) <= 1e-12 + err


def test_q_function_identities():
    assert iat_channel.q_function(0.0) == 0.5
    assert iat_channel.q_function(2.326) == pytest.approx(0.01, abs=1e-4)
    for x in (0.3, 1.7, 5.0):
        total = iat_channel.q_function(x) + iat_channel.q_function(-x)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_q_inverse_matches_isf():
    for p in (0.3, 0.05, 0.01, 1e-4, 1e-7):
        assert iat_channel.q_inverse(p) == pytest.approx(float(sp_stats.norm.isf(p)), abs=1e-8)
    assert iat_channel.q_function(iat_channel.q_inverse(0.025)) == pytest.approx(0.025, rel=1e-6)


def test_q_inverse_rejects_bad_probability():
    for p in (0.0, 1.0, -0.2, 2.0):
        with pytest.raises(ValueError):
            iat_channel.q_inverse(p)


def test_analytic_ber_fixture():
    cfg = iat_channel.IatChannelConfig(period=T, deviation=1e-4, window=3)
    got = iat_channel.analytic_ber(cfg, 1.1e-4)
    assert got == pytest.approx(iat_channel.q_function(3 * 1e-4 / 1.1e-4), abs=1e-15)
    assert got == pytest.approx(3.2e-3, rel=0.02)


def test_analytic_ber_limits_and_monotonicity():
    assert iat_channel.analytic_ber(_cfg(3), 0.0) == 0.0
    with pytest.raises(ValueError):
        iat_channel.analytic_ber(_cfg(3), -1e-6)
    sigma = 1.1e-4
    by_window = [iat_channel.analytic_ber(_cfg(w), sigma) for w in range(1, 9)]
    assert all(a > b for a, b in zip(by_window, by_window[1:]))
    by_sigma = [iat_channel.analytic_ber(_cfg(3), s) for s in (0.5e-4, 1e-4, 2e-4)]
    assert all(a < b for a, b in zip(by_sigma, by_sigma[1:]))
    wide = iat_channel.IatChannelConfig(period=T, deviation=2e-4, window=3)
    assert iat_channel.analytic_ber(wide, sigma) < by_window[2]


def test_min_window_fixture():
    assert iat_channel.min_window(1e-4, 0.0, 1.1e-4, 0.01) == 3


def test_min_window_clamps():
    assert iat_channel.min_window(1e-4, 0.0, 1.1e-4, 0.5) == 1
    assert iat_channel.min_window(1e-4, 0.0, 0.0, 0.01) == 1


def test_min_window_meets_target():
    for sigma_frac in (0.005, 0.011, 0.027):
        for eps in (0.01, 1e-3, 1e-5):
            window = iat_channel.min_window(DELTA, 0.0, sigma_frac * T, eps)
            cfg = iat_channel.IatChannelConfig(T, DELTA, window)
            assert iat_channel.analytic_ber(cfg, sigma_frac * T) <= eps


def test_min_window_validation():
    with pytest.raises(ValueError):
        iat_channel.min_window(0.0, 0.0, 1e-4, 0.01)
    with pytest.raises(ValueError):
        iat_channel.min_window(1e-4, 0.0, 1e-4, 0.0)
    with pytest.raises(ValueError):
        iat_channel.min_window(1e-4, 0.0, 1e-4, 1.0)


# ---------------------------------------------------------------------------
# Monte Carlo against the analytic law


def _empirical_ber(cfg: iat_channel.IatChannelConfig, sigma_frac: float, n_bits: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    sent = Bits(rng.integers(0, 2, size=n_bits, dtype=np.uint8))
    itts = iat_channel.modulate(sent, cfg)
    clock = timing.ClockModel(noise_sigma=sigma_frac * cfg.period / np.sqrt(2.0), seed=seed + 1)
    trace = timing.simulate_arrivals(itts, clock)
    got = iat_channel.demodulate(timing.iats(trace), cfg)
    n = min(len(got), len(sent))
    assert n >= n_bits - 1
    return float(np.mean(got.array[:n] != sent.array[:n]))


def test_monte_carlo_quiet_cell():
    cfg = iat_channel.IatChannelConfig(period=T, deviation=0.01 * T, window=6)
    analytic = iat_channel.analytic_ber(cfg, 0.011 * T)
    empirical = _empirical_ber(cfg, 0.011, 10_000, seed=42)
    se = max(np.sqrt(analytic * (1 - analytic) / 10_000), 1e-12)
    assert abs(empirical - analytic) <= 3 * se + 1e-4


def test_monte_carlo_noisy_cell():
    cfg = iat_channel.IatChannelConfig(period=T, deviation=0.01 * T, window=2)
    analytic = iat_channel.analytic_ber(cfg, 0.027 * T)
    assert 0.1 < analytic < 0.4  # a cell where errors actually happen
    empirical = _empirical_ber(cfg, 0.027, 10_000, seed=43)
    se = np.sqrt(analytic * (1 - analytic) / 10_000)
    assert abs(empirical - analytic) <= 3 * se


# ---------------------------------------------------------------------------
# properties


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.integers(1, 6))
@settings(max_examples=120, deadline=None)
def test_round_trip_property(bits, window):
    cfg = _cfg(window)
    payload = Bits(bits)
    assert iat_channel.demodulate(iat_channel.modulate(payload, cfg), cfg) == payload
