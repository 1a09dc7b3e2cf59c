"""Backend kernels: correctness of each, and exact agreement between them."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tacan import kernels

BACKENDS = sorted(kernels.available_backends().items())
BACKEND_IDS = [name for name, _ in BACKENDS]


def _crc8_reference(data: bytes) -> int:
    """Bitwise long-division CRC-8: poly 0x1D, init 0xFF, final xor 0xFF."""
    crc = 0xFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            if crc & 0x80:
                crc = ((crc << 1) ^ 0x1D) & 0xFF
            else:
                crc = (crc << 1) & 0xFF
    return crc ^ 0xFF


def _stuff_reference(bits: list[int]) -> list[int]:
    out: list[int] = []
    run_val, run_len = -1, 0
    for b in bits:
        out.append(b)
        if b == run_val:
            run_len += 1
        else:
            run_val, run_len = b, 1
        if run_len == 5:
            out.append(run_val ^ 1)
            run_val, run_len = run_val ^ 1, 1
    return out


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_crc8_check_value(name, impl):
    assert impl.crc8(b"123456789") == 0x4B


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_crc8_empty(name, impl):
    assert impl.crc8(b"") == 0x00


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_crc8_matches_bitwise_oracle(name, impl):
    rng = np.random.default_rng(42)
    for size in (1, 2, 7, 8, 33):
        for _ in range(20):
            data = rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()
            assert impl.crc8(data) == _crc8_reference(data)


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_stuff_fixtures(name, impl):
    def stuffed(text: str) -> str:
        out = impl.stuff_bits(np.array([int(c) for c in text], dtype=np.uint8))
        return "".join(str(b) for b in out.tolist())

    assert stuffed("") == ""
    assert stuffed("10101") == "10101"
    # stuff bits enter after input positions 5 and 10; they join later runs
    assert stuffed("0000011111") == "000001111101"
    # a run completed by the final input bit still gets its stuff bit
    assert stuffed("11111") == "111110"
    assert stuffed("0000000000") == "000001000001"


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_destuff_fixtures(name, impl):
    payload, violation = impl.destuff_bits(
        np.array([int(c) for c in "000001111101"], dtype=np.uint8)
    )
    assert "".join(map(str, payload.tolist())) == "0000011111"
    assert violation == -1
    _, violation = impl.destuff_bits(np.array([0, 0, 0, 0, 0, 0], dtype=np.uint8))
    assert violation == 5


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_stuff_destuff_round_trip_exhaustive(name, impl):
    for width in range(0, 10):
        for value in range(1 << width):
            bits = np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)
            stuffed = impl.stuff_bits(bits)
            # no six-in-a-row anywhere in the stuffed output
            runs = np.diff(np.flatnonzero(np.diff(stuffed, prepend=2, append=2)))
            assert runs.size == 0 or runs.max() <= 5
            payload, violation = impl.destuff_bits(stuffed)
            assert violation == -1
            assert np.array_equal(payload, bits)


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
@given(bits=st.lists(st.integers(0, 1), max_size=200))
@settings(max_examples=100, deadline=None)
def test_stuff_matches_reference(name, impl, bits):
    got = impl.stuff_bits(np.array(bits, dtype=np.uint8))
    assert got.tolist() == _stuff_reference(bits)


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_running_mean_small(name, impl):
    x = np.array([1.0, 3.0, 5.0, 7.0])
    assert impl.running_mean(x, 1).tolist() == [1.0, 3.0, 5.0, 7.0]
    assert impl.running_mean(x, 2).tolist() == [2.0, 4.0, 6.0]
    assert impl.running_mean(x, 4).tolist() == [4.0]


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_running_mean_matches_direct_mean(name, impl):
    rng = np.random.default_rng(3)
    x = rng.normal(0.01, 1e-4, size=500)
    for window in (1, 2, 5, 16):
        got = impl.running_mean(x, window)
        want = np.array([x[i : i + window].mean() for i in range(x.size - window + 1)])
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=0.0)


@pytest.mark.parametrize("name,impl", BACKENDS, ids=BACKEND_IDS)
def test_batch_offsets_matches_formula(name, impl):
    rng = np.random.default_rng(4)
    iats = rng.normal(0.01, 1e-4, size=64)
    got = impl.batch_offsets(iats, 0.01)
    want = (np.arange(1, 65) * 0.01) - np.cumsum(iats)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=0.0)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backends_bit_identical():
    """Backend choice must never change results, down to the last float bit."""
    py = kernels.available_backends()["py"]
    cc = kernels.available_backends()["c"]
    rng = np.random.default_rng(7)

    for _ in range(50):
        data = rng.integers(0, 256, size=int(rng.integers(0, 64)), dtype=np.uint8).tobytes()
        assert py.crc8(data) == cc.crc8(data)

    for _ in range(50):
        bits = rng.integers(0, 2, size=int(rng.integers(0, 300)), dtype=np.uint8)
        s_py, s_c = py.stuff_bits(bits), cc.stuff_bits(bits)
        assert np.array_equal(s_py, s_c)
        d_py, d_c = py.destuff_bits(s_py), cc.destuff_bits(s_c)
        assert np.array_equal(d_py[0], d_c[0]) and d_py[1] == d_c[1]
        # corrupt to exercise the violation path identically
        if s_py.size >= 6:
            bad = s_py.copy()
            bad[: 6] = bad[0]
            assert py.destuff_bits(bad)[1] == cc.destuff_bits(bad)[1]

    for _ in range(20):
        x = rng.normal(0.01, 2e-4, size=int(rng.integers(8, 400)))
        for window in (1, 3, 8):
            if x.size >= window:
                a, b = py.running_mean(x, window), cc.running_mean(x, window)
                assert a.tobytes() == b.tobytes()  # bitwise, not just close
        a, b = py.batch_offsets(x, 0.01), cc.batch_offsets(x, 0.01)
        assert a.tobytes() == b.tobytes()


def test_selected_backend_exposed():
    assert kernels.BACKEND in kernels.available_backends()
