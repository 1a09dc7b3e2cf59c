"""Throughput, bit-error, and false-alarm tables.

Everything here is a reproduction driver: build a deterministic workload,
push it through the channel code, and emit rows that the CLI can print as
CSV. All tables are pure functions of (parameters, seed); the CSV writers
never emit timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import codec, iat_channel
from .attacks import run_detector
from .bits import Bits
from .hybrid import HybridConfig, refine_split, splitting_ratio
from .pipeline import ScenarioConfig, run_iat, sub_seed
from .timing import ClockModel, simulate_arrivals

DEFAULT_SAMPLE_SEED = 12345
DEFAULT_SETTINGS = ((1, 1), (2, 1), (1, 2), (2, 2))


# ---------------------------------------------------------------------------
# shared frame workload


def sample_auth_messages(
    n_frames: int,
    counter_bits: int = 24,
    digest_bits: int = 8,
    seed: int = DEFAULT_SAMPLE_SEED,
) -> list[Bits]:
    """Authentication messages with sequential counters and random digests.

    This is the workload every throughput row shares: counters count up from
    1 as they would in a live session, while the digest bits are uniform
    random (a real truncated HMAC is indistinguishable from that, and the
    digest is what drives stuffing variability).
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for counter in range(1, n_frames + 1):
        digest = int(rng.integers(0, 1 << digest_bits))
        out.append(Bits.from_int(counter, counter_bits) + Bits.from_int(digest, digest_bits))
    return out


def frame_lengths(messages: Iterable[Bits]) -> np.ndarray:
    """Post-stuffing frame length in bits for each message."""
    return np.array([len(codec.encode_frame(m)) for m in messages], dtype=np.int64)


# ---------------------------------------------------------------------------
# throughput


@dataclass
class ThroughputRow:
    channel: str  # iat | lsb | hybrid
    r_c: float  # channel bits per second
    r_a: float  # authentication payload bits per second
    settings: dict

    def __post_init__(self) -> None:
        if self.r_a > self.r_c + 1e-9:
            raise ValueError("authentication throughput cannot exceed channel throughput")


def _as_length_array(measured_frame_bits) -> np.ndarray | None:
    """None for scalars; otherwise the per-frame length array."""
    arr = np.asarray(measured_frame_bits)
    if arr.ndim == 0:
        return None
    return arr.astype(np.int64)


def throughput_iat(t: float, l: int, n_m: int, n_o: int, measured_frame_bits) -> ThroughputRow:
    """One bit costs l carrier periods, so r_c = 1/(l*t) regardless of framing.

    measured_frame_bits may be a scalar mean or the per-frame length array.
    """
    _check_throughput_args(t, l, n_m, n_o)
    lens = _as_length_array(measured_frame_bits)
    avg = float(np.mean(lens)) if lens is not None else float(measured_frame_bits)
    r_c = 1.0 / (l * t)
    r_a = n_m / (avg * l * t)
    return ThroughputRow("iat", r_c, r_a, {"l": l, "t": t, "n_m": n_m, "n_o": n_o})


def throughput_lsb(t: float, l: int, n_m: int, n_o: int, measured_frame_bits) -> ThroughputRow:
    """Each carrier hides l bits, but the last carrier of a frame is padded.

    With the per-frame length array the carrier count is the exact sum of
    per-frame ceilings; a scalar mean falls back to one representative frame.
    """
    _check_throughput_args(t, l, n_m, n_o)
    lens = _as_length_array(measured_frame_bits)
    if lens is not None:
        slots = int(np.sum((lens + l - 1) // l))
        total_bits = int(np.sum(lens))
        n = int(lens.size)
    else:
        slots = math.ceil(float(measured_frame_bits) / l)
        total_bits = float(measured_frame_bits)
        n = 1
    r_c = total_bits / (slots * t)
    r_a = n_m * n / (slots * t)
    return ThroughputRow("lsb", r_c, r_a, {"l": l, "t": t, "n_m": n_m, "n_o": n_o})


def hybrid_measurements(messages: Sequence[Bits], cfg: HybridConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-message (carrier slots, transmitted frame bits) after splitting.

    Each message gets its own refined cut, so the two sub-frames finish as
    close to simultaneously as the bit granularity allows. Slots are counted
    in carrier periods: the IAT part needs l1 periods per frame bit, the
    payload part carries l2 frame bits per period.
    """
    slots = np.zeros(len(messages), dtype=np.int64)
    tx_bits = np.zeros(len(messages), dtype=np.int64)
    for i, message in enumerate(messages):
        cut = refine_split(message, cfg)
        n1 = len(codec.encode_frame(message[:cut])) if cut > 0 else 0
        n2 = len(codec.encode_frame(message[cut:])) if cut < len(message) else 0
        d1 = n1 * cfg.iat_window
        d2 = -(-n2 // cfg.lsb_bits)
        slots[i] = max(d1, d2)
        tx_bits[i] = n1 + n2
    return slots, tx_bits


def throughput_hybrid(
    cfg: HybridConfig,
    t: float,
    slot_counts,
    transmitted_bits=None,
) -> ThroughputRow:
    """Throughput from measured per-message durations (in carrier periods).

    When transmitted_bits is given, r_c counts the frame bits actually sent
    (both sub-frames, stuffing included) over the total time; otherwise it
    falls back to the nominal (n_m + 2 n_o)/D with D the mean duration.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    slots = np.asarray(slot_counts, dtype=np.int64)
    if slots.size == 0:
        raise ValueError("need at least one measured duration")
    total_slots = int(np.sum(slots))
    n = int(slots.size)
    if transmitted_bits is not None:
        total_bits = int(np.sum(np.asarray(transmitted_bits, dtype=np.int64)))
        r_c = total_bits / (total_slots * t)
    else:
        mean_duration = total_slots * t / n
        r_c = (cfg.message_bits + 2 * cfg.overhead_bits) / mean_duration
    r_a = cfg.message_bits * n / (total_slots * t)
    settings = {
        "l1": cfg.iat_window,
        "l2": cfg.lsb_bits,
        "t": t,
        "n_m": cfg.message_bits,
        "n_o": cfg.overhead_bits,
    }
    return ThroughputRow("hybrid", r_c, r_a, settings)


def _check_throughput_args(t: float, l: int, n_m: int, n_o: int) -> None:
    if t <= 0.0:
        raise ValueError("t must be positive")
    if l < 1:
        raise ValueError("l must be >= 1")
    if n_m < 1 or n_o < 0:
        raise ValueError("message/overhead bit counts out of range")


def throughput_table(
    period: float = 0.01,
    n_m: int = 32,
    n_o: int = 16,
    n_frames: int = 1000,
    seed: int = DEFAULT_SAMPLE_SEED,
    settings: Sequence[tuple[int, int]] = DEFAULT_SETTINGS,
    digest_bits: int = 8,
) -> list[ThroughputRow]:
    """All three channels across (l1, l2) settings over one shared workload.

    The same 1000-frame sample feeds every row, so rows are comparable and
    the hybrid row with a degenerate split (alpha = 0) reproduces the LSB
    row exactly, integer for integer.
    """
    if n_m <= digest_bits:
        raise ValueError("n_m must exceed digest_bits (counter needs >= 1 bit)")
    messages = sample_auth_messages(n_frames, n_m - digest_bits, digest_bits, seed)
    lens = frame_lengths(messages)
    rows: list[ThroughputRow] = []
    for l1, l2 in settings:
        iat_row = throughput_iat(period, l1, n_m, n_o, lens)
        lsb_row = throughput_lsb(period, l2, n_m, n_o, lens)
        cfg = HybridConfig(iat_window=l1, lsb_bits=l2, message_bits=n_m, overhead_bits=n_o)
        slots, tx_bits = hybrid_measurements(messages, cfg)
        hybrid_row = throughput_hybrid(cfg, period, slots, tx_bits)
        for row in (iat_row, lsb_row, hybrid_row):
            row.settings.update({"l1": l1, "l2": l2})
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# bit error sweep


@dataclass
class BerCell:
    sigma_frac: float  # IAT noise sigma / period
    window: int
    delta_frac: float
    n_bits: int
    analytic: float
    empirical: float
    std_err: float  # binomial SE at the analytic rate


def _ber_cell(
    sigma_frac: float,
    window: int,
    delta_frac: float,
    n_bits: int,
    period: float,
    cell_seed: int,
) -> BerCell:
    rng = np.random.default_rng(cell_seed)
    sent = Bits(rng.integers(0, 2, size=n_bits, dtype=np.uint8))
    # receiver-side IAT noise has variance 2*sigma_eta^2
    sigma_eta = sigma_frac * period / math.sqrt(2.0)
    clock = ClockModel(skew=0.0, noise_sigma=sigma_eta, seed=sub_seed(cell_seed, 1))

    if delta_frac > 0.0:
        cfg = iat_channel.IatChannelConfig(period, delta_frac * period, window)
        itts = iat_channel.modulate(sent, cfg)
        iats = np.diff(simulate_arrivals(itts, clock).arrivals)
        decoded = iat_channel.demodulate(iats, cfg)
        analytic = iat_channel.analytic_ber(cfg, sigma_frac * period)
        m = min(len(sent), len(decoded))
        empirical = float(np.mean(sent.array[:m] != decoded.array[:m]))
    else:
        # zero deviation carries no signal; the receiver output is noise
        itts = np.full(n_bits * window, period)
        iats = np.diff(simulate_arrivals(itts, clock).arrivals)
        averages = iat_channel.running_average(iats, window)
        samples = averages[0::window][:n_bits]
        decoded = np.where(samples >= period, 0, 1).astype(np.uint8)
        analytic = iat_channel.q_function(0.0)
        empirical = float(np.mean(sent.array[: len(decoded)] != decoded))

    std_err = math.sqrt(analytic * (1.0 - analytic) / n_bits)
    return BerCell(sigma_frac, window, delta_frac, n_bits, analytic, empirical, std_err)


def ber_sweep(
    sigma_fracs: Sequence[float],
    l_range: Sequence[int],
    delta_frac: float = 0.01,
    bits_per_point: int = 100_000,
    seed: int = 0,
    period: float = 0.01,
    workers: int | None = None,
) -> list[BerCell]:
    """Monte-Carlo BER against the analytic law over a (sigma, window) grid.

    Cells run in parallel with independently derived seeds; output order is
    the grid order (sigma outer, window inner) regardless of scheduling.
    """
    if bits_per_point < 10_000:
        raise ValueError("bits_per_point must be >= 10000")
    if delta_frac < 0.0:
        raise ValueError("delta_frac must be >= 0")
    grid = [(sf, l) for sf in sigma_fracs for l in l_range]
    if not grid:
        return []
    jobs = [
        (sf, l, delta_frac, bits_per_point, period, sub_seed(seed, 1000 + idx))
        for idx, (sf, l) in enumerate(grid)
    ]
    max_workers = workers if workers is not None else min(4, len(jobs))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda args: _ber_cell(*args), jobs))


# ---------------------------------------------------------------------------
# false alarm table


@dataclass
class FaProfile:
    """Message shape for the false-alarm study: id, period, relative noise."""

    msg_id: int
    period: float
    sigma_frac: float
    window: int | None = None  # None: derive from the bit error budget


# periods and noise levels spanning what in-vehicle traffic looks like
DEFAULT_FA_PROFILES = (
    FaProfile(0x0D1, 0.01, 0.027),
    FaProfile(0x185, 0.02, 0.016),
    FaProfile(0x22A, 0.10, 0.012),
    FaProfile(0x3FB, 0.25, 0.014),
    FaProfile(0x4D1, 0.50, 0.014),
)


@dataclass
class FaRow:
    msg_id: int
    period: float
    sigma_frac: float
    window: int
    k: int
    frames: int
    p_fa: float
    p_reception_failure: float
    p_verification_failure: float


def fa_table(
    profiles: Sequence[FaProfile] | None = None,
    k_values: Sequence[int] = (1, 2, 3),
    frames: int = 1000,
    seed: int = 0,
    delta_frac: float = 0.02,
    bit_error_target: float = 1e-7,
) -> list[FaRow]:
    """Alarm rate per (message, K) with no attack present.

    Each profile runs the full pipeline once (authenticate, modulate, add
    arrival noise, demodulate, verify) for `frames` frames, then the
    detector is replayed at each K. P_FA is alarm-firing frames over total
    frames.

    The verifier counter only advances on frames that actually arrive, so a
    single reception failure desynchronizes the rest of the session. The
    default bit_error_target budgets for that: it keeps the expected number
    of bit errors across the whole run well below one, which is what a
    deployment would configure for anyway.
    """
    if frames < 100:
        raise ValueError("frames must be >= 100")
    if profiles is None:
        profiles = DEFAULT_FA_PROFILES
    rows: list[FaRow] = []
    for i, prof in enumerate(profiles):
        window = prof.window
        if window is None:
            window = iat_channel.min_window(
                delta_frac * prof.period, 0.0, prof.sigma_frac * prof.period, bit_error_target
            )
        cfg = ScenarioConfig(
            channel="iat",
            period=prof.period,
            delta_frac=delta_frac,
            window=window,
            frames=frames,
            sigma_frac=prof.sigma_frac,
            msg_id=prof.msg_id,
            seed=sub_seed(seed, 500 + i),
        )
        outcome = run_iat(cfg)
        p_rx = outcome.n_reception_failures / frames
        p_verif = outcome.n_verification_failures / frames
        for k in k_values:
            state = run_detector(outcome.results, k)
            rows.append(
                FaRow(
                    msg_id=prof.msg_id,
                    period=prof.period,
                    sigma_frac=prof.sigma_frac,
                    window=window,
                    k=k,
                    frames=frames,
                    p_fa=len(state.alarms) / frames,
                    p_reception_failure=p_rx,
                    p_verification_failure=p_verif,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# CSV emission


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv_table(
    fh: TextIO,
    metadata: dict,
    header: Sequence[str],
    rows: Iterable[Sequence],
) -> None:
    """Metadata comment lines, then a header row, then data rows.

    Floats are written with repr so equal values always serialize to equal
    bytes; metadata is caller-supplied only (never a timestamp).
    """
    for key, value in metadata.items():
        fh.write(f"# {key}={_format_value(value)}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_value(v) for v in row])


THROUGHPUT_HEADER = ("channel", "l1", "l2", "period_s", "n_m", "n_o", "rc_bps", "ra_bps")
BER_HEADER = ("sigma_frac", "window", "delta_frac", "n_bits", "analytic_ber", "empirical_ber", "std_err")
FA_HEADER = (
    "msg_id",
    "period_s",
    "sigma_frac",
    "window",
    "k",
    "frames",
    "p_fa",
    "p_reception_failure",
    "p_verification_failure",
)


def write_throughput_csv(fh: TextIO, rows: Sequence[ThroughputRow], metadata: dict) -> None:
    data = [
        (
            row.channel,
            row.settings["l1"],
            row.settings["l2"],
            row.settings["t"],
            row.settings["n_m"],
            row.settings["n_o"],
            row.r_c,
            row.r_a,
        )
        for row in rows
    ]
    write_csv_table(fh, metadata, THROUGHPUT_HEADER, data)


def write_ber_csv(fh: TextIO, cells: Sequence[BerCell], metadata: dict) -> None:
    data = [
        (c.sigma_frac, c.window, c.delta_frac, c.n_bits, c.analytic, c.empirical, c.std_err)
        for c in cells
    ]
    write_csv_table(fh, metadata, BER_HEADER, data)


def write_fa_csv(fh: TextIO, rows: Sequence[FaRow], metadata: dict) -> None:
    data = [
        (
            f"0x{row.msg_id:03X}",
            row.period,
            row.sigma_frac,
            row.window,
            row.k,
            row.frames,
            row.p_fa,
            row.p_reception_failure,
            row.p_verification_failure,
        )
        for row in rows
    ]
    write_csv_table(fh, metadata, FA_HEADER, data)
