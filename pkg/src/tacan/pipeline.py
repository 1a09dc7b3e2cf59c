"""End-to-end scenario runs: keys -> frames -> channel -> decode -> verify.

The transmitter generates authenticated messages, frames them, and sends
the frame bits through the selected covert channel; the monitor demodulates,
scans for frames, maps decode results onto the expected frame slots, and
verifies in slot order with Algorithm-1 semantics. Reception failures
(CRC, stuffing, missing EOF, or nothing decoded in a slot) do not advance
the monitor counter, so a loss desynchronizes the rest of the session by
design; the detector then sees the cascade.

Slot accounting is the batch equivalent of the monitor's reception
timeout: the expected frame count and per-frame bit boundaries are known
from the transmit schedule, and a slot with no clean decode inside its bit
range is declared lost.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codec, hybrid, iat_channel, lsb_channel, offset_channel
from .attacks import (
    OK,
    RECEPTION_FAILURE,
    VERIFICATION_FAILURE,
    AuthResult,
    DetectorState,
    apply_injection,
    apply_masquerade,
    apply_suspension,
    run_detector,
)
from .auth import (
    AuthContext,
    DigestPolicy,
    generate_auth_message,
    new_context,
    verify_auth_message,
)
from .bits import Bits, concat
from .iat_channel import IatChannelConfig
from .lsb_channel import LsbChannelConfig
from .offset_channel import OffsetChannelConfig
from .timing import ClockModel, TimingTrace, iats, simulate_arrivals

CHANNELS = ("iat", "lsb", "offset", "hybrid")
ATTACKS = ("suspension", "injection", "masquerade", "forgery", "replay")


@dataclass
class ScenarioConfig:
    channel: str = "iat"
    period: float = 0.01
    delta_frac: float = 0.01
    window: int = 4  # IAT window; also the offset-channel window (must be even there)
    frames: int = 50
    sigma_frac: float = 0.0  # IAT noise sigma / period at the receiver
    skew: float = 0.0
    msg_id: int = 0x20
    counter_bits: int = 24
    digest_bits: int = 8
    digest_mode: str = "last-bits"
    k_threshold: int = 2
    seed: int = 0
    master_key: bytes | None = None
    # LSB / hybrid side
    lsb_bits: int = 2
    byte_index: int = 0
    payload_len: int = 8
    # offset channel batch budget; 0 = derive from the frame length bound
    frame_symbols: int = 0

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}")
        if self.frames < 1:
            raise ValueError("frames must be >= 1")


@dataclass
class AttackSpec:
    kind: str
    start_s: float = 0.0
    duration_s: float = 0.0
    inject_period: float = 0.001
    seed: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ATTACKS:
            raise ValueError(f"attack must be one of {ATTACKS}")
        if self.start_s < 0.0 or self.duration_s < 0.0:
            raise ValueError("attack times must be >= 0")


@dataclass
class RunOutcome:
    results: list[AuthResult]
    detector: DetectorState
    decoded_frames: int
    config: ScenarioConfig
    attack: AttackSpec | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_ok(self) -> int:
        return sum(1 for r in self.results if r.kind == OK)

    @property
    def n_reception_failures(self) -> int:
        return sum(1 for r in self.results if r.kind == RECEPTION_FAILURE)

    @property
    def n_verification_failures(self) -> int:
        return sum(1 for r in self.results if r.kind == VERIFICATION_FAILURE)

    @property
    def alarms(self) -> list[tuple[int, str]]:
        return self.detector.alarms


def sub_seed(seed: int, stream: int) -> int:
    """Deterministic per-purpose seed derivation (seed, stream) -> int."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return int(ss.generate_state(1, np.uint64)[0])


def _master_key(cfg: ScenarioConfig) -> bytes:
    if cfg.master_key is not None:
        return cfg.master_key
    # demo key tied to the scenario seed; real deployments load key material
    rng = np.random.default_rng(sub_seed(cfg.seed, 0))
    return rng.integers(0, 256, size=32, dtype=np.uint8).tobytes()


def _contexts(cfg: ScenarioConfig) -> tuple[AuthContext, AuthContext, DigestPolicy]:
    key = _master_key(cfg)
    policy = DigestPolicy(mode=cfg.digest_mode, bits=cfg.digest_bits)
    tx = new_context(key, cfg.msg_id, counter_bits=cfg.counter_bits)
    rx = new_context(key, cfg.msg_id, counter_bits=cfg.counter_bits)
    return tx, rx, policy


def _forged_messages(
    counters: range, digest_bits: int, counter_bits: int, seed: int
) -> list[Bits]:
    rng = np.random.default_rng(seed)
    n_bytes = (digest_bits + 7) // 8
    out = []
    for counter in counters:
        raw = rng.integers(0, 256, size=n_bytes, dtype=np.uint8).tobytes()
        guess = int.from_bytes(raw, "big") & ((1 << digest_bits) - 1)
        out.append(Bits.from_int(counter, counter_bits) + Bits.from_int(guess, digest_bits))
    return out


def _frame_stream(messages: list[Bits]) -> tuple[list[Bits], np.ndarray]:
    """Frames plus cumulative bit boundaries (length n+1)."""
    frames = [codec.encode_frame(m) for m in messages]
    bounds = np.zeros(len(frames) + 1, dtype=np.int64)
    np.cumsum([len(f) for f in frames], out=bounds[1:])
    return frames, bounds


def _slot_results(
    scans: list[codec.FrameScan],
    bounds: np.ndarray,
    rx: AuthContext,
    policy: DigestPolicy,
) -> tuple[list[AuthResult], int]:
    """Assign scan results to expected slots and verify in order."""
    n_slots = bounds.size - 1
    expected_len = rx.counter_bits + policy.bits
    results: list[AuthResult] = []
    decoded = 0
    oks = [s for s in scans if s.ok]
    fails = [s for s in scans if not s.ok]
    ok_offsets_arr = np.asarray([s.offset for s in oks], dtype=np.int64)
    fail_offsets = np.asarray([s.offset for s in fails], dtype=np.int64)
    for slot in range(n_slots):
        lo, hi = int(bounds[slot]), int(bounds[slot + 1])
        i0, i1 = np.searchsorted(ok_offsets_arr, [lo, hi]).tolist()
        candidate = oks[i0] if i0 < i1 else None
        if candidate is None:
            j0, j1 = np.searchsorted(fail_offsets, [lo, hi]).tolist()
            if j0 < j1:
                detail = type(fails[j0].error).__name__
            else:
                detail = "lost"
            results.append(AuthResult(kind=RECEPTION_FAILURE, detail=detail))
            continue
        decoded += 1
        if len(candidate.data) != expected_len:
            results.append(AuthResult(kind=RECEPTION_FAILURE, detail="malformed"))
            continue
        if verify_auth_message(candidate.data, rx, policy):
            results.append(AuthResult(kind=OK))
        else:
            results.append(AuthResult(kind=VERIFICATION_FAILURE, detail="auth"))
    return results, decoded


def _iat_cfg(cfg: ScenarioConfig) -> IatChannelConfig:
    return IatChannelConfig(
        period=cfg.period,
        deviation=cfg.delta_frac * cfg.period,
        window=cfg.window,
        skew=cfg.skew,
    )


def _clock(cfg: ScenarioConfig, stream: int = 1) -> ClockModel:
    return ClockModel(
        skew=cfg.skew,
        noise_sigma=cfg.sigma_frac * cfg.period / np.sqrt(2.0),
        seed=sub_seed(cfg.seed, stream),
    )


def run_iat(cfg: ScenarioConfig, attack: AttackSpec | None = None) -> RunOutcome:
    """IAT-channel scenario, optionally under attack."""
    tx, rx, policy = _contexts(cfg)
    chan = _iat_cfg(cfg)

    if attack is not None and attack.kind == "forgery":
        # attacker speaks the whole horizon with guessed digests
        tx_messages = _forged_messages(
            range(1, cfg.frames + 1), policy.bits, cfg.counter_bits, sub_seed(attack.seed, 10)
        )
    elif attack is not None and attack.kind == "replay":
        originals = [generate_auth_message(tx, policy) for _ in range(cfg.frames)]
        bit_lens = [len(codec.encode_frame(m)) * chan.window for m in originals]
        cum_time = np.cumsum([0] + bit_lens) * cfg.period
        k = int(np.searchsorted(cum_time, attack.start_s))
        k = min(max(k, 0), cfg.frames)
        tx_messages = originals[:k] + originals[: cfg.frames - k]
    else:
        tx_messages = [generate_auth_message(tx, policy) for _ in range(cfg.frames)]

    if attack is not None and attack.kind == "masquerade":
        return _run_iat_masquerade(cfg, attack, tx_messages, rx, policy, chan)

    frames, bounds = _frame_stream(tx_messages)
    stream = concat(frames)
    itts = iat_channel.modulate(stream, chan)
    trace = simulate_arrivals(itts, _clock(cfg), msg_id=cfg.msg_id)

    if attack is not None and attack.kind == "suspension":
        trace = apply_suspension(trace, attack.start_s)
    elif attack is not None and attack.kind == "injection":
        n_inject = max(0, int(attack.duration_s / attack.inject_period))
        injected = TimingTrace(
            msg_id=cfg.msg_id,
            arrivals=attack.start_s + attack.inject_period * np.arange(n_inject),
        )
        trace = apply_injection(trace, injected)

    decoded_bits = iat_channel.demodulate(iats(trace), chan)
    scans = codec.scan_stream(decoded_bits)
    results, decoded = _slot_results(scans, bounds, rx, policy)
    detector = run_detector(results, cfg.k_threshold)
    return RunOutcome(
        results=results,
        detector=detector,
        decoded_frames=decoded,
        config=cfg,
        attack=attack,
    )


def _run_iat_masquerade(
    cfg: ScenarioConfig,
    attack: AttackSpec,
    legit_messages: list[Bits],
    rx: AuthContext,
    policy: DigestPolicy,
    chan: IatChannelConfig,
) -> RunOutcome:
    """Attacker silences the ECU on a frame boundary and continues the
    cadence with forged digests (correct counters, one idle bit at the seam)."""
    frames, bounds = _frame_stream(legit_messages)
    # frame boundary times (seconds, nominal receiver clock)
    bound_times = bounds.astype(np.float64) * chan.window * cfg.period / (1.0 + cfg.skew)
    k = int(np.searchsorted(bound_times, attack.start_s))
    k = min(max(k, 0), cfg.frames)

    kept_messages = legit_messages[:k]
    forged = _forged_messages(
        range(k + 1, cfg.frames + 1), policy.bits, cfg.counter_bits, sub_seed(attack.seed, 11)
    )
    forged_frames, forged_bounds = _frame_stream(forged)

    legit_stream = concat(frames)
    legit_itts = iat_channel.modulate(legit_stream, chan)
    legit_trace = simulate_arrivals(legit_itts, _clock(cfg), msg_id=cfg.msg_id)

    cut_iat = int(bounds[k]) * chan.window  # arrivals 0..cut_iat survive
    arrivals = legit_trace.arrivals
    boundary_time = float(arrivals[min(cut_iat, len(legit_trace) - 1)])
    if cut_iat + 1 < len(legit_trace):
        # halfway to the next real arrival: the cut keeps exactly the prefix
        # even though modulation walks the arrivals off the nominal grid
        t_cut = 0.5 * (boundary_time + float(arrivals[cut_iat + 1]))
    else:
        t_cut = boundary_time + 0.5 * cfg.period
    # seam: one idle (1) bit, then the forged frames, at the legit cadence
    attacker_bits = Bits.ones(1) + concat(forged_frames)
    attacker_itts = iat_channel.modulate(attacker_bits, chan)
    attacker_clock = ClockModel(
        skew=cfg.skew,
        noise_sigma=cfg.sigma_frac * cfg.period / np.sqrt(2.0),
        seed=sub_seed(attack.seed, 12),
    )
    forged_trace = simulate_arrivals(
        attacker_itts, attacker_clock, msg_id=cfg.msg_id, start_time=boundary_time
    )
    # drop the forged stream's nominal first arrival: it coincides with the
    # seam start, where the legit boundary arrival already sits
    forged_trace = TimingTrace(
        msg_id=cfg.msg_id, arrivals=forged_trace.arrivals[1:], nominal_period=cfg.period
    )

    merged = apply_masquerade(legit_trace, t_cut, forged_trace)

    attacker_offset = cut_iat // chan.window + 1  # legit bits + the seam idle bit
    all_bounds = np.concatenate(
        [bounds[: k + 1], attacker_offset + forged_bounds[1:]]
    )

    decoded_bits = iat_channel.demodulate(iats(merged), chan)
    scans = codec.scan_stream(decoded_bits)
    results, decoded = _slot_results(scans, all_bounds, rx, policy)
    detector = run_detector(results, cfg.k_threshold)
    return RunOutcome(
        results=results,
        detector=detector,
        decoded_frames=decoded,
        config=cfg,
        attack=attack,
        extra={"takeover_frame": k},
    )


def run_lsb(cfg: ScenarioConfig) -> RunOutcome:
    """LSB-channel scenario over synthetic carrier payloads (noise free)."""
    tx, rx, policy = _contexts(cfg)

    messages = [generate_auth_message(tx, policy) for _ in range(cfg.frames)]
    frames, bounds = _frame_stream(messages)
    stream = concat(frames)
    lsb_cfg = LsbChannelConfig(lsb_count=cfg.lsb_bits, byte_index=cfg.byte_index)
    n_carriers = lsb_channel.messages_needed(len(stream), lsb_cfg) + 4
    rng = np.random.default_rng(sub_seed(cfg.seed, 3))
    carriers = [
        rng.integers(0, 256, size=cfg.payload_len, dtype=np.uint8).tobytes()
        for _ in range(n_carriers)
    ]
    modified = lsb_channel.embed(stream, carriers, lsb_cfg)
    scans = lsb_channel.extract(modified, lsb_cfg)
    results, decoded = _slot_results(scans, bounds, rx, policy)
    detector = run_detector(results, cfg.k_threshold)
    loss = lsb_channel.measure_accuracy_loss(carriers, modified, cfg.byte_index, 1.0)
    return RunOutcome(
        results=results,
        detector=detector,
        decoded_frames=decoded,
        config=cfg,
        extra={"carriers": n_carriers, "max_byte_deviation": loss},
    )


def run_offset(cfg: ScenarioConfig, attack: AttackSpec | None = None) -> RunOutcome:
    """Offset-channel scenario; supports the suspension attack."""
    tx, rx, policy = _contexts(cfg)

    window = cfg.window if cfg.window % 2 == 0 else cfg.window + 1
    messages = [generate_auth_message(tx, policy) for _ in range(cfg.frames)]
    frames = [codec.encode_frame(m) for m in messages]
    nominal = cfg.counter_bits + policy.bits + 16
    frame_symbols = cfg.frame_symbols or codec.worst_case_frame_len(nominal) + 1
    chan = OffsetChannelConfig(
        period=cfg.period,
        deviation=cfg.delta_frac * cfg.period,
        window=window,
        frame_symbols=frame_symbols,
        skew=cfg.skew,
    )
    symbols = offset_channel.frames_to_symbols(frames, chan)
    itts = offset_channel.modulate(symbols, chan)
    trace = simulate_arrivals(itts, _clock(cfg), msg_id=cfg.msg_id)
    if attack is not None:
        if attack.kind != "suspension":
            raise ValueError("offset-channel runs support only the suspension attack")
        trace = apply_suspension(trace, attack.start_s)
    x = iats(trace)
    x = x[: (x.size // chan.batch_size) * chan.batch_size]
    decoded_symbols = offset_channel.demodulate(x, chan)
    substreams = offset_channel.split_at_silence(decoded_symbols)

    expected_len = rx.counter_bits + policy.bits
    results: list[AuthResult] = []
    decoded = 0
    by_slot: dict[int, list[Bits]] = {}
    for start, sub in substreams:
        by_slot.setdefault(start // chan.frame_symbols, []).append(sub)
    for slot in range(cfg.frames):
        subs = by_slot.get(slot, [])
        hit: Bits | None = None
        error = "lost"
        for sub in subs:
            for scan in codec.scan_stream(sub):
                if scan.ok:
                    hit = scan.data
                    break
                error = type(scan.error).__name__
            if hit is not None:
                break
        if hit is None:
            results.append(AuthResult(kind=RECEPTION_FAILURE, detail=error))
            continue
        decoded += 1
        if len(hit) != expected_len:
            results.append(AuthResult(kind=RECEPTION_FAILURE, detail="malformed"))
        elif verify_auth_message(hit, rx, policy):
            results.append(AuthResult(kind=OK))
        else:
            results.append(AuthResult(kind=VERIFICATION_FAILURE, detail="auth"))
    detector = run_detector(results, cfg.k_threshold)
    return RunOutcome(
        results=results,
        detector=detector,
        decoded_frames=decoded,
        config=cfg,
        attack=attack,
        extra={"frame_symbols": frame_symbols},
    )


def run_hybrid(cfg: ScenarioConfig) -> RunOutcome:
    """Hybrid scenario: every message split across the IAT and LSB channels."""
    tx, rx, policy = _contexts(cfg)

    hcfg = hybrid.HybridConfig(
        iat_window=cfg.window,
        lsb_bits=cfg.lsb_bits,
        message_bits=cfg.counter_bits + policy.bits,
    )
    messages = [generate_auth_message(tx, policy) for _ in range(cfg.frames)]
    cuts = [hybrid.refine_split(m, hcfg) for m in messages]

    iat_parts = [m[:c] for m, c in zip(messages, cuts) if c > 0]
    lsb_parts = [m[c:] for m, c in zip(messages, cuts) if c < len(m)]
    chan = _iat_cfg(cfg)

    iat_decoded: list[Bits | None] = []
    if iat_parts:
        frames, bounds = _frame_stream(iat_parts)
        itts = iat_channel.modulate(concat(frames), chan)
        trace = simulate_arrivals(itts, _clock(cfg), msg_id=cfg.msg_id)
        scans = codec.scan_stream(iat_channel.demodulate(iats(trace), chan))
        oks = [s for s in scans if s.ok]
        ok_offsets = np.asarray([s.offset for s in oks], dtype=np.int64)
        for slot in range(len(iat_parts)):
            lo, hi = int(bounds[slot]), int(bounds[slot + 1])
            i0, i1 = np.searchsorted(ok_offsets, [lo, hi]).tolist()
            iat_decoded.append(oks[i0].data if i0 < i1 else None)

    lsb_decoded: list[Bits | None] = []
    if lsb_parts:
        frames, bounds = _frame_stream(lsb_parts)
        stream = concat(frames)
        lsb_cfg = LsbChannelConfig(lsb_count=cfg.lsb_bits, byte_index=cfg.byte_index)
        n_carriers = lsb_channel.messages_needed(len(stream), lsb_cfg) + 4
        rng = np.random.default_rng(sub_seed(cfg.seed, 3))
        carriers = [
            rng.integers(0, 256, size=cfg.payload_len, dtype=np.uint8).tobytes()
            for _ in range(n_carriers)
        ]
        scans = lsb_channel.extract(lsb_channel.embed(stream, carriers, lsb_cfg), lsb_cfg)
        oks = [s for s in scans if s.ok]
        ok_offsets = np.asarray([s.offset for s in oks], dtype=np.int64)
        for slot in range(len(lsb_parts)):
            lo, hi = int(bounds[slot]), int(bounds[slot + 1])
            i0, i1 = np.searchsorted(ok_offsets, [lo, hi]).tolist()
            lsb_decoded.append(oks[i0].data if i0 < i1 else None)

    expected_len = rx.counter_bits + policy.bits
    results: list[AuthResult] = []
    decoded = 0
    it_iat = iter(iat_decoded)
    it_lsb = iter(lsb_decoded)
    for message, cut in zip(messages, cuts):
        p1 = next(it_iat) if cut > 0 else Bits()
        p2 = next(it_lsb) if cut < len(message) else Bits()
        if p1 is None or p2 is None:
            results.append(AuthResult(kind=RECEPTION_FAILURE, detail="part-missing"))
            continue
        whole = hybrid.reassemble(p1, p2)
        decoded += 1
        if len(whole) != expected_len:
            results.append(AuthResult(kind=RECEPTION_FAILURE, detail="malformed"))
        elif verify_auth_message(whole, rx, policy):
            results.append(AuthResult(kind=OK))
        else:
            results.append(AuthResult(kind=VERIFICATION_FAILURE, detail="auth"))
    detector = run_detector(results, cfg.k_threshold)
    return RunOutcome(
        results=results,
        detector=detector,
        decoded_frames=decoded,
        config=cfg,
        extra={"cuts": cuts},
    )


def run_scenario(cfg: ScenarioConfig, attack: AttackSpec | None = None) -> RunOutcome:
    if cfg.channel == "iat":
        return run_iat(cfg, attack)
    if cfg.channel == "lsb":
        if attack is not None:
            raise ValueError("LSB runs are noise free; attacks are not modeled")
        return run_lsb(cfg)
    if cfg.channel == "offset":
        return run_offset(cfg, attack)
    if cfg.channel == "hybrid":
        if attack is not None:
            raise ValueError("hybrid runs do not model attacks")
        return run_hybrid(cfg)
    raise ValueError(f"unknown channel {cfg.channel!r}")
