"""HMAC-based message authentication with session and message counters.

Per message ID, transmitter and monitor share a master key. A session key
is derived as HMAC-SHA256(master_key, session_counter); each outgoing
message is counter || truncated HMAC-SHA256(session_key, counter). The
monitor verifies with Algorithm-1 semantics: it increments its local
counter on every verification attempt (success or failure) and accepts only
when both the counter and the digest match. No resynchronization is
attempted after loss; a desynchronized session keeps failing until rotation.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from .bits import Bits

DIGEST_LAST_BITS = "last-bits"
DIGEST_XOR_BYTES = "xor-bytes"

_COUNTER_ENCODING_BYTES = 8  # big-endian, fixed width (HMAC input)


class CounterOverflow(RuntimeError):
    """Message counter exhausted; the session must be rotated."""


@dataclass
class DigestPolicy:
    """How the 32-byte HMAC digest is truncated onto the bus."""

    mode: str = DIGEST_LAST_BITS
    bits: int = 8

    def __post_init__(self) -> None:
        if self.mode not in (DIGEST_LAST_BITS, DIGEST_XOR_BYTES):
            raise ValueError(f"unknown digest mode {self.mode!r}")
        if not 4 <= self.bits <= 64:
            raise ValueError("digest width must be in [4, 64] bits")
        if self.mode == DIGEST_XOR_BYTES and self.bits != 8:
            raise ValueError("xor-bytes truncation is 8 bits wide")


@dataclass
class AuthContext:
    """Per-message-ID authentication state (single writer)."""

    master_key: bytes
    msg_id: int
    session_counter: int = 0
    session_key: bytes = b""
    message_counter: int = 0
    counter_bits: int = 24

    def __post_init__(self) -> None:
        if not self.master_key:
            raise ValueError("master key must be non-empty")
        if not 8 <= self.counter_bits <= 64:
            raise ValueError("counter width must be in [8, 64] bits")


def _encode_counter(value: int) -> bytes:
    return value.to_bytes(_COUNTER_ENCODING_BYTES, "big")


def derive_session_key(master_key: bytes, session_counter: int) -> bytes:
    """HMAC-SHA256 of the 8-byte big-endian session counter."""
    return hmac.new(master_key, _encode_counter(session_counter), hashlib.sha256).digest()


def start_session(ctx: AuthContext) -> None:
    """Advance to the next session: bump the session counter, re-derive the
    session key, reset the message counter."""
    ctx.session_counter += 1
    ctx.session_key = derive_session_key(ctx.master_key, ctx.session_counter)
    ctx.message_counter = 0


def new_context(master_key: bytes, msg_id: int, counter_bits: int = 24) -> AuthContext:
    """Fresh context with its first session started."""
    ctx = AuthContext(master_key=master_key, msg_id=msg_id, counter_bits=counter_bits)
    start_session(ctx)
    return ctx


def truncate_digest(digest: bytes, policy: DigestPolicy) -> Bits:
    """Reduce a full digest to policy.bits bits."""
    if len(digest) < -(-policy.bits // 8):
        raise ValueError(f"digest of {len(digest)} bytes cannot yield {policy.bits} bits")
    if policy.mode == DIGEST_XOR_BYTES:
        folded = 0
        for b in digest:
            folded ^= b
        return Bits.from_int(folded, 8)
    value = int.from_bytes(digest, "big") & ((1 << policy.bits) - 1)
    return Bits.from_int(value, policy.bits)


def _digest_for(ctx: AuthContext, counter: int, policy: DigestPolicy) -> Bits:
    full = hmac.new(ctx.session_key, _encode_counter(counter), hashlib.sha256).digest()
    return truncate_digest(full, policy)


def generate_auth_message(ctx: AuthContext, policy: DigestPolicy) -> Bits:
    """Produce the next authentication message: counter || truncated digest.

    The counter is incremented first, so a fresh session emits counter
    value 1. Refuses to wrap: raises CounterOverflow when the counter
    would no longer fit, leaving the context unchanged.
    """
    nxt = ctx.message_counter + 1
    if nxt >= (1 << ctx.counter_bits):
        raise CounterOverflow(
            f"message counter for id {ctx.msg_id:#x} exhausted; rotate the session"
        )
    ctx.message_counter = nxt
    return Bits.from_int(nxt, ctx.counter_bits) + _digest_for(ctx, nxt, policy)


def auth_message_len(ctx: AuthContext, policy: DigestPolicy) -> int:
    return ctx.counter_bits + policy.bits


def verify_auth_message(message: Bits, ctx: AuthContext, policy: DigestPolicy) -> bool:
    """Algorithm-1 verification.

    The local counter advances on every attempt, matching the transmitter's
    per-message increment; acceptance requires the received counter to equal
    the local one and the digest to match.
    """
    expected_len = auth_message_len(ctx, policy)
    if len(message) != expected_len:
        raise ValueError(f"message is {len(message)} bits, expected {expected_len}")
    ctx.message_counter += 1
    received_counter = message[: ctx.counter_bits].to_int()
    if received_counter != ctx.message_counter:
        return False
    expected_digest = _digest_for(ctx, ctx.message_counter, policy)
    return message[ctx.counter_bits :] == expected_digest
