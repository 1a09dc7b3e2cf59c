"""Fixed-order bit strings.

A ``Bits`` wraps a numpy uint8 array of 0/1 values. Bit 0 is the first bit
on the wire; integer and byte conversions are MSB first throughout, and
byte packing pads with zeros on the right.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator

import numpy as np


class Bits:
    __slots__ = ("_a",)

    def __init__(self, values: Iterable[int] | np.ndarray = ()) -> None:
        # always copy: freezing a caller's array in place would be a rude
        # side effect, and construction is never on a hot path (_wrap is)
        a = np.array(values, dtype=np.uint8, copy=True).reshape(-1)
        if a.size and a.max() > 1:
            raise ValueError("bit values must be 0 or 1")
        a.setflags(write=False)
        self._a = a

    # -- constructors -------------------------------------------------

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "Bits":
        b = cls.__new__(cls)
        a.setflags(write=False)
        b._a = a
        return b

    @classmethod
    def from_int(cls, value: int, width: int) -> "Bits":
        if value < 0 or width < 0 or value >= (1 << width):
            raise ValueError(f"value {value} does not fit in {width} bits")
        return cls([(value >> (width - 1 - i)) & 1 for i in range(width)])

    @classmethod
    def from_bytes(cls, data: bytes | bytearray) -> "Bits":
        a = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
        return cls._wrap(a)

    @classmethod
    def from_str(cls, text: str) -> "Bits":
        return cls([int(c) for c in text if c in "01"])

    @classmethod
    def zeros(cls, n: int) -> "Bits":
        return cls._wrap(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> "Bits":
        return cls._wrap(np.ones(n, dtype=np.uint8))

    # -- conversions --------------------------------------------------

    def to_int(self) -> int:
        value = 0
        for b in self._a.tolist():
            value = (value << 1) | b
        return value

    def to_bytes(self) -> bytes:
        """Pack MSB first, zero-padding the final byte on the right."""
        return np.packbits(self._a).tobytes()

    @property
    def array(self) -> np.ndarray:
        """Read-only uint8 view of the bits."""
        return self._a

    # -- sequence protocol --------------------------------------------

    def __len__(self) -> int:
        return self._a.size

    def __iter__(self) -> Iterator[int]:
        return iter(self._a.tolist())

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Bits._wrap(self._a[index].copy())
        return int(self._a[index])

    def __add__(self, other: "Bits") -> "Bits":
        if not isinstance(other, Bits):
            return NotImplemented
        return Bits._wrap(np.concatenate([self._a, other._a]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Bits):
            return NotImplemented
        return self._a.size == other._a.size and bool(np.all(self._a == other._a))

    def __hash__(self) -> int:
        return hash((self._a.size, self._a.tobytes()))

    def __repr__(self) -> str:
        return f"Bits('{self}')"

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self._a.tolist())


def concat(parts: Iterable[Bits]) -> Bits:
    arrays = [p.array for p in parts]
    if not arrays:
        return Bits()
    return Bits._wrap(np.concatenate(arrays))
