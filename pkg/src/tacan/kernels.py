"""Kernel backend selection.

The compiled backend (``tacan._kernels_c``) is preferred when importable;
otherwise the pure-Python twin is used. Set ``TACAN_BACKEND=py`` (or ``c``)
to force a choice; forcing ``c`` when the extension is missing raises.

Both backends are bit-identical, including IEEE-754 results of the float
kernels, so the selection never affects outputs, only speed.
"""

from __future__ import annotations

import os

from . import _kernels_py


def _load_compiled():
    try:
        from . import _kernels_c
    except ImportError:
        return None
    return _kernels_c


def available_backends() -> dict[str, object]:
    """Name -> module for every importable backend."""
    backends = {"py": _kernels_py}
    compiled = _load_compiled()
    if compiled is not None:
        backends["c"] = compiled
    return backends


def _select():
    forced = os.environ.get("TACAN_BACKEND", "").strip().lower()
    backends = available_backends()
    if forced:
        if forced not in ("c", "py"):
            raise ValueError(f"TACAN_BACKEND must be 'c' or 'py', got {forced!r}")
        if forced not in backends:
            raise ImportError("TACAN_BACKEND=c but the compiled kernels are not built")
        return backends[forced]
    return backends.get("c", _kernels_py)


_impl = _select()

BACKEND = _impl.BACKEND_NAME

crc8 = _impl.crc8
stuff_bits = _impl.stuff_bits
destuff_bits = _impl.destuff_bits
running_mean = _impl.running_mean
batch_offsets = _impl.batch_offsets
