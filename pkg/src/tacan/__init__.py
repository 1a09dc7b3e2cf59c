"""Transmitter authentication for periodic CAN traffic over covert channels."""

from .bits import Bits, concat
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "Bits", "concat", "__version__"]
