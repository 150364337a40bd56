"""Packed bit strings.

Bit ``k`` of a stream lives in bit ``k % 8`` (least significant first) of
byte ``k // 8``.  The same order is used for raw-bit files, so a file is
just the packed bytes; its bit length travels out of band.
"""

from __future__ import annotations

import os
from typing import Iterable, Union

import numpy as np

PathLike = Union[str, "os.PathLike[str]"]


class BitString:
    """Immutable packed sequence of bits with an explicit length.

    Storage past ``len`` is always zero, so two bit strings compare equal
    exactly when their lengths and packed bytes agree.
    """

    __slots__ = ("_data", "_len")

    def __init__(self, data: Union[bytes, bytearray, np.ndarray] = b"", length: int | None = None):
        buf = np.frombuffer(bytes(data), dtype=np.uint8).copy()
        if length is None:
            length = 8 * buf.size
        if length < 0:
            raise ValueError(f"negative bit length {length}")
        nbytes = (length + 7) // 8
        if buf.size < nbytes:
            raise ValueError(f"{buf.size} bytes cannot hold {length} bits")
        buf = buf[:nbytes]
        if length % 8:
            buf[-1] &= (1 << (length % 8)) - 1
        buf.flags.writeable = False
        self._data = buf
        self._len = int(length)

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise ValueError("bit values must be 0 or 1")
        return cls(np.packbits(arr, bitorder="little").tobytes(), arr.size)

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(bytes((length + 7) // 8), length)

    @classmethod
    def from_words(cls, words: np.ndarray, length: int) -> "BitString":
        """Build from little-endian uint64 words (bit k in word k // 64)."""
        raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
        return cls(raw[: (length + 7) // 8].tobytes(), length)

    @classmethod
    def concat(cls, parts: Iterable["BitString"]) -> "BitString":
        parts = list(parts)
        if not parts:
            return cls()
        return cls.from_bits(np.concatenate([p.to_bits() for p in parts]))

    @classmethod
    def read(cls, path: PathLike, length: int | None = None) -> "BitString":
        """Read a raw-bit file; ``length`` defaults to every bit in the file."""
        with open(path, "rb") as fh:
            data = fh.read()
        if length is not None and length > 8 * len(data):
            raise ValueError(f"{path}: file holds {8 * len(data)} bits, {length} requested")
        return cls(data, length)

    # -- views ------------------------------------------------------------

    def to_bits(self) -> np.ndarray:
        """Unpacked copy, one uint8 (0 or 1) per bit."""
        return np.unpackbits(self._data, count=self._len, bitorder="little")

    def to_bytes(self) -> bytes:
        return self._data.tobytes()

    def words(self, nwords: int | None = None) -> np.ndarray:
        """Little-endian uint64 words, zero padded to ``nwords``."""
        need = (self._len + 63) // 64
        if nwords is None:
            nwords = need
        if nwords < need:
            raise ValueError(f"{nwords} words cannot hold {self._len} bits")
        buf = np.zeros(8 * nwords, dtype=np.uint8)
        buf[: self._data.size] = self._data
        return buf.view("<u8")

    def write(self, path: PathLike) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    def count(self) -> int:
        """Number of one bits."""
        return int(np.bitwise_count(self._data).sum())

    # -- protocol ---------------------------------------------------------

    def __len__(self) -> int:
        return self._len

    def __getitem__(self, key):
        if isinstance(key, slice):
            return BitString.from_bits(self.to_bits()[key])
        k = int(key)
        if k < 0:
            k += self._len
        if not 0 <= k < self._len:
            raise IndexError("bit index out of range")
        return int((self._data[k >> 3] >> (k & 7)) & 1)

    def __xor__(self, other: "BitString") -> "BitString":
        if not isinstance(other, BitString):
            return NotImplemented
        if other._len != self._len:
            raise ValueError(f"length mismatch: {self._len} vs {other._len}")
        return BitString(np.bitwise_xor(self._data, other._data).tobytes(), self._len)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._len == other._len and np.array_equal(self._data, other._data)

    def __hash__(self) -> int:
        return hash((self._len, self._data.tobytes()))

    def __repr__(self) -> str:
        if self._len <= 64:
            body = "".join(str(b) for b in self.to_bits())
            return f"BitString('{body}')"
        return f"BitString(len={self._len}, head={self.to_bytes()[:8].hex()}...)"
