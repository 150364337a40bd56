"""Toeplitz hashing over GF(2).

An ``m x n`` Toeplitz matrix is fixed by ``m + n - 1`` seed bits through

    T[i][j] = seed[(n - 1) + i - j]

so row ``i`` read against the reversed input is the contiguous seed window
``seed[i : i + n]``.  The kernel exploits that: all rows whose window starts
at the same offset modulo 64 share one shifted copy of the packed input, and
each output bit is the parity of a word-aligned AND.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .bitstring import BitString
from .errors import DimensionError, ParameterError

# Upper bound on uint64 words materialised per kernel step (16 MiB).
_CHUNK_WORDS = 1 << 21
# Column tiles are consumed in groups spanning at least this many bits.
_STREAM_BITS = 1 << 15


@dataclass(frozen=True)
class ToeplitzSeed:
    seed: BitString
    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ParameterError(f"negative dimensions m={self.m}, n={self.n}")
        want = max(self.m + self.n - 1, 0)
        if len(self.seed) != want:
            raise DimensionError(
                f"seed holds {len(self.seed)} bits, an {self.m}x{self.n} matrix needs {want}"
            )

    def matrix(self) -> np.ndarray:
        """Dense ``m x n`` uint8 matrix.  Only sensible for small sizes."""
        s = self.seed.to_bits()
        i = np.arange(self.m)[:, None]
        j = np.arange(self.n)[None, :]
        return s[(self.n - 1) + i - j] if self.m and self.n else np.zeros((self.m, self.n), np.uint8)


@dataclass(frozen=True)
class BlockingParams:
    """Tile shape for the iterative product; the hardware design uses 2000 x 1."""

    m_prime: int = 2000
    n_prime: int = 1

    def __post_init__(self):
        if self.m_prime < 1 or self.n_prime < 1:
            raise ParameterError(f"tile shape must be positive, got {self.m_prime}x{self.n_prime}")


def _pack(bits: np.ndarray, nwords: int) -> np.ndarray:
    buf = np.zeros(8 * nwords, dtype=np.uint8)
    packed = np.packbits(bits, bitorder="little")
    buf[: packed.size] = packed
    return buf.view("<u8")


def _hash_bits(seed_bits: np.ndarray, x_bits: np.ndarray, m: int) -> np.ndarray:
    n = x_bits.size
    out = np.zeros(m, dtype=np.uint8)
    if m == 0 or n == 0:
        return out
    nw = (n + 63) // 64 + 1
    xw = _pack(x_bits[::-1], nw)
    sw = _pack(seed_bits, (m - 1) // 64 + nw)
    windows = sliding_window_view(sw, nw)
    step = max(1, _CHUNK_WORDS // nw)
    carry = np.empty_like(xw)
    for b in range(min(64, m)):
        if b:
            carry[0] = 0
            carry[1:] = xw[:-1] >> np.uint64(64 - b)
            xs = (xw << np.uint64(b)) | carry
        else:
            xs = xw
        nrows = (m - b + 63) // 64
        for a0 in range(0, nrows, step):
            a1 = min(nrows, a0 + step)
            acc = np.bitwise_xor.reduce(windows[a0:a1] & xs, axis=1)
            out[b + 64 * a0 : b + 64 * a1 : 64] = np.bitwise_count(acc) & 1
    return out


def _check(seed: ToeplitzSeed, data: BitString) -> None:
    if len(data) != seed.n:
        raise DimensionError(f"input has {len(data)} bits, seed expects n={seed.n}")


def toeplitz_hash(seed: ToeplitzSeed, data: BitString) -> BitString:
    """Return ``T @ data`` over GF(2) as an ``m``-bit string."""
    _check(seed, data)
    return BitString.from_bits(_hash_bits(seed.seed.to_bits(), data.to_bits(), seed.m))


def blocked_toeplitz_hash(seed: ToeplitzSeed, data: BitString,
                          blocking: BlockingParams = BlockingParams()) -> BitString:
    """Tile-by-tile product over ``m' x n'`` sub-matrices.

    Every tile of a Toeplitz matrix is itself Toeplitz, with seed
    ``seed[n - n_t + i0 - j0 :][: m_t + n_t - 1]`` for the tile at row ``i0``,
    column ``j0`` of shape ``m_t x n_t``.  Row tiles are visited in order and
    each one streams over the input, XOR-accumulating the partial products.
    Narrow column tiles are grouped so that ``n' = 1`` does not mean one
    kernel call per input bit; XOR accumulation makes the grouping invisible
    in the output.
    """
    _check(seed, data)
    m, n = seed.m, seed.n
    s = seed.seed.to_bits()
    x = data.to_bits()
    out = np.zeros(m, dtype=np.uint8)
    mp, np_ = blocking.m_prime, blocking.n_prime
    span = np_ * max(1, _STREAM_BITS // np_)
    for i0 in range(0, m, mp):
        i1 = min(m, i0 + mp)
        acc = np.zeros(i1 - i0, dtype=np.uint8)
        for j0 in range(0, n, span):
            j1 = min(n, j0 + span)
            w = j1 - j0
            off = n - w + i0 - j0
            acc ^= _hash_bits(s[off : off + (i1 - i0) + w - 1], x[j0:j1], i1 - i0)
        out[i0:i1] = acc
    return BitString.from_bits(out)


def cycle_estimate(input_len: int, output_len: int, m_prime: int) -> int:
    """Clock cycles to hash one block on the pipelined ``m' x 1`` design.

    ``input_len + output_len + (input_len + m') * ceil(output_len / m')``
    """
    if m_prime < 1:
        raise ParameterError(f"m_prime must be >= 1, got {m_prime}")
    if input_len < 0 or output_len < 0:
        raise ParameterError("lengths must be non-negative")
    passes = -(-output_len // m_prime)
    return input_len + output_len + (input_len + m_prime) * passes
