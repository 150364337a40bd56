"""Keyed, counter-based pseudorandom streams.

Every consumer draws from its own stream, keyed by ``SHA-256(master_seed ||
purpose)`` and fed to the Philox-4x64 counter generator.  Word ``k`` of a
stream depends only on ``(master_seed, purpose, k)``, so any slice can be
regenerated without replaying what came before, and chunked or parallel
evaluation reproduces the serial result exactly.
"""

from __future__ import annotations

import hashlib
from typing import Union

import numpy as np

from .bitstring import BitString

Seed = Union[bytes, int, str]

_INV53 = 1.0 / (1 << 53)


def normalize_seed(seed: Seed) -> bytes:
    """Coerce a master seed to 32 bytes.

    Accepts raw bytes (at most 32), a non-negative int below 2**256, or a hex
    string of at most 64 digits (optionally ``0x``-prefixed).
    """
    if isinstance(seed, str):
        text = seed[2:] if seed.lower().startswith("0x") else seed
        if not text or len(text) > 64:
            raise ValueError(f"hex seed must have 1..64 digits, got {len(text)}")
        seed = int(text, 16)
    if isinstance(seed, int):
        if not 0 <= seed < 1 << 256:
            raise ValueError("integer seed must lie in [0, 2**256)")
        return seed.to_bytes(32, "big")
    seed = bytes(seed)
    if len(seed) > 32:
        raise ValueError("byte seed longer than 32 bytes")
    return seed.rjust(32, b"\0")


def stream_key(seed: Seed, purpose: str) -> int:
    digest = hashlib.sha256(normalize_seed(seed) + b"\0" + purpose.encode()).digest()
    return int.from_bytes(digest[:16], "little")


def raw_words(seed: Seed, purpose: str, start: int, count: int) -> np.ndarray:
    """Words ``start .. start + count - 1`` of the stream as uint64."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    block, skip = divmod(start, 4)
    gen = np.random.Philox(key=stream_key(seed, purpose), counter=block)
    return gen.random_raw(count + skip)[skip:]


def uniforms(seed: Seed, purpose: str, start: int, count: int) -> np.ndarray:
    """Doubles in ``[0, 1)`` built from the top 53 bits of each word."""
    return (raw_words(seed, purpose, start, count) >> np.uint64(11)).astype(np.float64) * _INV53


def uniform_ints(seed: Seed, purpose: str, start: int, count: int, high: int) -> np.ndarray:
    """Integers uniform on ``[0, high)``, one stream word each."""
    if high < 1:
        raise ValueError("high must be >= 1")
    v = np.floor(uniforms(seed, purpose, start, count) * high).astype(np.int64)
    return np.minimum(v, high - 1)


def bernoulli(seed: Seed, purpose: str, start: int, count: int, p: float) -> np.ndarray:
    return uniforms(seed, purpose, start, count) < p


def random_bits(seed: Seed, purpose: str, nbits: int) -> BitString:
    words = raw_words(seed, purpose, 0, (nbits + 63) // 64)
    return BitString.from_words(words, nbits)
