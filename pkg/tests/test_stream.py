import numpy as np
import pytest

from sbhash.stream import (bernoulli, normalize_seed, random_bits, raw_words, stream_key,
                           uniform_ints, uniforms)


def test_seed_forms_agree():
    assert normalize_seed(255) == normalize_seed("ff") == normalize_seed("0xFF") == normalize_seed(b"\xff")
    assert len(normalize_seed(0)) == 32
    for bad in ("", "1" * 65, -1, 1 << 256, b"\0" * 33):
        with pytest.raises(ValueError):
            normalize_seed(bad)


def test_purposes_are_independent():
    assert stream_key(1, "a") != stream_key(1, "b")
    assert not np.array_equal(raw_words(1, "a", 0, 8), raw_words(1, "b", 0, 8))
    assert not np.array_equal(raw_words(1, "a", 0, 8), raw_words(2, "a", 0, 8))


def test_slices_match_serial():
    whole = raw_words("abc", "x", 0, 1000)
    for start, count in [(0, 1), (1, 7), (3, 4), (5, 100), (999, 1), (400, 600)]:
        np.testing.assert_array_equal(raw_words("abc", "x", start, count), whole[start:start + count])


def test_uniform_helpers():
    u = uniforms(9, "u", 0, 100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 5 * np.sqrt(1 / 12 / u.size)
    k = uniform_ints(9, "k", 0, 100_000, 7)
    assert k.min() == 0 and k.max() == 6
    counts = np.bincount(k, minlength=7)
    sigma = np.sqrt(u.size * (1 / 7) * (6 / 7))
    assert np.all(np.abs(counts - u.size / 7) < 5 * sigma)
    b = bernoulli(9, "b", 0, 100_000, 0.1)
    assert abs(b.mean() - 0.1) < 5 * np.sqrt(0.09 / b.size)


def test_random_bits_deterministic():
    a = random_bits(5, "t", 1001)
    assert len(a) == 1001 and a == random_bits(5, "t", 1001)
    # prefix property: a longer draw starts with the shorter one
    assert random_bits(5, "t", 2000)[:1001] == a
