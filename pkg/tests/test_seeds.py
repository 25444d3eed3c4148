import numpy as np

from ssrmap.seeds import fnv1a64, rng_for


def test_fnv1a64_reference_vectors():
    # standard FNV-1a 64-bit test vectors
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C
    assert fnv1a64("foobar") == 0x85944171F73967E8


def test_rng_for_is_deterministic():
    a = rng_for("x", 1, 2.5).standard_normal(8)
    b = rng_for("x", 1, 2.5).standard_normal(8)
    np.testing.assert_array_equal(a, b)
    c = rng_for("x", 1, 2.6).standard_normal(8)
    assert not np.array_equal(a, c)
