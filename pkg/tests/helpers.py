"""Test utilities: crafting keys with chosen hash bits.

The multiplicative hash is a bijection on 64-bit ints (odd constant), so any
desired hash value can be hit exactly by multiplying with the modular
inverse.  That lets tests construct directory collisions and prefix patterns
deliberately.
"""

from vmshortcut.hash_common import HASH_CONST, MASK64, hash64

HASH_INV = pow(HASH_CONST, -1, 2**64)


def key_for_hash(h: int) -> int:
    """The unique key whose hash is exactly `h` (h must not be 0)."""
    k = (h * HASH_INV) & MASK64
    assert k != 0 and hash64(k) == h
    return k


def key_with_prefix(prefix: int, bits: int, salt: int = 1) -> int:
    """A key whose hash starts with `prefix` (a `bits`-bit pattern).

    The remaining hash bits are a dispersed function of `salt` so that sets
    of same-prefix keys still split naturally below the prefix.
    """
    suffix = (salt * HASH_CONST) & ((1 << (64 - bits)) - 1)
    h = (prefix << (64 - bits)) | suffix
    if h == 0:
        h = 1
    return key_for_hash(h)


def keys_for_bucket(prefix: int, bits: int, n: int):
    """n distinct keys all hashing into the `prefix` bucket."""
    return [key_with_prefix(prefix, bits, salt) for salt in range(1, n + 1)]
