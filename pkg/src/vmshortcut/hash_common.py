"""Hashing and bucket machinery shared by every index variant.

All variants hash with the same multiplicative (Fibonacci) function so
comparisons measure structure, not hash quality.  Directory-style indexes
route on the *top* hash bits; open-addressing tables and the in-bucket probe
use the *low* bits, keeping the two independent.

Bucket layout (one 4096-byte pool page, native endianness):

    word 0          local depth
    word 1          occupied-slot count
    words 2..511    255 entries of (u64 key, u64 value)

Key 0 is reserved as the empty-slot marker; the public APIs reject it.
"""

from __future__ import annotations

HASH_CONST = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1

PAGE_SIZE = 4096
BUCKET_HEADER_WORDS = 2
BUCKET_CAPACITY = 255  # (4096 - 16) / 16

FULL = "full"


def hash64(key: int) -> int:
    """Multiplicative 64-bit hash (golden-ratio constant, wrapping)."""
    return (key * HASH_CONST) & MASK64


def dir_slot(h: int, global_depth: int) -> int:
    """Directory slot = top `global_depth` bits of the hash."""
    if global_depth == 0:
        return 0
    return h >> (64 - global_depth)


def check_key(key: int) -> None:
    if key == 0:
        raise ValueError("key 0 is reserved as the empty-slot marker")
    if not (0 < key <= MASK64):
        raise ValueError("keys are nonzero unsigned 64-bit integers")


def _probe_start(h: int) -> int:
    return (h & 0xFFFFFFFF) % BUCKET_CAPACITY


# The bucket functions below operate on a 512-word u64 memoryview of the page.


def bucket_init(words, local_depth: int) -> None:
    words[0] = local_depth
    words[1] = 0


def bucket_local_depth(words) -> int:
    return words[0]


def bucket_set_local_depth(words, depth: int) -> None:
    words[0] = depth


def bucket_count(words) -> int:
    return words[1]


def bucket_insert(words, key: int, value: int):
    """Store or overwrite; returns True, or FULL when no slot is left."""
    check_key(key)
    pos = _probe_start(hash64(key))
    for _ in range(BUCKET_CAPACITY):
        w = BUCKET_HEADER_WORDS + 2 * pos
        k = words[w]
        if k == key:
            words[w + 1] = value
            return True
        if k == 0:
            words[w] = key
            words[w + 1] = value
            words[1] += 1
            return True
        pos += 1
        if pos == BUCKET_CAPACITY:
            pos = 0
    return FULL


def bucket_lookup(words, key: int):
    """Return the stored value, or None when absent."""
    check_key(key)
    pos = _probe_start(hash64(key))
    for _ in range(BUCKET_CAPACITY):
        w = BUCKET_HEADER_WORDS + 2 * pos
        k = words[w]
        if k == key:
            return words[w + 1]
        if k == 0:
            return None
        pos += 1
        if pos == BUCKET_CAPACITY:
            pos = 0
    return None


def bucket_entries(words):
    """Yield (key, value) for every occupied slot."""
    for i in range(BUCKET_CAPACITY):
        w = BUCKET_HEADER_WORDS + 2 * i
        if words[w] != 0:
            yield int(words[w]), int(words[w + 1])
