"""Deterministic key and access-pattern generation.

Given a seed, every sequence is reproducible bit-for-bit across runs,
backends, and engines (numpy's PCG64 stream).
"""

from __future__ import annotations

import numpy as np

PAGE_SIZE = 4096


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def make_keys(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform random nonzero 64-bit keys."""
    return rng.integers(1, 2**64, size=n, dtype=np.uint64)


def make_values(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2**64, size=n, dtype=np.uint64)


def make_slot_accesses(rng: np.random.Generator, n_accesses: int, n_slots: int):
    """Random (slot, in-page byte offset) pairs; offsets are 8-aligned."""
    slots = rng.integers(0, n_slots, size=n_accesses, dtype=np.uint32)
    inpage = rng.integers(0, PAGE_SIZE // 8, size=n_accesses, dtype=np.uint32) * 8
    return slots, inpage.astype(np.uint32)


def sample_hits(rng: np.random.Generator, keys: np.ndarray, m: int) -> np.ndarray:
    """m keys drawn (with replacement) from the inserted key set."""
    idx = rng.integers(0, len(keys), size=m)
    return keys[idx]
