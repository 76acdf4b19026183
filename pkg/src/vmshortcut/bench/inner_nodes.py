"""Builders shared by the inner-node microbenchmarks (motivation, fan-in,
creation): one pool of leaf pages indexed by (a) a pointer-array inner node
and (b) a shortcut region, plus the checksum bookkeeping that turns every
timing run into a correctness run.
"""

from __future__ import annotations

import numpy as np

from vmshortcut._engine import native
from vmshortcut.page_pool import PAGE_SIZE, RealPagePool
from vmshortcut.rewiring import RealShortcutNode

from .recorder import BenchCorrectnessError


def build_leaves(pool: RealPagePool, n_leaves: int) -> np.ndarray:
    """Acquire n leaf pages and fill page j entirely with the value j.

    Any in-page read then returns the leaf id, so a sum over accesses is a
    cheap exact checksum.  Returns the page offsets.
    """
    offsets = pool.acquire_pages(n_leaves)
    words = np.frombuffer(pool.buffer(), dtype=np.uint64)
    page0 = int(offsets[0]) // 8
    view = words[page0 : page0 + n_leaves * (PAGE_SIZE // 8)].reshape(n_leaves, -1)
    view[:] = np.arange(n_leaves, dtype=np.uint64)[:, None]
    return offsets


def slot_offsets_for_fanin(leaf_offsets: np.ndarray, n_slots: int, fanin: int) -> np.ndarray:
    """Slot i references leaf i // fanin (neighboring slots share a leaf)."""
    slot_to_leaf = np.arange(n_slots, dtype=np.int64) // fanin
    return leaf_offsets[slot_to_leaf]


def build_traditional(pool: RealPagePool, slot_offsets: np.ndarray) -> np.ndarray:
    """Pointer-array inner node: slot i holds the leaf's virtual address."""
    return slot_offsets + np.uint64(pool.view_address(0))


def build_shortcut(pool: RealPagePool, slot_offsets: np.ndarray) -> RealShortcutNode:
    node = RealShortcutNode(pool, len(slot_offsets))
    node.set_indirections_batch(0, slot_offsets)
    node.populate_all()
    return node


def expected_checksum(slots: np.ndarray, fanin: int) -> int:
    return int((slots // np.uint32(fanin)).sum(dtype=np.uint64))


def check_sum(label: str, actual: int, expected: int) -> None:
    if int(actual) != int(expected):
        raise BenchCorrectnessError(
            f"{label}: checksum {actual} != expected {expected}"
        )


def timed_access_traditional(inner: np.ndarray, slots, inpage) -> tuple[int, int]:
    import time

    t0 = time.perf_counter_ns()
    acc = native.access_ptr_array(inner.ctypes.data, slots, inpage)
    return time.perf_counter_ns() - t0, acc


def timed_access_shortcut(base: int, slots, inpage) -> tuple[int, int]:
    import time

    t0 = time.perf_counter_ns()
    acc = native.access_region(base, slots, inpage)
    return time.perf_counter_ns() - t0, acc
