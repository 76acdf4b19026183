"""Shortcut nodes: page-table-backed indirection tables.

A shortcut node is one consecutive virtual region of k pages.  Slot i is the
i-th page; "pointing" slot i at a pool page means remapping that page (shared,
fixed address) onto the pool's file at the page's offset.  Resolving an
indirection then costs no explicit dereference at all - the MMU does it.

The node keeps a shadow array ``slot_offsets`` recording the intended mapping
of every slot.  The page table is the materialization of that array; tests and
the maintenance protocol diff logical vs physical state through it.

Unmapped slots stay anonymous-private: reading them yields zeros.
"""

from __future__ import annotations

import numpy as np

from vmshortcut._engine import native, require_native
from vmshortcut.page_pool import PAGE_SIZE, EmulatedPagePool, RealPagePool

UNMAPPED = 0xFFFFFFFFFFFFFFFF


def contiguous_runs(offsets):
    """Split an offset vector into (start_index, count) runs of consecutive
    pool pages; each run can be realized by a single remap call."""
    runs = []
    i, n = 0, len(offsets)
    while i < n:
        run = 1
        while i + run < n and int(offsets[i + run]) == int(offsets[i]) + run * PAGE_SIZE:
            run += 1
        runs.append((i, run))
        i += run
    return runs


class _BaseShortcutNode:
    """Slot bookkeeping shared by both backends."""

    def __init__(self, pool, slot_count: int):
        if slot_count < 1:
            raise ValueError("slot_count must be >= 1")
        self.pool = pool
        self.slot_count = slot_count
        self.slot_offsets = np.full(slot_count, UNMAPPED, dtype=np.uint64)
        self.populated = False
        self.remap_calls = 0
        self.alive = True

    def set_indirection(self, slot: int, offset: int) -> None:
        if not (0 <= slot < self.slot_count):
            raise IndexError(f"slot {slot} out of range")
        self._remap(slot, np.array([offset], dtype=np.uint64), coalesce=False)
        self.slot_offsets[slot] = offset
        self.populated = False

    def set_indirections_batch(self, start_slot: int, offsets, coalesce: bool = True) -> None:
        offsets = np.ascontiguousarray(offsets, dtype=np.uint64)
        if start_slot + len(offsets) > self.slot_count:
            raise IndexError("batch exceeds slot range")
        self._remap(start_slot, offsets, coalesce=coalesce)
        self.slot_offsets[start_slot : start_slot + len(offsets)] = offsets
        self.populated = False

    def populate(self, slots=None) -> None:
        raise NotImplementedError

    def destroy(self) -> None:
        if not self.alive:
            raise AssertionError("shortcut node destroyed twice")
        self.alive = False

    def _remap(self, start_slot: int, offsets, coalesce: bool) -> None:
        raise NotImplementedError

    # -- read access (slot page as 512 u64 words) --------------------------

    def page_words(self, slot: int) -> memoryview:
        raise NotImplementedError

    def read_bytes(self, slot: int, start: int, length: int) -> bytes:
        mv = self.page_words(slot)
        return bytes(memoryview(mv).cast("B")[start : start + length])


class RealShortcutNode(_BaseShortcutNode):
    """A reserved virtual region whose per-page mappings are rewired live."""

    backend = "real"

    def __init__(self, pool: RealPagePool, slot_count: int):
        require_native("shortcut nodes on the real backend")
        if not isinstance(pool, RealPagePool):
            raise TypeError("RealShortcutNode needs a RealPagePool")
        super().__init__(pool, slot_count)
        self.base = native.reserve_region(slot_count * PAGE_SIZE)
        self._region = np.frombuffer(
            memoryview(native.wrap_region(self.base, slot_count * PAGE_SIZE)),
            dtype=np.uint8,
        )

    def _remap(self, start_slot: int, offsets, coalesce: bool) -> None:
        self.remap_calls += native.remap_slots(
            self.base, self.pool.fd, offsets, start_slot, coalesce
        )

    def populate(self, slots=None) -> None:
        """Force page-table entries to exist for mapped slots (touch loop).

        Two passes: paravirtualized kernels may install translations lazily
        or partially on the first touch; the second pass makes population
        complete (and costs only plain reads where the first sufficed).
        """
        if slots is None:
            mapped = np.flatnonzero(self.slot_offsets != np.uint64(UNMAPPED))
        else:
            mapped = [s for s in slots if int(self.slot_offsets[s]) != UNMAPPED]
        for _ in range(2):
            for s in mapped:
                native.touch_pages(self.base + int(s) * PAGE_SIZE, 1)
        self.populated = True

    def populate_all(self) -> None:
        """Touch every page of the region regardless of mapping state."""
        native.touch_pages(self.base, self.slot_count)
        native.touch_pages(self.base, self.slot_count)
        self.populated = True

    def page_words(self, slot: int) -> memoryview:
        return (
            memoryview(self._region)[slot * PAGE_SIZE : (slot + 1) * PAGE_SIZE].cast("Q")
        )

    def destroy(self) -> None:
        super().destroy()
        self._region = None
        native.unmap_region(self.base, self.slot_count * PAGE_SIZE)


class EmulatedShortcutNode(_BaseShortcutNode):
    """Fallback node: the shadow array *is* the mapping.

    Reads resolve through ``slot_offsets`` into the pool, which preserves every
    functional invariant (aliasing included) while timing properties are
    meaningless.  The remap-call counter models coalescing identically.
    """

    backend = "emulated"

    def __init__(self, pool: EmulatedPagePool, slot_count: int):
        super().__init__(pool, slot_count)
        self.base = 0
        self._zero_page = np.zeros(PAGE_SIZE, dtype=np.uint8)

    def _remap(self, start_slot: int, offsets, coalesce: bool) -> None:
        if coalesce:
            self.remap_calls += len(contiguous_runs(offsets))
        else:
            self.remap_calls += len(offsets)

    def populate(self, slots=None) -> None:
        self.populated = True

    populate_all = populate

    def page_words(self, slot: int) -> memoryview:
        off = int(self.slot_offsets[slot])
        if off == UNMAPPED:
            return memoryview(self._zero_page).cast("Q")
        return self.pool.page_words(off)


def reserve(pool, slot_count: int) -> _BaseShortcutNode:
    """Reserve a shortcut node over the pool's backend."""
    if isinstance(pool, RealPagePool):
        return RealShortcutNode(pool, slot_count)
    return EmulatedShortcutNode(pool, slot_count)
