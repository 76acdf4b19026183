"""Classical extendible hashing over pool-allocated 4 KB buckets.

The directory is an array of 2^global_depth bucket references indexed by the
top bits of the hash.  References are pool byte-offsets, not raw addresses,
so they stay valid when the pool's linear view moves on growth; dereferencing
costs one add through the view.

A full bucket splits into two fresh buckets at local depth + 1 (entries
rehashed by the next hash bit); when the bucket's local depth equals the
global depth the directory doubles first.  Splits are reported as explicit
directory-slot updates so a shortcut directory can replay them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vmshortcut._engine import HAVE_NATIVE, native
from vmshortcut import hash_common as hc
from vmshortcut.hash_common import (
    BUCKET_CAPACITY,
    FULL,
    bucket_init,
    bucket_insert,
    bucket_local_depth,
    bucket_lookup,
    check_key,
    dir_slot,
    hash64,
)

MAX_DOUBLINGS_PER_INSERT = 16


class CapacityError(Exception):
    """A single insert forced more consecutive doublings than the cap allows."""


@dataclass
class SplitEvent:
    """One bucket split: the slot updates it performed, in directory order."""

    doubled: bool
    slot_updates: list  # [(slot_index, new_pool_offset), ...]
    freed_offset: int


@dataclass
class SplitReport:
    events: list = field(default_factory=list)

    @property
    def doubled(self) -> bool:
        return any(e.doubled for e in self.events)

    @property
    def slot_updates(self):
        return [u for e in self.events for u in e.slot_updates]


class ExtendibleIndex:
    """Single-writer extendible hashing index.

    ``free_page`` lets a wrapper defer returning split-off bucket pages to the
    pool (the shortcut directory must not see freed offsets reused while its
    stale mappings still reference them).
    """

    def __init__(self, pool, validate_splits: bool = False, free_page=None):
        self.pool = pool
        self.global_depth = 0
        self.num_buckets = 1
        self.validate_splits = validate_splits
        self._free_page = free_page if free_page is not None else pool.release_page
        first = pool.acquire_page()
        bucket_init(pool.page_words(first), 0)
        self.directory = np.array([first], dtype=np.uint64)

    # -- queries ------------------------------------------------------------

    def lookup(self, key: int):
        check_key(key)
        h = hash64(key)
        off = int(self.directory[dir_slot(h, self.global_depth)])
        return bucket_lookup(self.pool.page_words(off), key)

    def lookup_many(self, keys, out=None, found=None):
        """Batch lookups; returns (values, found) arrays."""
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        if out is None:
            out = np.zeros(len(keys), dtype=np.uint64)
        if found is None:
            found = np.zeros(len(keys), dtype=np.uint8)
        if HAVE_NATIVE:
            native.eh_lookup_batch(
                self.directory, self.global_depth, self.pool.buffer(), keys, out, found
            )
        else:
            for i, k in enumerate(keys):
                v = self.lookup(int(k))
                if v is not None:
                    out[i] = v
                    found[i] = 1
        return out, found

    @property
    def average_fanin(self) -> float:
        return (1 << self.global_depth) / self.num_buckets

    # -- mutation -----------------------------------------------------------

    def insert(self, key: int, value: int) -> SplitReport:
        check_key(key)
        report = SplitReport()
        h = hash64(key)
        doublings = 0
        while True:
            slot = dir_slot(h, self.global_depth)
            off = int(self.directory[slot])
            if bucket_insert(self.pool.page_words(off), key, value) is not FULL:
                return report
            event = self._split(slot)
            report.events.append(event)
            if event.doubled:
                doublings += 1
                if doublings > MAX_DOUBLINGS_PER_INSERT:
                    raise CapacityError(
                        f"insert of key {key} exceeded {MAX_DOUBLINGS_PER_INSERT} doublings"
                    )

    def insert_many(self, keys, values, on_event=None) -> SplitReport:
        """Batch insert.  Split events are delivered to `on_event` as they
        happen (directory state is current at call time); without a callback
        the returned report aggregates them in order."""
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        values = np.ascontiguousarray(values, dtype=np.uint64)
        report = SplitReport()
        sink = on_event if on_event is not None else report.events.append
        n = len(keys)
        if HAVE_NATIVE:
            i = 0
            while i < n:
                i = native.eh_insert_batch(
                    self.directory, self.global_depth, self.pool.buffer(), keys, values, i
                )
                if i < n:
                    # keys[i] hit a full bucket; split and retry it
                    h = hash64(int(keys[i]))
                    sink(self._split(dir_slot(h, self.global_depth)))
        else:
            for k, v in zip(keys, values):
                for ev in self.insert(int(k), int(v)).events:
                    sink(ev)
        return report

    # -- splitting ----------------------------------------------------------

    def _double(self) -> None:
        """Duplicate every slot's reference; global depth grows by one."""
        self.directory = np.repeat(self.directory, 2)
        self.global_depth += 1

    def _split(self, slot: int) -> SplitEvent:
        """Split the bucket referenced by `slot` into two new buckets."""
        old_off = int(self.directory[slot])
        depth = int(bucket_local_depth(self.pool.page_words(old_off)))
        doubled = False
        if depth == self.global_depth:
            self._double()
            slot *= 2
            doubled = True
        gd = self.global_depth
        # acquire before taking any page views: growth invalidates them
        a_off = self.pool.acquire_page()
        b_off = self.pool.acquire_page()
        new_depth = depth + 1
        if HAVE_NATIVE:
            native.split_bucket(self.pool.buffer(), old_off, a_off, b_off, new_depth)
        else:
            self._split_python(old_off, a_off, b_off, new_depth)
        run = 1 << (gd - depth)
        base = (slot >> (gd - depth)) << (gd - depth)
        half = run // 2
        self.directory[base : base + half] = a_off
        self.directory[base + half : base + run] = b_off
        updates = [(i, a_off) for i in range(base, base + half)]
        updates += [(i, b_off) for i in range(base + half, base + run)]
        self.num_buckets += 1
        self._free_page(old_off)
        if self.validate_splits:
            self.check_structure()
            self.check_bucket_prefixes(a_off, base)
            self.check_bucket_prefixes(b_off, base + half)
        return SplitEvent(doubled, updates, old_off)

    def _split_python(self, old_off, a_off, b_off, new_depth):
        old = list(hc.bucket_entries(self.pool.page_words(old_off)))
        a = self.pool.page_words(a_off)
        b = self.pool.page_words(b_off)
        bucket_init(a, new_depth)
        bucket_init(b, new_depth)
        bit = 64 - new_depth
        for k, v in old:
            target = b if (hash64(k) >> bit) & 1 else a
            bucket_insert(target, k, v)

    # -- invariants ----------------------------------------------------------

    def check_structure(self) -> None:
        """Prefix-consistency and the fan-in law over the whole directory."""
        n = len(self.directory)
        assert n == 1 << self.global_depth
        changes = np.flatnonzero(np.diff(self.directory)) + 1
        starts = np.concatenate(([0], changes))
        ends = np.concatenate((changes, [n]))
        seen = set()
        fanin_sum = 0
        for s, e in zip(starts, ends):
            off = int(self.directory[s])
            assert off not in seen, f"bucket {off} referenced by non-consecutive runs"
            seen.add(off)
            d = int(bucket_local_depth(self.pool.page_words(off)))
            run = 1 << (self.global_depth - d)
            assert e - s == run, f"bucket {off}: run {e - s}, expected {run}"
            assert s % run == 0, f"bucket {off}: run not aligned to its prefix"
            fanin_sum += run
        assert fanin_sum == n
        assert len(seen) == self.num_buckets

    def check_bucket_prefixes(self, off: int, any_slot: int) -> None:
        """Every resident key shares the bucket's local-depth hash prefix."""
        words = self.pool.page_words(off)
        d = int(bucket_local_depth(words))
        prefix = any_slot >> (self.global_depth - d)
        for k, _ in hc.bucket_entries(words):
            assert hash64(k) >> (64 - d) == prefix, f"key {k} in wrong bucket"

    def check_all_entries(self) -> None:
        for slot in range(len(self.directory)):
            self.check_bucket_prefixes(int(self.directory[slot]), slot)
