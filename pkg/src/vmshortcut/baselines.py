"""Comparison hash tables: open addressing, incremental rehash, chaining.

All three share the multiplicative hash; the slot index uses the *low* hash
bits (power-of-two mask), unlike the directory indexes which use top bits.
Scalar methods are the readable reference; ``*_many`` methods dispatch to the
compiled kernels when available and must produce bit-identical table states.
"""

from __future__ import annotations

import numpy as np

from vmshortcut._engine import HAVE_NATIVE, native
from vmshortcut.hash_common import check_key, hash64

INITIAL_SLOTS = 256  # 4 KB worth of 16-byte slots
DEFAULT_MAX_LOAD = 0.35
DEFAULT_MIGRATE_BATCH = 128

CH_NONE = 0xFFFFFFFFFFFFFFFF
CH_WORDS = 16
CH_CAP = 7  # entries per 128-byte overflow bucket (16-byte header)


def _check_pow2(n: int) -> None:
    if n < 1 or n & (n - 1):
        raise ValueError("slot count must be a power of two")


class OpenTable:
    """Open-addressing / linear-probing table, doubling on load > max_load."""

    def __init__(self, initial_slots: int = INITIAL_SLOTS, max_load: float = DEFAULT_MAX_LOAD):
        _check_pow2(initial_slots)
        self.max_load = max_load
        self.table = np.zeros(2 * initial_slots, dtype=np.uint64)
        self.count = 0

    @property
    def n_slots(self) -> int:
        return len(self.table) // 2

    @property
    def load(self) -> float:
        return self.count / self.n_slots

    def _grow_at(self) -> int:
        return int(self.max_load * self.n_slots)

    def insert(self, key: int, value: int) -> None:
        check_key(key)
        if self._insert_into(self.table, key, value):
            self.count += 1
        if self.count > self._grow_at():
            self._rehash()

    @staticmethod
    def _insert_into(table, key: int, value: int) -> bool:
        mask = len(table) // 2 - 1
        idx = hash64(key) & mask
        while True:
            k = int(table[2 * idx])
            if k == key:
                table[2 * idx + 1] = value
                return False
            if k == 0:
                table[2 * idx] = key
                table[2 * idx + 1] = value
                return True
            idx = (idx + 1) & mask

    def _rehash(self) -> None:
        old = self.table
        self.table = np.zeros(2 * len(old), dtype=np.uint64)
        if HAVE_NATIVE:
            native.ht_rehash(old, self.table)
        else:
            for i in range(len(old) // 2):
                if old[2 * i]:
                    self._insert_into(self.table, int(old[2 * i]), int(old[2 * i + 1]))

    def lookup(self, key: int):
        check_key(key)
        mask = self.n_slots - 1
        idx = hash64(key) & mask
        while True:
            k = int(self.table[2 * idx])
            if k == key:
                return int(self.table[2 * idx + 1])
            if k == 0:
                return None
            idx = (idx + 1) & mask

    def insert_many(self, keys, values) -> None:
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        values = np.ascontiguousarray(values, dtype=np.uint64)
        if not HAVE_NATIVE:
            for k, v in zip(keys, values):
                self.insert(int(k), int(v))
            return
        i = 0
        while i < len(keys):
            i, self.count = native.ht_insert_batch(
                self.table, self.count, self._grow_at(), keys, values, i
            )
            if self.count > self._grow_at():
                self._rehash()

    def lookup_many(self, keys, out=None, found=None):
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        if out is None:
            out = np.zeros(len(keys), dtype=np.uint64)
        if found is None:
            found = np.zeros(len(keys), dtype=np.uint8)
        if HAVE_NATIVE:
            native.ht_lookup_batch(self.table, keys, out, found)
        else:
            for i, k in enumerate(keys):
                v = self.lookup(int(k))
                if v is not None:
                    out[i] = v
                    found[i] = 1
        return out, found


class IncrementalTable:
    """Open addressing with incremental rehash: growth allocates the new table
    and every subsequent access (insert or lookup) migrates up to
    ``migrate_batch`` entries until the old table empties.

    While both tables coexist, lookups probe the one holding more entries
    first.  Inserts always target the new table.
    """

    def __init__(
        self,
        initial_slots: int = INITIAL_SLOTS,
        max_load: float = DEFAULT_MAX_LOAD,
        migrate_batch: int = DEFAULT_MIGRATE_BATCH,
    ):
        _check_pow2(initial_slots)
        if migrate_batch < 1:
            raise ValueError("migrate_batch must be >= 1")
        self.max_load = max_load
        self.migrate_batch = migrate_batch
        self.new = np.zeros(2 * initial_slots, dtype=np.uint64)
        self.old = None
        # [0] old_count, [1] new_count, [2] migrate cursor, [3] migrating flag
        self.state = np.zeros(4, dtype=np.int64)
        self._dummy = np.zeros(2, dtype=np.uint64)

    @property
    def migrating(self) -> bool:
        return bool(self.state[3])

    @property
    def count(self) -> int:
        return int(self.state[0] + self.state[1])

    def _grow_at(self) -> int:
        return int(self.max_load * (len(self.new) // 2))

    def _start_migration(self) -> None:
        self.old = self.new
        self.new = np.zeros(2 * len(self.old), dtype=np.uint64)
        self.state[0] = self.state[1]
        self.state[1] = 0
        self.state[2] = 0
        self.state[3] = 1

    def _migrate_step(self) -> None:
        moved = 0
        cur = int(self.state[2])
        slots = len(self.old) // 2
        while moved < self.migrate_batch and self.state[0] > 0 and cur < slots:
            if self.old[2 * cur]:
                OpenTable._insert_into(self.new, int(self.old[2 * cur]), int(self.old[2 * cur + 1]))
                self.old[2 * cur] = 0
                self.state[0] -= 1
                self.state[1] += 1
                moved += 1
            cur += 1
        self.state[2] = cur
        if self.state[0] == 0 or cur >= slots:
            self._finish_migration()

    def _finish_migration(self) -> None:
        self.state[3] = 0
        self.state[2] = 0
        self.old = None

    def insert(self, key: int, value: int) -> None:
        check_key(key)
        if self.migrating:
            self._migrate_step()
            if OpenTable._insert_into(self.new, key, value):
                self.state[1] += 1
        else:
            if OpenTable._insert_into(self.new, key, value):
                self.state[1] += 1
            if self.state[1] > self._grow_at():
                self._start_migration()

    def lookup(self, key: int):
        check_key(key)
        if self.migrating:
            self._migrate_step()
        if self.migrating and self.state[0] > self.state[1]:
            v = self._probe(self.old, key)
            if v is None:
                v = self._probe(self.new, key)
            return v
        v = self._probe(self.new, key)
        if v is None and self.migrating:
            v = self._probe(self.old, key)
        return v

    @staticmethod
    def _probe(table, key: int):
        mask = len(table) // 2 - 1
        idx = hash64(key) & mask
        while True:
            k = int(table[2 * idx])
            if k == key:
                return int(table[2 * idx + 1])
            if k == 0:
                return None
            idx = (idx + 1) & mask

    def insert_many(self, keys, values) -> None:
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        values = np.ascontiguousarray(values, dtype=np.uint64)
        if not HAVE_NATIVE:
            for k, v in zip(keys, values):
                self.insert(int(k), int(v))
            return
        i = 0
        while i < len(keys):
            old = self.old if self.old is not None else self._dummy
            i, reason = native.hti_insert_batch(
                old, self.new, self.state, self._grow_at(), self.migrate_batch,
                keys, values, i,
            )
            if reason == 1:
                self._start_migration()
            elif reason == 2:
                self._finish_migration()

    def lookup_many(self, keys, out=None, found=None):
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        if out is None:
            out = np.zeros(len(keys), dtype=np.uint64)
        if found is None:
            found = np.zeros(len(keys), dtype=np.uint8)
        if HAVE_NATIVE:
            old = self.old if self.old is not None else self._dummy
            _, finished = native.hti_lookup_batch(
                old, self.new, self.state, self.migrate_batch, keys, out, found
            )
            if finished:
                self._finish_migration()
        else:
            for i, k in enumerate(keys):
                v = self.lookup(int(k))
                if v is not None:
                    out[i] = v
                    found[i] = 1
        return out, found


class ChainedTable:
    """Fixed-size slot array with 128-byte overflow buckets.

    The first key of a slot stays inline; later colliding keys append to a
    chain in insertion order (a new bucket is linked when the tail fills).
    """

    def __init__(self, slots: int, initial_chain_buckets: int = 64):
        _check_pow2(slots)
        self.slots = np.zeros(2 * slots, dtype=np.uint64)
        self.heads = np.full(slots, CH_NONE, dtype=np.uint64)
        self.chains = np.zeros(CH_WORDS * max(1, initial_chain_buckets), dtype=np.uint64)
        self.state = np.array([0, max(1, initial_chain_buckets)], dtype=np.int64)

    @property
    def n_slots(self) -> int:
        return len(self.slots) // 2

    @property
    def chain_buckets_used(self) -> int:
        return int(self.state[0])

    def _grow_chains(self) -> None:
        cap = int(self.state[1])
        new = np.zeros(CH_WORDS * cap * 2, dtype=np.uint64)
        new[: CH_WORDS * cap] = self.chains
        self.chains = new
        self.state[1] = cap * 2

    def _new_chain_bucket(self) -> int:
        if self.state[0] >= self.state[1]:
            self._grow_chains()
        idx = int(self.state[0])
        self.state[0] += 1
        b = CH_WORDS * idx
        self.chains[b] = CH_NONE
        self.chains[b + 1] = 0
        return idx

    def insert(self, key: int, value: int) -> None:
        check_key(key)
        idx = hash64(key) & (self.n_slots - 1)
        k = int(self.slots[2 * idx])
        if k == 0:
            self.slots[2 * idx] = key
            self.slots[2 * idx + 1] = value
            return
        if k == key:
            self.slots[2 * idx + 1] = value
            return
        prev = CH_NONE
        cur = int(self.heads[idx])
        while cur != CH_NONE:
            b = CH_WORDS * cur
            cnt = int(self.chains[b + 1])
            for j in range(cnt):
                if int(self.chains[b + 2 + 2 * j]) == key:
                    self.chains[b + 2 + 2 * j + 1] = value
                    return
            prev = cur
            cur = int(self.chains[b])
        if prev != CH_NONE and int(self.chains[CH_WORDS * prev + 1]) < CH_CAP:
            b = CH_WORDS * prev
            cnt = int(self.chains[b + 1])
            self.chains[b + 2 + 2 * cnt] = key
            self.chains[b + 2 + 2 * cnt + 1] = value
            self.chains[b + 1] = cnt + 1
            return
        fresh = self._new_chain_bucket()
        b = CH_WORDS * fresh
        self.chains[b + 1] = 1
        self.chains[b + 2] = key
        self.chains[b + 3] = value
        if prev == CH_NONE:
            self.heads[idx] = fresh
        else:
            self.chains[CH_WORDS * prev] = fresh

    def lookup(self, key: int):
        check_key(key)
        idx = hash64(key) & (self.n_slots - 1)
        k = int(self.slots[2 * idx])
        if k == key:
            return int(self.slots[2 * idx + 1])
        if k == 0:
            return None
        cur = int(self.heads[idx])
        while cur != CH_NONE:
            b = CH_WORDS * cur
            for j in range(int(self.chains[b + 1])):
                if int(self.chains[b + 2 + 2 * j]) == key:
                    return int(self.chains[b + 2 + 2 * j + 1])
            cur = int(self.chains[b])
        return None

    def chain_length(self, key: int) -> int:
        """Number of overflow buckets chained at the key's slot (test helper)."""
        idx = hash64(key) & (self.n_slots - 1)
        n, cur = 0, int(self.heads[idx])
        while cur != CH_NONE:
            n += 1
            cur = int(self.chains[CH_WORDS * cur])
        return n

    def insert_many(self, keys, values) -> None:
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        values = np.ascontiguousarray(values, dtype=np.uint64)
        if not HAVE_NATIVE:
            for k, v in zip(keys, values):
                self.insert(int(k), int(v))
            return
        i = 0
        while i < len(keys):
            i, needs_space = native.ch_insert_batch(
                self.slots, self.heads, self.chains, self.state, keys, values, i
            )
            if needs_space:
                self._grow_chains()

    def lookup_many(self, keys, out=None, found=None):
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        if out is None:
            out = np.zeros(len(keys), dtype=np.uint64)
        if found is None:
            found = np.zeros(len(keys), dtype=np.uint8)
        if HAVE_NATIVE:
            native.ch_lookup_batch(self.slots, self.heads, self.chains, keys, out, found)
        else:
            for i, k in enumerate(keys):
                v = self.lookup(int(k))
                if v is not None:
                    out[i] = v
                    found[i] = 1
        return out, found
