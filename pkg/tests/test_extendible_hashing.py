import numpy as np
import pytest

from vmshortcut import create_pool
from vmshortcut.extendible_hashing import ExtendibleIndex
from vmshortcut.hash_common import BUCKET_CAPACITY, bucket_local_depth, hash64

from helpers import key_with_prefix, keys_for_bucket


@pytest.fixture
def index(pool):
    return ExtendibleIndex(pool)


def fill_bucket(index, prefix, bits):
    """Insert enough same-prefix keys to overflow that bucket once."""
    for k in keys_for_bucket(prefix, bits, BUCKET_CAPACITY + 1):
        index.insert(k, k & 0xFFFF)


def test_new_index_shape(index):
    assert index.global_depth == 0
    assert index.num_buckets == 1
    assert len(index.directory) == 1
    assert index.average_fanin == 1.0


def test_lookup_on_fresh_index_absent(index):
    assert index.lookup(12345) is None


def test_insert_then_lookup(index):
    index.insert(42, 4200)
    assert index.lookup(42) == 4200


def test_key_zero_rejected(index):
    with pytest.raises(ValueError):
        index.insert(0, 1)
    with pytest.raises(ValueError):
        index.lookup(0)


def test_first_overflow_doubles_directory(index):
    fill_bucket(index, 0, 1)
    assert index.global_depth >= 1
    assert len(index.directory) == 2 ** index.global_depth
    index.check_structure()
    index.check_all_entries()


def test_split_into_prefix_buckets(pool):
    """Overflowing the 1xxx bucket at depth 1 creates 10xx and 11xx buckets
    and leaves the 0xxx bucket doubly referenced."""
    index = ExtendibleIndex(pool)
    # reach depth 1 deterministically: overflow the root bucket with keys
    # evenly split between top-bit 0 and 1
    half = BUCKET_CAPACITY // 2 + 1
    for k in keys_for_bucket(0, 1, half):
        index.insert(k, 1)
    for k in keys_for_bucket(1, 1, half):
        index.insert(k, 1)
    assert index.global_depth == 1
    assert index.num_buckets == 2
    # now overflow the 1xxx bucket: mix of 10 and 11 prefixes
    for k in keys_for_bucket(0b10, 2, half):
        index.insert(k, 2)
    for k in keys_for_bucket(0b11, 2, half):
        index.insert(k, 2)
    assert index.global_depth == 2
    assert index.num_buckets == 3
    # bucket 0xxx untouched: local depth 1, referenced by slots 00 and 01
    assert index.directory[0] == index.directory[1]
    zero_bucket = pool.page_words(int(index.directory[0]))
    assert bucket_local_depth(zero_bucket) == 1
    assert index.directory[2] != index.directory[3]
    index.check_structure()
    index.check_all_entries()


def test_split_without_doubling(pool):
    """With global depth above a bucket's local depth, its split only
    rewrites directory slots (no doubling)."""
    index = ExtendibleIndex(pool)
    half = BUCKET_CAPACITY // 2 + 1
    for k in keys_for_bucket(0, 1, half):
        index.insert(k, 1)
    for k in keys_for_bucket(1, 1, half):
        index.insert(k, 1)
    for k in keys_for_bucket(0b10, 2, half):
        index.insert(k, 2)
    for k in keys_for_bucket(0b11, 2, half):
        index.insert(k, 2)
    gd = index.global_depth
    assert gd == 2
    # the 0xxx bucket still has local depth 1; overflowing it must not double
    report_events = []
    for salt in range(1000, 1000 + BUCKET_CAPACITY + 1):
        for prefix in (0b00, 0b01):
            r = index.insert(key_with_prefix(prefix, 2, salt), 3)
            report_events.extend(r.events)
        if any(report_events):
            break
    assert index.global_depth == gd
    assert any(not e.doubled and e.slot_updates for e in report_events)
    index.check_structure()


def test_dispersed_keys_split_and_stay_retrievable(pool):
    index = ExtendibleIndex(pool)
    rng = np.random.default_rng(9)
    keys = rng.integers(1, 2**64, size=2 * BUCKET_CAPACITY + 1, dtype=np.uint64)
    for k in keys:
        index.insert(int(k), int(k) % 1000)
    assert index.num_buckets >= 2
    for k in keys:
        assert index.lookup(int(k)) == int(k) % 1000


def test_doubling_preserves_reachability(pool):
    index = ExtendibleIndex(pool)
    inserted = {}
    rng = np.random.default_rng(17)
    depth_seen = index.global_depth
    while index.global_depth < 4:
        k = int(rng.integers(1, 2**64, dtype=np.uint64))
        index.insert(k, k & 0xFFFF)
        inserted[k] = k & 0xFFFF
        if index.global_depth > depth_seen:
            depth_seen = index.global_depth
            for kk, vv in inserted.items():
                assert index.lookup(kk) == vv


def test_fanin_law_and_prefix_consistency_under_validator(pool):
    index = ExtendibleIndex(pool, validate_splits=True)
    rng = np.random.default_rng(23)
    keys = rng.integers(1, 2**64, size=20_000, dtype=np.uint64)
    vals = rng.integers(0, 2**64, size=20_000, dtype=np.uint64)
    index.insert_many(keys, vals)
    index.check_structure()
    index.check_all_entries()
    fanin = sum(
        2 ** (index.global_depth - int(bucket_local_depth(pool.page_words(int(off)))))
        for off in np.unique(index.directory)
    )
    assert fanin == 2 ** index.global_depth


def test_oracle_equivalence_mixed_ops(pool):
    index = ExtendibleIndex(pool)
    rng = np.random.default_rng(31)
    model = {}
    for _ in range(30):
        n = int(rng.integers(1, 2000))
        ks = rng.integers(1, 2**64, size=n, dtype=np.uint64)
        vs = rng.integers(0, 2**64, size=n, dtype=np.uint64)
        index.insert_many(ks, vs)
        model.update(zip(ks.tolist(), vs.tolist()))
        probe = rng.choice(np.array(list(model), dtype=np.uint64), size=min(len(model), 500))
        out, found = index.lookup_many(probe)
        assert found.all()
        assert all(model[int(k)] == int(v) for k, v in zip(probe, out))
        miss = rng.integers(1, 2**64, size=100, dtype=np.uint64)
        out, found = index.lookup_many(miss)
        for k, f, v in zip(miss.tolist(), found, out):
            assert bool(f) == (k in model)
            if f:
                assert int(v) == model[k]


def test_batch_and_scalar_paths_agree(pool):
    scalar_pool = create_pool(4, backend=pool.backend)
    a = ExtendibleIndex(pool)
    b = ExtendibleIndex(scalar_pool)
    rng = np.random.default_rng(37)
    keys = rng.integers(1, 2**64, size=3000, dtype=np.uint64)
    vals = rng.integers(0, 2**64, size=3000, dtype=np.uint64)
    a.insert_many(keys, vals)
    for k, v in zip(keys.tolist(), vals.tolist()):
        b.insert(k, v)
    assert a.global_depth == b.global_depth
    assert a.num_buckets == b.num_buckets
    out_a, found_a = a.lookup_many(keys)
    for k, v, f in zip(keys.tolist(), out_a.tolist(), found_a):
        assert f and b.lookup(k) == v
    scalar_pool.close()


def test_split_report_slot_updates_non_doubling(pool):
    """A split of a doubly-referenced bucket rewrites exactly its two slots."""
    index = ExtendibleIndex(pool)
    half = BUCKET_CAPACITY // 2 + 1
    for k in keys_for_bucket(0, 1, half):
        index.insert(k, 1)
    for k in keys_for_bucket(1, 1, half):
        index.insert(k, 1)
    for k in keys_for_bucket(0b10, 2, half):
        index.insert(k, 2)
    for k in keys_for_bucket(0b11, 2, half):
        index.insert(k, 2)
    # 0xxx has local depth 1 and run {00, 01}; overflow it
    events = []
    salt = 5000
    while not events:
        for prefix in (0b00, 0b01):
            r = index.insert(key_with_prefix(prefix, 2, salt), 3)
            events.extend(r.events)
        salt += 1
    ev = events[0]
    assert not ev.doubled
    assert len(ev.slot_updates) == 2
    assert [s for s, _ in ev.slot_updates] == [0, 1]
