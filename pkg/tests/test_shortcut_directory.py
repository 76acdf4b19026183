import threading
import time

import numpy as np
import pytest

from vmshortcut import create_pool
from vmshortcut.hash_common import BUCKET_CAPACITY
from vmshortcut.shortcut_directory import (
    CreateRequest,
    ShortcutEH,
    UpdateRequest,
)

from helpers import key_with_prefix, keys_for_bucket


@pytest.fixture
def idle_index(pool):
    """Worker not running: the queue can be inspected deterministically."""
    seh = ShortcutEH(pool, start_worker=False)
    yield seh
    seh.close()


@pytest.fixture
def live_index(pool):
    seh = ShortcutEH(pool, poll_interval=0.002)
    yield seh
    seh.close()


def reach_depth_two(seh):
    """Deterministic state: gd=2, three buckets (0xxx doubly referenced)."""
    half = BUCKET_CAPACITY // 2 + 1
    for k in keys_for_bucket(0, 1, half):
        seh.insert(k, 1)
    for k in keys_for_bucket(1, 1, half):
        seh.insert(k, 1)
    for k in keys_for_bucket(0b10, 2, half):
        seh.insert(k, 2)
    for k in keys_for_bucket(0b11, 2, half):
        seh.insert(k, 2)
    assert seh.traditional.global_depth == 2
    assert seh.traditional.num_buckets == 3


class TestRequestProduction:
    def test_no_split_no_requests(self, idle_index):
        idle_index.insert(123, 1)
        assert not idle_index.queue
        assert idle_index.traditional_version == 0

    def test_doubling_leaves_single_create(self, idle_index):
        reach_depth_two(idle_index)
        assert len(idle_index.queue) == 1
        req = idle_index.queue[0]
        assert isinstance(req, CreateRequest)
        assert req.slot_count == 4
        assert (req.offsets == idle_index.traditional.directory).all()
        assert req.target_version == idle_index.traditional_version

    def test_non_doubling_split_enqueues_two_updates(self, idle_index):
        reach_depth_two(idle_index)
        idle_index.queue.clear()
        tv_before = idle_index.traditional_version
        # overflow the doubly-referenced 0xxx bucket: split without doubling
        salt = 9000
        while not idle_index.queue:
            for prefix in (0b00, 0b01):
                idle_index.insert(key_with_prefix(prefix, 2, salt), 3)
            salt += 1
        assert idle_index.traditional.global_depth == 2
        assert len(idle_index.queue) == 2
        u0, u1 = idle_index.queue
        assert isinstance(u0, UpdateRequest) and isinstance(u1, UpdateRequest)
        assert (u0.slot, u1.slot) == (0, 1)
        assert u1.target_version == u0.target_version + 1 == tv_before + 2

    def test_queue_versions_strictly_increasing(self, idle_index):
        rng = np.random.default_rng(2)
        idle_index.insert_many(
            rng.integers(1, 2**64, size=3000, dtype=np.uint64),
            rng.integers(0, 2**64, size=3000, dtype=np.uint64),
        )
        versions = [r.target_version for r in idle_index.queue]
        assert versions == sorted(versions)
        assert len(set(versions)) == len(versions)

    def test_traditional_version_counts_modifications(self, idle_index):
        reach_depth_two(idle_index)
        # 3 doublings is impossible here; verify against replay arithmetic:
        # each event contributed len(slot_updates) (+1 when doubled)
        assert idle_index.traditional_version > 0
        assert idle_index.shortcut_version == 0


class TestMaintenance:
    def test_create_replays_layout(self, pool):
        seh = ShortcutEH(pool, start_worker=False)
        offs = [pool.acquire_page() for _ in range(3)]
        for i, off in enumerate(offs):
            pool.write_bytes(off, 0, bytes([i + 1]) * 8)
        vector = np.array([offs[0], offs[1], offs[2], offs[2]], dtype=np.uint64)
        seh._tv = 5
        seh._versions[0] = 5
        seh.queue.append(CreateRequest(4, vector, 5))
        seh._drain_once()
        assert seh.shortcut_version == 5
        for slot, off in enumerate(vector):
            assert seh.shortcut.read_bytes(slot, 0, 8) == pool.read_bytes(int(off), 0, 8)
        seh.close()

    def test_empty_poll_no_state_change(self, idle_index):
        before = idle_index.versions()
        idle_index._drain_once()
        assert idle_index.versions() == before

    def test_updates_after_create_apply_in_order(self, pool):
        seh = ShortcutEH(pool, start_worker=False)
        a, b, c = (pool.acquire_page() for _ in range(3))
        pool.write_bytes(a, 0, b"A")
        pool.write_bytes(b, 0, b"B")
        pool.write_bytes(c, 0, b"C")
        seh.queue.append(CreateRequest(2, np.array([a, b], dtype=np.uint64), 3))
        seh.queue.append(UpdateRequest(0, c, 4))
        seh._tv = 4
        seh._versions[0] = 4
        seh._drain_once()
        assert seh.shortcut_version == 4
        assert seh.shortcut.read_bytes(0, 0, 1) == b"C"
        assert seh.shortcut.read_bytes(1, 0, 1) == b"B"
        seh.close()

    def test_burst_updates_then_create_reflects_create(self, pool):
        """Producer-drained updates never outlive the superseding create."""
        seh = ShortcutEH(pool, start_worker=False)
        reach_depth_two(seh)
        seh._drain_once()
        assert seh.in_sync()
        seh.validate_sync()
        # force more splits including a doubling, worker still suspended
        rng = np.random.default_rng(7)
        seh.insert_many(
            rng.integers(1, 2**64, size=4000, dtype=np.uint64),
            rng.integers(0, 2**64, size=4000, dtype=np.uint64),
        )
        kinds = [type(r).__name__ for r in seh.queue]
        if "CreateRequest" in kinds:
            assert kinds.index("CreateRequest") == 0  # nothing older survives
        seh._drain_once()
        assert seh.in_sync()
        seh.validate_sync()
        seh.close()

    def test_worker_liveness_bound(self, pool):
        poll = 0.01
        seh = ShortcutEH(pool, poll_interval=poll)
        rng = np.random.default_rng(8)
        seh.insert_many(
            rng.integers(1, 2**64, size=20_000, dtype=np.uint64),
            rng.integers(0, 2**64, size=20_000, dtype=np.uint64),
        )
        t0 = time.perf_counter()
        deadline = t0 + 2 * poll + 5.0  # 2 polls + generous population time
        while time.perf_counter() < deadline:
            if seh.in_sync():
                break
            time.sleep(0.001)
        assert seh.in_sync(), seh.versions()
        seh.validate_sync()
        seh.close()

    def test_monotone_versions_under_load(self, live_index):
        rng = np.random.default_rng(9)
        last_tv, last_sv = 0, 0
        for _ in range(40):
            live_index.insert_many(
                rng.integers(1, 2**64, size=500, dtype=np.uint64),
                rng.integers(0, 2**64, size=500, dtype=np.uint64),
            )
            tv, sv = live_index.versions()
            assert tv >= last_tv and sv >= last_sv
            assert sv <= tv
            last_tv, last_sv = tv, sv
        assert live_index.wait_sync(10.0)
        live_index.validate_sync()

    def test_deferred_frees_release_after_sync(self, pool):
        seh = ShortcutEH(pool, start_worker=False)
        reach_depth_two(seh)
        assert seh._deferred_frees  # split-off pages held back
        held = len(seh._deferred_frees)
        free_before = len(pool.free_offsets)
        seh._drain_once()
        seh._drain_deferred_frees()
        assert not seh._deferred_frees
        assert len(pool.free_offsets) >= free_before
        assert held > 0
        seh.close()


class TestRouting:
    def test_out_of_sync_routes_traditional(self, pool):
        seh = ShortcutEH(pool, start_worker=False)
        reach_depth_two(seh)
        assert not seh.in_sync()
        before = seh.route_counts.traditional
        assert seh.lookup(key_with_prefix(0, 1, 1)) is not None
        assert seh.route_counts.traditional == before + 1
        assert seh.route_counts.shortcut == 0
        seh.close()

    def test_in_sync_routes_shortcut(self, pool):
        seh = ShortcutEH(pool, start_worker=False)
        reach_depth_two(seh)
        seh._drain_once()
        assert seh.in_sync()
        before = seh.route_counts.shortcut
        assert seh.lookup(key_with_prefix(0, 1, 1)) is not None
        assert seh.route_counts.shortcut == before + 1
        seh.close()

    def test_high_fanin_routes_traditional(self, pool):
        seh = ShortcutEH(pool, start_worker=False, fanin_threshold=8)
        reach_depth_two(seh)
        seh._drain_once()
        assert seh.in_sync()
        seh.fanin_threshold = 2  # current fan-in is 4/3: gate open
        assert seh.lookup(key_with_prefix(0, 1, 1)) is not None
        assert seh.route_counts.shortcut == 1
        seh.fanin_threshold = 1.1  # 4/3 > 1.1: gate closed despite sync
        assert seh.lookup(key_with_prefix(0, 1, 1)) is not None
        assert seh.route_counts.traditional >= 1
        assert seh.route_counts.shortcut == 1
        seh.close()

    def test_average_fanin_values(self, pool):
        seh = ShortcutEH(pool, start_worker=False)
        assert seh.average_fanin == 1.0
        reach_depth_two(seh)
        assert seh.average_fanin == pytest.approx(4 / 3)
        seh.close()

    def test_three_way_differential(self, pool):
        seh = ShortcutEH(pool, poll_interval=0.002)
        rng = np.random.default_rng(13)
        keys = rng.integers(1, 2**64, size=30_000, dtype=np.uint64)
        vals = rng.integers(0, 2**64, size=30_000, dtype=np.uint64)
        seh.insert_many(keys, vals)
        assert seh.wait_sync(20.0)
        probe = np.concatenate(
            [keys[:5000], rng.integers(1, 2**64, size=5000, dtype=np.uint64)]
        )
        out_a, found_a = seh.lookup_many(probe, route="auto")
        out_t, found_t = seh.lookup_many(probe, route="traditional")
        out_s, found_s = seh.lookup_many(probe, route="shortcut")
        assert (found_a == found_t).all() and (found_t == found_s).all()
        assert (out_a == out_t).all() and (out_t == out_s).all()
        model = dict(zip(keys.tolist(), vals.tolist()))
        for k, f, v in zip(probe.tolist(), found_a, out_a):
            assert bool(f) == (k in model)
            if f:
                assert int(v) == model[k]
        seh.close()

    def test_forced_shortcut_without_node_raises(self, pool):
        seh = ShortcutEH(pool, start_worker=False)
        seh.insert(1234, 1)
        with pytest.raises(RuntimeError):
            seh.lookup(1234, route="shortcut")
        seh.close()


class TestSyncProtocolStress:
    def test_lookups_agree_under_concurrent_maintenance(self, pool):
        """Writer inserts (splitting) while its own lookups race the worker;
        a shortcut-routed answer must always match the traditional route."""
        delays = []

        def delay(req):
            # stretch the out-of-sync window on a sample of requests
            if len(delays) % 7 == 0:
                time.sleep(0.003)
            delays.append(1)

        seh = ShortcutEH(pool, poll_interval=0.002, worker_delay=delay)
        rng = np.random.default_rng(21)
        model = {}
        shortcut_hits = 0
        for round_ in range(60):
            ks = rng.integers(1, 2**64, size=200, dtype=np.uint64)
            vs = rng.integers(0, 2**64, size=200, dtype=np.uint64)
            seh.insert_many(ks, vs)
            model.update(zip(ks.tolist(), vs.tolist()))
            if round_ % 5 == 4:
                # let the shortcut catch up so both routes get sampled
                assert seh.wait_sync(20.0)
            probes = rng.choice(np.array(list(model), dtype=np.uint64), size=300)
            for k in probes.tolist():
                before = seh.route_counts.shortcut
                got = seh.lookup(k, route="auto")
                via_trad = seh.lookup(k, route="traditional")
                assert got == via_trad == model[k]
                shortcut_hits += seh.route_counts.shortcut - before
        assert seh.wait_sync(20.0)
        seh.validate_sync()
        assert shortcut_hits > 0, "shortcut route never exercised"
        seh.close()
