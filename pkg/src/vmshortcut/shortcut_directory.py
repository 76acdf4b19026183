"""Shortcut-enhanced extendible hashing.

The traditional directory absorbs every modification synchronously; a
shortcut directory (one page-table-mapped region, slot i = page i) replays
those modifications asynchronously.  Bucket reorganizations enqueue update
requests (slot -> pool offset); a directory doubling supersedes everything
pending with a single create request carrying the full offset vector.

A dedicated mapper thread polls the request queue at a fixed interval,
applies requests, populates the touched page-table entries, and only then
publishes the shortcut's version.  A lookup may route through the shortcut
exactly when both versions match and the average fan-in is at or below the
routing threshold; otherwise it walks the traditional directory.  Routing
never changes answers, only latency.

Single producer (the writer thread), single consumer (the mapper thread);
readers only observe the published version pair.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from vmshortcut._engine import HAVE_NATIVE, native
from vmshortcut.extendible_hashing import ExtendibleIndex
from vmshortcut.hash_common import bucket_lookup, check_key, dir_slot, hash64
from vmshortcut.page_pool import RealPagePool
from vmshortcut.rewiring import reserve

DEFAULT_FANIN_THRESHOLD = 8
DEFAULT_POLL_INTERVAL = 0.025


@dataclass(slots=True)
class UpdateRequest:
    slot: int
    offset: int
    target_version: int


@dataclass(slots=True)
class CreateRequest:
    slot_count: int
    offsets: np.ndarray
    target_version: int

    def __post_init__(self):
        assert len(self.offsets) == self.slot_count


@dataclass
class RouteCounts:
    shortcut: int = 0
    traditional: int = 0


class ShortcutEH:
    """Extendible hashing with an asynchronously maintained shortcut directory."""

    def __init__(
        self,
        pool,
        fanin_threshold: int = DEFAULT_FANIN_THRESHOLD,
        poll_interval: float = DEFAULT_POLL_INTERVAL,
        start_worker: bool = True,
        worker_delay=None,
    ):
        self.pool = pool
        self.fanin_threshold = fanin_threshold
        self.poll_interval = poll_interval
        # split-off bucket pages are freed only after the shortcut caught up
        # past their redirection, so the pool never recycles a page a stale
        # shortcut slot still maps
        self._deferred_frees: deque[tuple[int, int]] = deque()
        self.traditional = ExtendibleIndex(pool, free_page=lambda off: None)
        self.queue: deque = deque()
        # writer-side authoritative counter is a plain int; the array mirrors
        # it for the lookup kernels (mirrored after each event batch)
        self._tv = 0
        self._versions = np.zeros(2, dtype=np.int64)  # [0] traditional, [1] shortcut
        self._sc_base = np.zeros(1, dtype=np.uint64)
        self.shortcut = None
        self.route_counts = RouteCounts()
        self.worker_delay = worker_delay  # test hook: called between apply and publish
        self.worker_error = None
        self._stop = threading.Event()
        self._worker = None
        if start_worker:
            self.start_worker()

    # -- lifecycle ----------------------------------------------------------

    def start_worker(self) -> None:
        if self._worker is not None:
            return
        self._stop.clear()
        self._worker = threading.Thread(
            target=self._maintenance_loop, name="shortcut-mapper", daemon=True
        )
        self._worker.start()

    def close(self) -> None:
        if self._worker is not None:
            self._stop.set()
            self._worker.join()
            self._worker = None
        if self.shortcut is not None:
            node, self.shortcut = self.shortcut, None
            node.destroy()
        while self._deferred_frees:
            _, off = self._deferred_frees.popleft()
            self.pool.release_page(off)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    # -- version pair ---------------------------------------------------------

    @property
    def traditional_version(self) -> int:
        return self._tv

    @property
    def shortcut_version(self) -> int:
        if HAVE_NATIVE:
            return int(native.load_i64(self._versions, 1))
        return int(self._versions[1])

    def versions(self) -> tuple[int, int]:
        return self.traditional_version, self.shortcut_version

    def in_sync(self) -> bool:
        return self.shortcut is not None and self.shortcut_version == self.traditional_version

    @property
    def average_fanin(self) -> float:
        return self.traditional.average_fanin

    def _fanin_ok(self) -> bool:
        return self.average_fanin <= self.fanin_threshold

    # -- writes ---------------------------------------------------------------

    def insert(self, key: int, value: int) -> None:
        self._check_worker()
        report = self.traditional.insert(key, value)
        for ev in report.events:
            self._process_event(ev)
        self._drain_deferred_frees()

    def insert_many(self, keys, values) -> None:
        self._check_worker()
        self.traditional.insert_many(keys, values, on_event=self._process_event)
        self._drain_deferred_frees()

    def _process_event(self, ev) -> None:
        """Stamp one directory modification with versions and enqueue its
        maintenance.  Each slot write bumps the traditional version by one; a
        doubling bumps one more, drains pending updates (now outdated), and
        enqueues a create request snapshotting the full offset vector.
        """
        tv = self._tv
        if ev.doubled:
            tv += 1 + len(ev.slot_updates)
            self.queue.clear()
            self.queue.append(
                CreateRequest(
                    len(self.traditional.directory),
                    self.traditional.directory.copy(),
                    tv,
                )
            )
        else:
            for slot, off in ev.slot_updates:
                tv += 1
                self.queue.append(UpdateRequest(slot, off, tv))
        self._deferred_frees.append((tv, ev.freed_offset))
        self._tv = tv
        self._versions[0] = tv

    def _drain_deferred_frees(self) -> None:
        sv = self.shortcut_version
        while self._deferred_frees and self._deferred_frees[0][0] <= sv:
            _, off = self._deferred_frees.popleft()
            self.pool.release_page(off)

    # -- reads ------------------------------------------------------------------

    def lookup(self, key: int, route: str = "auto"):
        check_key(key)
        use_sc = self._route_shortcut(route)
        h = hash64(key)
        if use_sc:
            node = self.shortcut
            if node is None:
                raise RuntimeError("forced shortcut route but no shortcut exists")
            self.route_counts.shortcut += 1
            return bucket_lookup(
                node.page_words(dir_slot(h, self.traditional.global_depth)), key
            )
        self.route_counts.traditional += 1
        off = int(self.traditional.directory[dir_slot(h, self.traditional.global_depth)])
        return bucket_lookup(self.pool.page_words(off), key)

    def _route_shortcut(self, route: str) -> bool:
        if route == "traditional":
            return False
        if route == "shortcut":
            return True
        return self.in_sync() and self._fanin_ok()

    def lookup_many(self, keys, route: str = "auto", out=None, found=None):
        """Batch lookups; returns (values, found) arrays.

        With route='auto' on the real backend, the sync check runs per access
        inside the kernel so a convergence mid-batch switches routes live.
        """
        self._check_worker()
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        if out is None:
            out = np.zeros(len(keys), dtype=np.uint64)
        if found is None:
            found = np.zeros(len(keys), dtype=np.uint8)
        gd = self.traditional.global_depth
        if not HAVE_NATIVE:
            for i, k in enumerate(keys):
                v = self.lookup(int(k), route=route)
                if v is not None:
                    out[i] = v
                    found[i] = 1
            return out, found

        if route == "traditional":
            native.eh_lookup_batch(
                self.traditional.directory, gd, self.pool.buffer(), keys, out, found
            )
            self.route_counts.traditional += len(keys)
        elif route == "shortcut":
            node = self.shortcut
            if node is None:
                raise RuntimeError("forced shortcut route but no shortcut exists")
            if isinstance(self.pool, RealPagePool):
                native.sc_lookup_batch_real(node.base, gd, keys, out, found)
            else:
                native.sc_lookup_batch_emulated(
                    node.slot_offsets, gd, self.pool.buffer(), keys, out, found
                )
            self.route_counts.shortcut += len(keys)
        elif isinstance(self.pool, RealPagePool):
            _, routed = native.seh_lookup_batch_real(
                self.traditional.directory,
                gd,
                self.pool.buffer(),
                self._versions,
                self._sc_base,
                self.shortcut is not None and self._fanin_ok(),
                keys,
                out,
                found,
            )
            self.route_counts.shortcut += int(routed)
            self.route_counts.traditional += len(keys) - int(routed)
        else:
            # emulated: decide once per batch; with versions equal the worker
            # is necessarily idle (single writer), so the snapshot holds
            if self.in_sync() and self._fanin_ok():
                native.sc_lookup_batch_emulated(
                    self.shortcut.slot_offsets, gd, self.pool.buffer(), keys, out, found
                )
                self.route_counts.shortcut += len(keys)
            else:
                native.eh_lookup_batch(
                    self.traditional.directory, gd, self.pool.buffer(), keys, out, found
                )
                self.route_counts.traditional += len(keys)
        return out, found

    # -- maintenance worker ------------------------------------------------------

    def _maintenance_loop(self) -> None:
        try:
            while not self._stop.wait(self.poll_interval):
                self._drain_once()
        except Exception as exc:  # mapping failures are fatal for the index
            self.worker_error = exc

    def _drain_once(self) -> None:
        while self.queue:
            batch = []
            while True:
                try:
                    batch.append(self.queue.popleft())
                except IndexError:
                    break
            # within one drained batch, a later create snapshot supersedes
            # everything enqueued before it; applying only the final create
            # (then the requests after it) reaches the same state, and the
            # published version jumps exactly as create coalescing allows
            last_create = None
            for i, req in enumerate(batch):
                if isinstance(req, CreateRequest):
                    last_create = i
            if last_create:
                batch = batch[last_create:]
            i = 0
            while i < len(batch):
                req = batch[i]
                if isinstance(req, CreateRequest):
                    self._apply(req)
                    i += 1
                    continue
                # split pairs usually update adjacent slots with adjacently
                # acquired pages; applying the run as one batch halves the
                # remap calls and the per-request dispatch cost
                j = i
                while (
                    j + 1 < len(batch)
                    and isinstance(batch[j + 1], UpdateRequest)
                    and batch[j + 1].slot == batch[j].slot + 1
                    and batch[j + 1].offset == batch[j].offset + 4096
                ):
                    j += 1
                if j > i:
                    self._apply_update_run(batch[i : j + 1])
                else:
                    self._apply(req)
                i = j + 1

    def _apply(self, req) -> None:
        if isinstance(req, CreateRequest):
            old, self.shortcut = self.shortcut, None
            if old is not None:
                old.destroy()
            node = reserve(self.pool, req.slot_count)
            node.set_indirections_batch(0, req.offsets)
            if self.worker_delay is not None:
                self.worker_delay(req)
            node.populate_all()
            self.shortcut = node
            self._publish_base(node.base)
            self._creation_version = req.target_version
            self._publish_version(req.target_version)
        else:
            node = self.shortcut
            if node is None or req.target_version <= getattr(self, "_creation_version", -1):
                # superseded by a later create that the producer raced with
                self._publish_version(req.target_version)
                return
            node.set_indirection(req.slot, req.offset)
            if self.worker_delay is not None:
                self.worker_delay(req)
            node.populate(slots=[req.slot])
            self._publish_version(req.target_version)

    def _apply_update_run(self, run) -> None:
        """Apply a run of updates hitting consecutive slots with consecutive
        pool pages; population precedes every version publication exactly as
        in the one-by-one path."""
        node = self.shortcut
        creation = getattr(self, "_creation_version", -1)
        live = [r for r in run if r.target_version > creation]
        if node is None or not live:
            self._publish_version(run[-1].target_version)
            return
        first = live[0]
        node.set_indirections_batch(
            first.slot, np.array([r.offset for r in live], dtype=np.uint64)
        )
        if self.worker_delay is not None:
            for r in live:
                self.worker_delay(r)
        node.populate(slots=[r.slot for r in live])
        for r in run:
            self._publish_version(r.target_version)

    def _publish_base(self, base: int) -> None:
        if HAVE_NATIVE:
            native.publish_u64(self._sc_base, 0, base)
        else:
            self._sc_base[0] = base

    def _publish_version(self, version: int) -> None:
        if version <= self.shortcut_version:
            return
        if HAVE_NATIVE:
            native.publish_i64(self._versions, 1, version)
        else:
            self._versions[1] = version

    def _check_worker(self) -> None:
        if self.worker_error is not None:
            raise RuntimeError("maintenance worker failed") from self.worker_error

    # -- synchronization helpers ---------------------------------------------------

    def wait_sync(self, timeout: float = 10.0) -> bool:
        """Block until the shortcut caught up (or timeout); drains deferred frees."""
        deadline = threading.Event()
        waited = 0.0
        step = min(0.001, self.poll_interval / 4) or 0.001
        while waited <= timeout:
            self._check_worker()
            if self.traditional_version == self.shortcut_version and not self.queue:
                self._drain_deferred_frees()
                return True
            deadline.wait(step)
            waited += step
        return False

    def validate_sync(self) -> None:
        """Stop-the-world check: with versions equal, every directory slot's
        offset matches the shortcut's shadow mapping (and a sampled page read
        agrees through both paths)."""
        assert self.in_sync(), "validate_sync requires converged versions"
        node = self.shortcut
        dirv = self.traditional.directory
        assert node.slot_count == len(dirv)
        assert (node.slot_offsets == dirv).all(), "shortcut mapping diverged"
        step = max(1, len(dirv) // 64)
        for slot in range(0, len(dirv), step):
            via_node = node.read_bytes(slot, 0, 16)
            via_pool = self.pool.read_bytes(int(dirv[slot]), 0, 16)
            assert via_node == via_pool
