"""Translation-cache invalidation cost under concurrent readers.

A shooting thread remaps randomly selected pages of an already mapped region
(populated remaps) while reader threads sequentially scan the region.  We
report (a) the shooter's per-remap cost per reader count, (b) the readers'
per-page cost while shooting, and (c) the readers' per-page cost rereading
the same page volume without a shooter.
"""

from __future__ import annotations

import threading

import numpy as np

from vmshortcut._engine import native
from vmshortcut.page_pool import PAGE_SIZE, create_pool
from vmshortcut.rewiring import RealShortcutNode

from .config import BenchConfig, pin_to_core
from .keys import rng_for
from .recorder import Recorder


class _Reader(threading.Thread):
    def __init__(self, region, npages, stop_flag, core):
        super().__init__(daemon=True)
        self.region = region
        self.npages = npages
        self.stop_flag = stop_flag
        self.core = core
        self.pages = 0
        self.ns = 0

    def run(self):
        pin_to_core(self.core)
        self.pages, self.ns = native.read_pages_until(self.region, self.npages, self.stop_flag)


class _FixedReader(threading.Thread):
    def __init__(self, region, npages, total_pages, core):
        super().__init__(daemon=True)
        self.region = region
        self.npages = npages
        self.total_pages = total_pages
        self.core = core
        self.ns = 0

    def run(self):
        pin_to_core(self.core)
        self.ns = native.read_pages_fixed(self.region, self.npages, self.total_pages)


def run(config: BenchConfig, rec: Recorder) -> dict:
    import os

    cores = os.cpu_count() or 1
    if cores < 2:
        raise RuntimeError("shootdown experiment needs at least 2 cores; skipping")
    rng = rng_for(config.seed)
    npages = config.shootdown_region_pages
    nremaps = config.shootdown_remaps
    pool = create_pool(npages, backend="real")
    offsets = pool.acquire_pages(npages)
    node = RealShortcutNode(pool, npages)
    node.set_indirections_batch(0, offsets)  # coalesces into one wide mapping
    node.populate_all()
    region = node.base

    summary = {}
    for readers in range(0, config.shootdown_max_readers + 1):
        page_idx = rng.integers(0, npages, size=nremaps, dtype=np.uint64)
        remap_to = rng.integers(0, npages, size=nremaps, dtype=np.uint64) * PAGE_SIZE
        stop = np.zeros(1, dtype=np.int64)
        threads = [
            _Reader(region, npages, stop,
                    config.cores[(1 + i) % len(config.cores)] if config.cores else None)
            for i in range(readers)
        ]
        for t in threads:
            t.start()
        pin_to_core(config.cores[0] if config.cores else None)
        shoot_ns = native.shoot_random(region, pool.fd, page_idx, remap_to, True)
        native.publish_i64(stop, 0, 1)
        for t in threads:
            t.join()
        rec.add("shootdown", "shooter", "remap", readers, 0, shoot_ns, nremaps)
        entry = {"remap": shoot_ns / nremaps, "read_during": [], "read_alone": []}
        for i, t in enumerate(threads):
            if t.pages:
                rec.add("shootdown", "reader", "read_during", readers, i, t.ns, t.pages)
                entry["read_during"].append(t.ns / t.pages)
        # (c): the same reader crew rereads the same page volume, no shooter
        reruns = [
            _FixedReader(region, npages, t.pages, t.core)
            for t in threads
            if t.pages
        ]
        for t in reruns:
            t.start()
        for t in reruns:
            t.join()
        for i, t in enumerate(reruns):
            rec.add("shootdown", "reader", "read_alone", readers, i, t.ns, t.total_pages)
            entry["read_alone"].append(t.ns / t.total_pages)
        summary[readers] = entry
        node.populate_all()  # re-establish translations for the next round

    node.destroy()
    pool.close()
    return summary
