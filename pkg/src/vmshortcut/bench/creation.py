"""Creation-cost breakdown: Allocate / Set-Indirections / Populate /
First-Access / Second-Access for the traditional inner node and the shortcut
node with lazy and eager page-table population.

Leaf pages are acquired and initialized before timing starts, so the
Set-Indirections phase isolates the indirection-setting mechanism itself:
a pointer store per slot versus a page-granular remap call per slot
(deliberately uncoalesced; consecutive leaves would otherwise collapse into
one call and time nothing).

Setup phases normalize per page, access phases per access.
"""

from __future__ import annotations

import time

import numpy as np

from vmshortcut._engine import native
from vmshortcut.page_pool import create_pool
from vmshortcut.rewiring import RealShortcutNode

from . import inner_nodes as inn
from .config import BenchConfig, pin_to_core
from .keys import make_slot_accesses, rng_for
from .recorder import Recorder

VARIANTS = ("traditional", "shortcut-lazy", "shortcut-eager")
PHASES = ("allocate", "set_indirections", "populate", "first_access", "second_access")


def run(config: BenchConfig, rec: Recorder) -> dict:
    pin_to_core(config.cores[0] if config.cores else None)
    rng = rng_for(config.seed)
    n = config.creation_slots
    accesses = config.creation_accesses
    summary = {v: {p: [] for p in PHASES} for v in VARIANTS}

    pool = create_pool(n, backend="real")
    offsets = inn.build_leaves(pool, n)
    addrs = offsets + np.uint64(pool.view_address(0))
    # distinct sequences per pass: replaying one sequence would let the cache
    # (not the page table) make the second pass look cheap at desk scale
    passes = {
        phase: make_slot_accesses(rng, accesses, n)
        for phase in ("first_access", "second_access")
    }
    expects = {p: inn.expected_checksum(sl, 1) for p, (sl, _) in passes.items()}

    def record(variant, phase, rep, ns, divisor):
        rec.add("creation", variant, phase, n, rep, ns, divisor)
        summary[variant][phase].append(ns / divisor)

    for rep in range(config.repetitions):
        # traditional: pointer array over warm leaves
        t0 = time.perf_counter_ns()
        inner = np.empty(n, dtype=np.uint64)
        record("traditional", "allocate", rep, time.perf_counter_ns() - t0, n)
        t0 = time.perf_counter_ns()
        native.set_pointer_array(inner.ctypes.data, addrs)
        record("traditional", "set_indirections", rep, time.perf_counter_ns() - t0, n)
        for phase in ("first_access", "second_access"):
            slots, inpage = passes[phase]
            ns, acc = inn.timed_access_traditional(inner, slots, inpage)
            inn.check_sum(f"creation/traditional/{phase}", acc, expects[phase])
            record("traditional", phase, rep, ns, accesses)
        del inner

        for variant in ("shortcut-lazy", "shortcut-eager"):
            t0 = time.perf_counter_ns()
            node = RealShortcutNode(pool, n)
            record(variant, "allocate", rep, time.perf_counter_ns() - t0, n)
            t0 = time.perf_counter_ns()
            node.set_indirections_batch(0, offsets, coalesce=False)
            record(variant, "set_indirections", rep, time.perf_counter_ns() - t0, n)
            if variant == "shortcut-eager":
                t0 = time.perf_counter_ns()
                node.populate_all()
                record(variant, "populate", rep, time.perf_counter_ns() - t0, n)
            for phase in ("first_access", "second_access"):
                slots, inpage = passes[phase]
                ns, acc = inn.timed_access_shortcut(node.base, slots, inpage)
                inn.check_sum(f"creation/{variant}/{phase}", acc, expects[phase])
                record(variant, phase, rep, ns, accesses)
            node.destroy()

    pool.close()
    medians = {
        v: {p: sorted(xs)[len(xs) // 2] for p, xs in phases.items() if xs}
        for v, phases in summary.items()
    }
    return medians
