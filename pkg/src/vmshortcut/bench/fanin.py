"""Fan-in sweep: a fixed-width inner node over fewer and fewer distinct
leaves.  The shortcut always walks a virtual area of slot_count pages while
the traditional node touches only slot_count * 8 bytes plus the leaves, so
high fan-ins favor the traditional variant (translation-cache pressure) and
low fan-ins favor the shortcut.
"""

from __future__ import annotations

from vmshortcut.page_pool import create_pool

from . import inner_nodes as inn
from .config import BenchConfig, pin_to_core
from .keys import make_slot_accesses, rng_for
from .recorder import Recorder


def run(config: BenchConfig, rec: Recorder) -> dict:
    pin_to_core(config.cores[0] if config.cores else None)
    rng = rng_for(config.seed)
    n_slots = config.fanin_slots
    summary = {}
    for fanin in config.fanin_values:
        n_leaves = n_slots // fanin
        pool = create_pool(n_leaves, backend="real")
        leaf_offsets = inn.build_leaves(pool, n_leaves)
        slot_offsets = inn.slot_offsets_for_fanin(leaf_offsets, n_slots, fanin)
        inner = inn.build_traditional(pool, slot_offsets)
        node = inn.build_shortcut(pool, slot_offsets)
        slots, inpage = make_slot_accesses(rng, config.fanin_accesses, n_slots)
        expect = inn.expected_checksum(slots, fanin)
        # untimed warmup: steady-state behavior only (see motivation bench)
        inn.timed_access_traditional(inner, slots, inpage)
        inn.timed_access_shortcut(node.base, slots, inpage)
        trad, shot = [], []
        for rep in range(config.repetitions):
            ns, acc = inn.timed_access_traditional(inner, slots, inpage)
            inn.check_sum(f"fanin/traditional/{fanin}", acc, expect)
            rec.add("fanin", "traditional", "access", fanin, rep, ns, config.fanin_accesses)
            trad.append(ns)
            ns, acc = inn.timed_access_shortcut(node.base, slots, inpage)
            inn.check_sum(f"fanin/shortcut/{fanin}", acc, expect)
            rec.add("fanin", "shortcut", "access", fanin, rep, ns, config.fanin_accesses)
            shot.append(ns)
        node.destroy()
        pool.close()
        summary[fanin] = {
            "traditional": sorted(trad)[len(trad) // 2],
            "shortcut": sorted(shot)[len(shot) // 2],
        }
    return summary
