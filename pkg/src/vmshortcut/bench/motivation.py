"""Motivating microbenchmark: traditional vs shortcut inner node under
uniform random lookups, sweeping the number of indexed leaf pages (fan-in 1).
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
    summary = {}
    for leaf_count in config.motivation_leaf_counts:
        pool = create_pool(leaf_count, backend="real")
        offsets = inn.build_leaves(pool, leaf_count)
        inner = inn.build_traditional(pool, offsets)
        node = inn.build_shortcut(pool, offsets)
        slots, inpage = make_slot_accesses(rng, config.motivation_accesses, leaf_count)
        expect = inn.expected_checksum(slots, 1)
        # one untimed pass per variant: steady-state translation behavior is
        # what this experiment compares, not first-touch costs
        inn.timed_access_traditional(inner, slots, inpage)
        inn.timed_access_shortcut(node.base, slots, inpage)
        trad, shot = [], []
        for rep in range(config.repetitions):
            ns, acc = inn.timed_access_traditional(inner, slots, inpage)
            inn.check_sum(f"motivation/traditional/{leaf_count}", acc, expect)
            rec.add("motivation", "traditional", "access", leaf_count, rep, ns,
                    config.motivation_accesses)
            trad.append(ns)
            ns, acc = inn.timed_access_shortcut(node.base, slots, inpage)
            inn.check_sum(f"motivation/shortcut/{leaf_count}", acc, expect)
            rec.add("motivation", "shortcut", "access", leaf_count, rep, ns,
                    config.motivation_accesses)
            shot.append(ns)
        node.destroy()
        pool.close()
        summary[leaf_count] = {
            "traditional": sorted(trad)[len(trad) // 2],
            "shortcut": sorted(shot)[len(shot) // 2],
        }
    return summary
