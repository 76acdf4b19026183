"""Index workloads over the five variants: insertion curves, hit-only
lookups, and a mixed read-heavy workload that tracks the version pair of the
shortcut-enhanced index through insertion bursts.

Lookup repetitions are interleaved round-robin across variants (all indexes
stay resident) so environment drift hits every variant equally; medians are
taken per variant.  Every run doubles as a correctness check: lookups must
all hit and sampled values must match the reference map.
"""

from __future__ import annotations

import time

import numpy as np

from vmshortcut.baselines import ChainedTable, IncrementalTable, OpenTable
from vmshortcut.extendible_hashing import ExtendibleIndex
from vmshortcut.page_pool import create_pool
from vmshortcut.shortcut_directory import ShortcutEH

from .config import BenchConfig, pin_to_core
from .keys import make_keys, make_values, rng_for, sample_hits
from .recorder import BenchCorrectnessError, Recorder

VARIANTS = ("HT", "HTI", "CH", "EH", "Shortcut-EH")
MIXED_VARIANTS = ("EH", "Shortcut-EH")


class _Instance:
    """A variant plus its pool lifecycle."""

    def __init__(self, name: str, config: BenchConfig, poll: float | None = None):
        self.name = name
        self.pool = None
        if name == "HT":
            self.index = OpenTable()
        elif name == "HTI":
            self.index = IncrementalTable(migrate_batch=config.hti_batch)
        elif name == "CH":
            self.index = ChainedTable(config.ch_slots)
        elif name == "EH":
            self.pool = create_pool(4, backend=config.backend)
            self.index = ExtendibleIndex(self.pool)
        elif name == "Shortcut-EH":
            self.pool = create_pool(4, backend=config.backend)
            self.index = ShortcutEH(
                self.pool,
                fanin_threshold=config.fanin_threshold,
                poll_interval=poll if poll is not None else config.poll_interval,
            )
        else:
            raise ValueError(name)

    def close(self):
        if isinstance(self.index, ShortcutEH):
            self.index.close()
        if self.pool is not None:
            self.pool.close()


def _verify_hits(name, index, sampled_keys, expected, label):
    out, found = index.lookup_many(sampled_keys)
    if not found.all():
        raise BenchCorrectnessError(f"{label}: {name} missed {int((found == 0).sum())} keys")
    bad = np.flatnonzero(out != expected)
    if len(bad):
        raise BenchCorrectnessError(f"{label}: {name} returned {len(bad)} wrong values")


def run(config: BenchConfig, rec: Recorder) -> dict:
    pin_to_core(config.cores[0] if config.cores else None)
    n = config.workload_n
    rng = rng_for(config.seed)
    keys = make_keys(rng, n)
    values = make_values(rng, n)
    # last write wins for duplicate keys (vanishingly rare, but exact)
    ref = {}
    if len(np.unique(keys)) != n:
        ref = dict(zip(keys.tolist(), values.tolist()))

    verify_idx = rng.integers(0, n, size=min(n, 100_000))
    verify_keys = keys[verify_idx]
    verify_vals = values[verify_idx].copy()
    if ref:
        verify_vals = np.array([ref[int(k)] for k in verify_keys], dtype=np.uint64)

    lookup_keys = sample_hits(rng, keys, config.workload_lookups)
    chunk = max(1, n // 100)
    summary = {"insert_total": {}, "lookup": {}, "mixed": {}}

    # (i) insertion with cumulative-time checkpoints; instances stay resident
    instances = {}
    for name in VARIANTS:
        inst = _Instance(name, config)
        instances[name] = inst
        index = inst.index
        cumulative = 0
        done = 0
        while done < n:
            hi = min(done + chunk, n)
            t0 = time.perf_counter_ns()
            index.insert_many(keys[done:hi], values[done:hi])
            cumulative += time.perf_counter_ns() - t0
            done = hi
            rec.add("workloads", name, "insert_cumulative", done, 0, cumulative, done)
        rec.add("workloads", name, "insert_total", n, 0, cumulative, n)
        summary["insert_total"][name] = cumulative
        _verify_hits(name, index, verify_keys, verify_vals, "workloads/insert")

    # (ii) random hit-only lookups, reps interleaved across variants
    seh = instances["Shortcut-EH"].index
    if not seh.wait_sync(timeout=60.0):
        raise BenchCorrectnessError("shortcut never converged before lookups")
    out = np.zeros(len(lookup_keys), dtype=np.uint64)
    found = np.zeros(len(lookup_keys), dtype=np.uint8)
    for inst in instances.values():  # warm every variant once, untimed
        inst.index.lookup_many(lookup_keys, out=out, found=found)
    reps: dict[str, list[int]] = {name: [] for name in VARIANTS}
    for rep in range(config.repetitions):
        for name in VARIANTS:
            found[:] = 0
            t0 = time.perf_counter_ns()
            instances[name].index.lookup_many(lookup_keys, out=out, found=found)
            ns = time.perf_counter_ns() - t0
            if not found.all():
                raise BenchCorrectnessError(f"workloads/lookup: {name} missed keys")
            rec.add("workloads", name, "lookup", len(lookup_keys), rep, ns, len(lookup_keys))
            reps[name].append(ns)
    for name in VARIANTS:
        summary["lookup"][name] = sorted(reps[name])[len(reps[name]) // 2]
    for inst in instances.values():
        inst.close()

    summary["mixed"] = _run_mixed(config, rec, keys, values)
    return summary


def _run_mixed(config: BenchConfig, rec: Recorder, keys, values) -> dict:
    """Bulk-load, then waves of accesses with a small insertion burst each."""
    n = config.workload_n
    bulk = int(0.92 * n)
    wave_accesses = config.mixed_wave_accesses
    inserts_per_wave = max(1, int(config.mixed_insert_fraction * wave_accesses))
    checkpoint = config.mixed_checkpoint
    waves = config.mixed_waves
    need = bulk + waves * inserts_per_wave
    if need > n:
        raise ValueError("not enough keys generated for the mixed workload")

    out_summary = {}
    for name in MIXED_VARIANTS:
        rng = rng_for(config.seed + 1)  # same access stream for both variants
        inst = _Instance(name, config, poll=config.mixed_poll_interval)
        index = inst.index
        index.insert_many(keys[:bulk], values[:bulk])
        if isinstance(index, ShortcutEH):
            if not index.wait_sync(timeout=60.0):
                raise BenchCorrectnessError("shortcut never converged after bulk load")
        # untimed steady-state warmup: at desk scale a wave is far shorter
        # than the translation-warmup transient, which would otherwise drown
        # the effect this experiment tracks
        index.lookup_many(sample_hits(rng, keys[:bulk], wave_accesses))
        inserted = bulk
        access_count = 0
        checkpoints = []
        for _ in range(waves):
            wave_done = 0
            ins_left = inserts_per_wave
            while wave_done < wave_accesses:
                todo = min(checkpoint, wave_accesses - wave_done)
                ins_now = min(ins_left, todo)
                if ins_now:
                    index.insert_many(
                        keys[inserted : inserted + ins_now],
                        values[inserted : inserted + ins_now],
                    )
                    inserted += ins_now
                    ins_left -= ins_now
                n_look = todo - ins_now
                look = sample_hits(rng, keys[:inserted], n_look)
                out = np.zeros(n_look, dtype=np.uint64)
                found = np.zeros(n_look, dtype=np.uint8)
                t0 = time.perf_counter_ns()
                index.lookup_many(look, out=out, found=found)
                ns = time.perf_counter_ns() - t0
                if not found.all():
                    raise BenchCorrectnessError(f"workloads/mixed: {name} missed keys")
                wave_done += todo
                access_count += todo
                rec.add("workloads", name, "mixed_lookup", access_count, 0, ns, max(1, n_look))
                point = {"access": access_count, "lookup_ns": ns / max(1, n_look)}
                if isinstance(index, ShortcutEH):
                    tv, sv = index.versions()
                    rec.add("workloads", name, "mixed_version_traditional", access_count, 0, tv)
                    rec.add("workloads", name, "mixed_version_shortcut", access_count, 0, sv)
                    point.update(tv=tv, sv=sv)
                checkpoints.append(point)
        out_summary[name] = checkpoints
        inst.close()
    return out_summary
