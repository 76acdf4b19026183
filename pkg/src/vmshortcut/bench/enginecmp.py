"""Compiled-kernel vs pure-Python engine comparison on the emulated backend.

Times the same index workload driven two ways: through the batch methods
(compiled kernels when built) and through the scalar per-operation API
(what the pure-Python fallback executes).  Validates that both produce the
same answers before reporting speedups.
"""

from __future__ import annotations

import time

import numpy as np

from vmshortcut._engine import HAVE_NATIVE, engine_name
from vmshortcut.extendible_hashing import ExtendibleIndex
from vmshortcut.page_pool import create_pool

from .config import BenchConfig
from .keys import make_keys, make_values, rng_for
from .recorder import BenchCorrectnessError, Recorder


def run(config: BenchConfig, rec: Recorder) -> dict:
    n = 100_000 if config.desk else 1_000_000
    rng = rng_for(config.seed)
    keys = make_keys(rng, n)
    values = make_values(rng, n)
    summary = {"engine": engine_name()}

    # batch path (compiled kernels when available)
    pool = create_pool(4, backend="emulated")
    batch_index = ExtendibleIndex(pool)
    t0 = time.perf_counter_ns()
    batch_index.insert_many(keys, values)
    ins_batch = time.perf_counter_ns() - t0
    out_b = np.zeros(n, dtype=np.uint64)
    found_b = np.zeros(n, dtype=np.uint8)
    t0 = time.perf_counter_ns()
    batch_index.lookup_many(keys, out=out_b, found=found_b)
    look_batch = time.perf_counter_ns() - t0
    pool.close()
    variant = "native-batch" if HAVE_NATIVE else "python-batch"
    rec.add("enginecmp", variant, "insert", n, 0, ins_batch, n)
    rec.add("enginecmp", variant, "lookup", n, 0, look_batch, n)
    summary[variant] = {"insert": ins_batch, "lookup": look_batch}

    # scalar path (pure-Python per-op loop, the fallback's execution mode)
    pool = create_pool(4, backend="emulated")
    scalar_index = ExtendibleIndex(pool)
    t0 = time.perf_counter_ns()
    for k, v in zip(keys.tolist(), values.tolist()):
        scalar_index.insert(k, v)
    ins_scalar = time.perf_counter_ns() - t0
    t0 = time.perf_counter_ns()
    bad = 0
    for i, k in enumerate(keys.tolist()):
        v = scalar_index.lookup(k)
        if v is None or (not found_b[i]) or int(out_b[i]) != int(v):
            bad += 1
    look_scalar = time.perf_counter_ns() - t0
    pool.close()
    if bad:
        raise BenchCorrectnessError(f"enginecmp: {bad} answers differ between engines")
    rec.add("enginecmp", "python-scalar", "insert", n, 0, ins_scalar, n)
    rec.add("enginecmp", "python-scalar", "lookup", n, 0, look_scalar, n)
    summary["python-scalar"] = {"insert": ins_scalar, "lookup": look_scalar}
    summary["speedup_insert"] = ins_scalar / max(1, ins_batch)
    summary["speedup_lookup"] = look_scalar / max(1, look_batch)
    return summary
