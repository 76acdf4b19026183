"""The pure-Python fallback must behave identically on the emulated backend.

Runs a scripted workload in a subprocess with the extension import disabled
and compares its answers digest against the native engine's.
"""

import os
import subprocess
import sys

SCRIPT = r"""
import hashlib
import numpy as np
import vmshortcut as vs

assert vs.engine_name() == "{engine}", vs.engine_name()

rng = np.random.default_rng(1234)
keys = rng.integers(1, 2**64, size=4000, dtype=np.uint64)
vals = rng.integers(0, 2**64, size=4000, dtype=np.uint64)

digest = hashlib.sha256()
pool = vs.create_pool(4, backend="emulated")
eh = vs.ExtendibleIndex(pool)
eh.insert_many(keys[:2000], vals[:2000])
out, found = eh.lookup_many(keys)
digest.update(out.tobytes() + found.tobytes())
digest.update(bytes([eh.global_depth, eh.num_buckets % 251]))

seh = vs.ShortcutEH(pool := vs.create_pool(4, backend="emulated"), poll_interval=0.001)
seh.insert_many(keys, vals)
assert seh.wait_sync(20.0)
for route in ("auto", "traditional", "shortcut"):
    out, found = seh.lookup_many(keys, route=route)
    digest.update(out.tobytes() + found.tobytes())
seh.close()

for t in (vs.OpenTable(), vs.IncrementalTable(migrate_batch=16), vs.ChainedTable(slots=1024)):
    t.insert_many(keys, vals)
    out, found = t.lookup_many(keys)
    digest.update(out.tobytes() + found.tobytes())

print(digest.hexdigest())
"""


def run_engine(force_python: bool) -> str:
    env = dict(os.environ)
    if force_python:
        env["VMSHORTCUT_FORCE_PYTHON"] = "1"
    else:
        env.pop("VMSHORTCUT_FORCE_PYTHON", None)
    engine = "python" if force_python else "native"
    r = subprocess.run(
        [sys.executable, "-c", SCRIPT.format(engine=engine)],
        capture_output=True,
        text=True,
        env=env,
        timeout=300,
    )
    assert r.returncode == 0, r.stderr
    return r.stdout.strip()


def test_python_fallback_matches_native_engine():
    native = run_engine(force_python=False)
    python = run_engine(force_python=True)
    assert native == python
