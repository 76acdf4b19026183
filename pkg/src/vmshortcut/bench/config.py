"""Benchmark configuration and the desk/paper scale presets.

Desk presets finish each experiment in minutes on a laptop; paper presets
run the full-scale parameters and need tens of GB plus a raised
vm.max_map_count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from vmshortcut._engine import REAL_BACKEND_AVAILABLE


@dataclass
class BenchConfig:
    experiment: str
    scale: str = "desk"
    seed: int = 1
    backend: str = "real"
    out: str | None = None
    cores: list[int] = field(default_factory=list)
    fanin_threshold: int = 8
    poll_ms: float | None = None  # None -> scale preset default
    hti_batch: int = 128
    repetitions: int = 3

    def __post_init__(self):
        if self.scale not in ("desk", "paper"):
            raise ValueError("scale must be 'desk' or 'paper'")
        if self.backend not in ("real", "emulated"):
            raise ValueError("backend must be 'real' or 'emulated'")
        if self.backend == "real" and not REAL_BACKEND_AVAILABLE:
            raise RuntimeError(
                "the real backend needs Linux with the compiled extension; "
                "rerun with --backend emulated (timing rows will be meaningless)"
            )

    @property
    def desk(self) -> bool:
        return self.scale == "desk"

    # -- per-experiment parameters ------------------------------------------

    @property
    def motivation_leaf_counts(self):
        # desk floor 2^13: below that the whole structure is cache-resident
        # and the indirection cost this experiment isolates vanishes
        return [1 << p for p in (range(13, 19) if self.desk else range(10, 23))]

    @property
    def motivation_accesses(self) -> int:
        return 10**6 if self.desk else 10**7

    @property
    def creation_slots(self) -> int:
        return 1 << 16 if self.desk else 1 << 22

    @property
    def creation_accesses(self) -> int:
        return 10**6 if self.desk else 10**7

    @property
    def fanin_slots(self) -> int:
        return 1 << 18 if self.desk else 1 << 22

    @property
    def fanin_values(self):
        return [512, 256, 128, 64, 32, 16, 8, 4, 2, 1]

    @property
    def fanin_accesses(self) -> int:
        return 10**6 if self.desk else 10**7

    @property
    def shootdown_region_pages(self) -> int:
        return 1 << 16 if self.desk else 1 << 21  # 256 MB desk, 8 GB paper

    @property
    def shootdown_remaps(self) -> int:
        return 1 << 14 if self.desk else 1 << 19

    @property
    def shootdown_max_readers(self) -> int:
        cores = os.cpu_count() or 1
        return max(0, min(7, cores - 1))

    @property
    def workload_n(self) -> int:
        return 10**6 if self.desk else 10**8

    @property
    def workload_lookups(self) -> int:
        return self.workload_n

    @property
    def mixed_checkpoint(self) -> int:
        return 10_000

    @property
    def mixed_waves(self) -> int:
        return 4

    @property
    def mixed_wave_accesses(self) -> int:
        return max(self.mixed_checkpoint, int(0.02 * self.workload_n))

    @property
    def mixed_insert_fraction(self) -> float:
        return 0.01

    @property
    def poll_interval(self) -> float:
        """Mapper poll interval in seconds (25 ms default)."""
        if self.poll_ms is not None:
            return self.poll_ms / 1000.0
        return 0.025

    @property
    def mixed_poll_interval(self) -> float:
        """Poll interval for the mixed sub-experiment's instances.

        A desk-scale wave runs in single-digit milliseconds, so the desk
        preset polls at 0.5 ms there or the shortcut could never converge
        inside a wave; --poll-ms overrides.
        """
        if self.poll_ms is not None:
            return self.poll_ms / 1000.0
        return 0.0005 if self.desk else 0.025

    @property
    def ch_slots(self) -> int:
        """Chained-hashing table size per scale preset.

        At paper scale the fixed table gets 1 GB = 2^26 slots for the 10^8
        entries; desk scale keeps the slots-per-entry ratio and rounds up to
        a power of two.
        """
        if not self.desk:
            return 1 << 26
        target = (1 << 26) * self.workload_n / 10**8
        slots = 1
        while slots < target:
            slots *= 2
        return slots


def pin_to_core(core: int | None) -> None:
    """Pin the calling thread to one core (best effort)."""
    if core is None:
        return
    try:
        os.sched_setaffinity(0, {core})
    except (AttributeError, OSError):
        pass
