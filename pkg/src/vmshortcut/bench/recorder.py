"""Benchmark result rows and the stable CSV schema.

Every experiment emits the same columns; the plot frontend keys off
`experiment` and `phase` only.  `normalized_nanos` divides by the row's
documented divisor (pages for setup phases, accesses for access phases).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

CSV_HEADER = [
    "experiment",
    "variant",
    "phase",
    "parameter",
    "repetition",
    "nanos",
    "normalized_nanos",
]


class BenchCorrectnessError(Exception):
    """An embedded correctness check failed; the timing run is invalid."""


@dataclass
class BenchRow:
    experiment: str
    variant: str
    phase: str
    parameter: int
    repetition: int
    nanos: int
    normalized_nanos: float


class Recorder:
    def __init__(self):
        self.rows: list[BenchRow] = []

    def add(self, experiment, variant, phase, parameter, repetition, nanos, divisor=1):
        self.rows.append(
            BenchRow(
                experiment,
                variant,
                phase,
                int(parameter),
                int(repetition),
                int(nanos),
                nanos / divisor if divisor else float(nanos),
            )
        )

    def write(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow(
                    [
                        r.experiment,
                        r.variant,
                        r.phase,
                        r.parameter,
                        r.repetition,
                        r.nanos,
                        repr(r.normalized_nanos),
                    ]
                )

    def select(self, **match):
        out = [
            r
            for r in self.rows
            if all(getattr(r, k) == v for k, v in match.items())
        ]
        return out

    def median_normalized(self, **match) -> float:
        vals = sorted(r.normalized_nanos for r in self.select(**match))
        if not vals:
            raise KeyError(f"no rows match {match}")
        return vals[len(vals) // 2]
