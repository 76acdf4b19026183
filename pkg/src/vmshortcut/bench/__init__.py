"""Benchmark harness: experiments, CSV recorder, and CLI."""

from .config import BenchConfig
from .recorder import CSV_HEADER, BenchCorrectnessError, Recorder

__all__ = ["BenchConfig", "Recorder", "CSV_HEADER", "BenchCorrectnessError"]
