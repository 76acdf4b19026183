"""vmshortcut: page-table shortcuts for radix-style index structures.

Exposes the page pool and rewiring primitives, the extendible hashing index
with its shortcut-enhanced variant, the baseline hash tables, and the
benchmark harness (``shortcut-bench`` CLI).
"""

from vmshortcut._engine import HAVE_NATIVE, REAL_BACKEND_AVAILABLE, engine_name
from vmshortcut.page_pool import (
    EmulatedPagePool,
    PAGE_SIZE,
    PoolError,
    RealPagePool,
    create_pool,
)
from vmshortcut.rewiring import UNMAPPED, reserve
from vmshortcut.extendible_hashing import CapacityError, ExtendibleIndex
from vmshortcut.shortcut_directory import ShortcutEH
from vmshortcut.baselines import ChainedTable, IncrementalTable, OpenTable

__version__ = "0.1.0"

__all__ = [
    "HAVE_NATIVE",
    "REAL_BACKEND_AVAILABLE",
    "engine_name",
    "PAGE_SIZE",
    "PoolError",
    "create_pool",
    "EmulatedPagePool",
    "RealPagePool",
    "reserve",
    "UNMAPPED",
    "ExtendibleIndex",
    "CapacityError",
    "ShortcutEH",
    "OpenTable",
    "IncrementalTable",
    "ChainedTable",
    "__version__",
]
