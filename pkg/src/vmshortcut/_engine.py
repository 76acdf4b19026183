"""Engine selection: compiled kernels when available, pure Python otherwise.

Import-time probe.  The real rewiring backend (memory files + fixed-address
remapping) requires the compiled extension; the emulated backend works with
either engine.
"""

from __future__ import annotations

import os
import sys

if os.environ.get("VMSHORTCUT_FORCE_PYTHON") == "1":
    native = None
    HAVE_NATIVE = False
else:
    try:
        from vmshortcut import _native as native

        HAVE_NATIVE = True
    except ImportError:  # pragma: no cover - exercised on platforms without the ext
        native = None
        HAVE_NATIVE = False

REAL_BACKEND_AVAILABLE = HAVE_NATIVE and sys.platform.startswith("linux")


def require_native(what: str):
    if not HAVE_NATIVE:
        raise RuntimeError(
            f"{what} requires the compiled vmshortcut._native extension "
            "(build it with `pip install -e .` on Linux); "
            "use backend='emulated' for the portable fallback"
        )
    return native


def engine_name() -> str:
    return "native" if HAVE_NATIVE else "python"
