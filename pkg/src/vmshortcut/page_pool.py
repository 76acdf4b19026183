"""Self-managed pool of physical pages behind a single resizable memory file.

The pool hands out page-granular byte offsets.  A linear view maps the whole
file so any page can be read or written directly; shortcut nodes map the same
offsets elsewhere, so writes through either path alias.

Two backends share the interface:

* ``RealPagePool`` - a memory file (``memfd_create``) resized with
  ``ftruncate`` and viewed via a shared mapping.  Offsets are real file
  offsets and pages can be wired into shortcut regions.
* ``EmulatedPagePool`` - plain memory with the same offset arithmetic, for
  platforms without the native extension.  Functional behavior is identical;
  none of the timing properties hold.

Views are invalidated by growth and shrink: callers must not cache the view
(or addresses derived from it) across operations that can resize the pool.
``view_epoch`` increments on every re-establishment so cached casts can be
refreshed cheaply.
"""

from __future__ import annotations

import os
from collections import deque

import numpy as np

from vmshortcut._engine import REAL_BACKEND_AVAILABLE, native, require_native

PAGE_SIZE = 4096
DEFAULT_SHRINK_THRESHOLD = 64


class PoolError(Exception):
    """Raised when the OS refuses to create, grow, or map the pool."""


class _BasePagePool:
    """Offset bookkeeping shared by both backends."""

    page_size = PAGE_SIZE

    def __init__(self, initial_pages: int, shrink_threshold: int):
        if initial_pages < 1:
            raise ValueError("initial_pages must be >= 1")
        self.size_pages = 0
        self.shrink_threshold_pages = shrink_threshold
        self.free_offsets: deque[int] = deque()
        self._free_set: set[int] = set()
        self.view_epoch = 0
        self._grow_to(initial_pages)

    # -- backend hooks ----------------------------------------------------

    def _resize_storage(self, new_pages: int) -> None:
        raise NotImplementedError

    def view_address(self, offset: int) -> int:
        raise NotImplementedError

    def buffer(self):
        """Writable byte buffer over the whole pool (invalidated by resize)."""
        raise NotImplementedError

    # -- allocation -------------------------------------------------------

    def _grow_to(self, new_pages: int) -> None:
        old_pages = self.size_pages
        self._resize_storage(new_pages)
        self.size_pages = new_pages
        self.view_epoch += 1
        for i in range(old_pages, new_pages):
            off = i * PAGE_SIZE
            self.free_offsets.append(off)
            self._free_set.add(off)

    def acquire_page(self) -> int:
        """Pop a free page offset, growing the file (doubling) when empty.

        The returned page is zeroed.
        """
        if not self.free_offsets:
            self._grow_to(max(self.size_pages * 2, self.size_pages + 1))
        off = self.free_offsets.popleft()
        self._free_set.remove(off)
        self._zero_page(off)
        return off

    def release_page(self, offset: int) -> None:
        """Return a page.  Trailing pages are reclaimed by shrinking the file
        (cascading over free pages) once the pool exceeds the shrink threshold;
        interior pages go to the free queue."""
        self._check_offset(offset)
        if offset in self._free_set:
            raise ValueError(f"offset {offset} is already free")
        last = (self.size_pages - 1) * PAGE_SIZE
        if offset == last and self.size_pages > self.shrink_threshold_pages:
            new_pages = self.size_pages - 1
            while (
                new_pages > self.shrink_threshold_pages
                and (new_pages - 1) * PAGE_SIZE in self._free_set
            ):
                trailing = (new_pages - 1) * PAGE_SIZE
                self.free_offsets.remove(trailing)
                self._free_set.remove(trailing)
                new_pages -= 1
            self._resize_storage(new_pages)
            self.size_pages = new_pages
            self.view_epoch += 1
        else:
            self.free_offsets.append(offset)
            self._free_set.add(offset)

    def reserve_total(self, pages: int) -> None:
        """Pre-size the pool so at least `pages` pages exist (benchmark setup)."""
        if pages > self.size_pages:
            self._grow_to(pages)

    def acquire_pages(self, n: int) -> np.ndarray:
        """Acquire n pages at once; returns their offsets as a uint64 array."""
        deficit = n - len(self.free_offsets)
        if deficit > 0:
            self.reserve_total(self.size_pages + deficit)
        return np.array([self.acquire_page() for _ in range(n)], dtype=np.uint64)

    def _check_offset(self, offset: int) -> None:
        if offset % PAGE_SIZE != 0 or not (0 <= offset < self.size_pages * PAGE_SIZE):
            raise ValueError(f"offset {offset} out of range or unaligned")

    def _zero_page(self, offset: int) -> None:
        buf = self.buffer()
        buf[offset : offset + PAGE_SIZE] = b"\x00" * PAGE_SIZE

    # -- convenience accessors ---------------------------------------------

    def page_words(self, offset: int) -> memoryview:
        """The page at `offset` as 512 u64 words."""
        self._check_offset(offset)
        mv = memoryview(self.buffer())
        return mv[offset : offset + PAGE_SIZE].cast("Q")

    def read_bytes(self, offset: int, start: int, length: int) -> bytes:
        mv = memoryview(self.buffer())
        return bytes(mv[offset + start : offset + start + length])

    def write_bytes(self, offset: int, start: int, data: bytes) -> None:
        mv = memoryview(self.buffer())
        mv[offset + start : offset + start + len(data)] = data

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class EmulatedPagePool(_BasePagePool):
    """Array-backed pool: same contracts, no OS involvement.

    The linear view base is 0, so ``view_address`` returns the offset itself.
    """

    backend = "emulated"

    def __init__(self, initial_pages: int, shrink_threshold: int = DEFAULT_SHRINK_THRESHOLD):
        self._buf = np.zeros(0, dtype=np.uint8)
        super().__init__(initial_pages, shrink_threshold)

    def _resize_storage(self, new_pages: int) -> None:
        new = np.zeros(new_pages * PAGE_SIZE, dtype=np.uint8)
        keep = min(len(self._buf), len(new))
        new[:keep] = self._buf[:keep]
        self._buf = new

    def view_address(self, offset: int) -> int:
        self._check_offset(offset)
        return offset

    def buffer(self):
        return self._buf

    def _zero_page(self, offset: int) -> None:
        self._buf[offset : offset + PAGE_SIZE] = 0


class RealPagePool(_BasePagePool):
    """Memory-file pool with a shared linear view.

    Growth: ``ftruncate`` to the new size, re-establish the view, then
    zero-fill the fresh pages so later accesses take no hard fault.
    """

    backend = "real"

    def __init__(self, initial_pages: int, shrink_threshold: int = DEFAULT_SHRINK_THRESHOLD):
        require_native("the real page-pool backend")
        try:
            self.fd = os.memfd_create("vmshortcut-pool", 0)
        except OSError as exc:
            raise PoolError(f"memfd_create failed: {exc}") from exc
        self._view_base = 0
        self._view_len = 0
        self._np_view = None
        super().__init__(initial_pages, shrink_threshold)

    def _resize_storage(self, new_pages: int) -> None:
        new_len = new_pages * PAGE_SIZE
        try:
            os.ftruncate(self.fd, new_len)
        except OSError as exc:
            raise PoolError(f"ftruncate to {new_pages} pages failed: {exc}") from exc
        if self._view_len:
            native.unmap_region(self._view_base, self._view_len)
            self._view_base = 0
            self._np_view = None
        try:
            self._view_base = native.map_shared(self.fd, new_len)
        except OSError as exc:
            raise PoolError(f"mapping the linear view failed: {exc}") from exc
        old_len = self._view_len
        self._view_len = new_len
        if new_len > old_len:
            # touch fresh pages now; ftruncate content is already zero
            native.zero_fill(self._view_base + old_len, new_len - old_len)
        self._np_view = np.frombuffer(
            memoryview(native.wrap_region(self._view_base, new_len)), dtype=np.uint8
        )

    def view_address(self, offset: int) -> int:
        self._check_offset(offset)
        return self._view_base + offset

    @property
    def linear_view_base(self) -> int:
        return self._view_base

    def buffer(self):
        return self._np_view

    def _zero_page(self, offset: int) -> None:
        native.zero_fill(self._view_base + offset, PAGE_SIZE)

    def close(self) -> None:
        if self._view_len:
            native.unmap_region(self._view_base, self._view_len)
            self._view_len = 0
            self._np_view = None
        if self.fd >= 0:
            os.close(self.fd)
            self.fd = -1


def create_pool(
    initial_pages: int,
    shrink_threshold: int = DEFAULT_SHRINK_THRESHOLD,
    backend: str = "auto",
) -> _BasePagePool:
    """Create a page pool.  backend: 'real', 'emulated', or 'auto'."""
    if backend == "auto":
        backend = "real" if REAL_BACKEND_AVAILABLE else "emulated"
    if backend == "real":
        if not REAL_BACKEND_AVAILABLE:
            raise PoolError(
                "real backend unavailable: needs Linux and the compiled "
                "vmshortcut._native extension"
            )
        return RealPagePool(initial_pages, shrink_threshold)
    if backend == "emulated":
        return EmulatedPagePool(initial_pages, shrink_threshold)
    raise ValueError(f"unknown backend {backend!r}")
