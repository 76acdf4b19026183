import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmshortcut import PAGE_SIZE, create_pool
from vmshortcut.page_pool import EmulatedPagePool

from conftest import requires_real


def test_create_pool_initial_free_offsets(backend):
    pool = create_pool(4, shrink_threshold=2, backend=backend)
    assert pool.size_pages == 4
    assert set(pool.free_offsets) == {0, 4096, 8192, 12288}
    pool.close()


def test_create_pool_minimal(backend):
    pool = create_pool(1, shrink_threshold=1, backend=backend)
    assert pool.size_pages == 1
    assert list(pool.free_offsets) == [0]
    pool.close()


def test_create_pool_offset_sum_arithmetic_series(backend):
    pool = create_pool(1024, shrink_threshold=16, backend=backend)
    # independent oracle: sum of the page-aligned offset series
    expected = sum(range(0, 1024 * PAGE_SIZE, PAGE_SIZE))
    assert expected == 4096 * (1024 * 1023 // 2)
    assert sum(pool.free_offsets) == expected
    pool.close()


def test_create_pool_rejects_zero_pages(backend):
    with pytest.raises(ValueError):
        create_pool(0, backend=backend)


def test_acquire_single_free_page(backend):
    pool = create_pool(1, shrink_threshold=1, backend=backend)
    assert pool.acquire_page() == 0
    assert not pool.free_offsets
    pool.close()


def test_acquire_grows_by_doubling(backend):
    pool = create_pool(2, shrink_threshold=1, backend=backend)
    assert {pool.acquire_page(), pool.acquire_page()} == {0, 4096}
    off = pool.acquire_page()
    assert off == 8192
    assert pool.size_pages == 4
    pool.close()


def test_acquired_pages_are_zeroed_after_reuse(pool):
    offs = [pool.acquire_page() for _ in range(4)]  # drain the free queue
    pool.write_bytes(offs[0], 0, b"\xff" * 64)
    pool.release_page(offs[0])
    off2 = pool.acquire_page()
    assert off2 == offs[0]
    assert pool.read_bytes(off2, 0, 64) == b"\x00" * 64


def test_acquires_return_distinct_offsets(pool):
    offs = [pool.acquire_page() for _ in range(32)]
    assert len(set(offs)) == len(offs)


def test_release_last_page_shrinks(backend):
    pool = create_pool(4, shrink_threshold=2, backend=backend)
    for _ in range(4):
        pool.acquire_page()
    pool.release_page(12288)
    assert pool.size_pages == 3
    pool.close()


def test_release_interior_page_goes_to_queue(backend):
    pool = create_pool(4, shrink_threshold=2, backend=backend)
    for _ in range(4):
        pool.acquire_page()
    pool.release_page(0)
    assert pool.size_pages == 4
    assert list(pool.free_offsets) == [0]
    pool.close()


def test_release_cascades_over_trailing_free_pages(backend):
    pool = create_pool(4, shrink_threshold=1, backend=backend)
    for _ in range(4):
        pool.acquire_page()
    pool.release_page(8192)
    assert pool.size_pages == 4
    pool.release_page(12288)
    assert pool.size_pages == 2
    assert not pool.free_offsets
    pool.close()


def test_release_below_threshold_never_shrinks(backend):
    pool = create_pool(2, shrink_threshold=2, backend=backend)
    pool.acquire_page()
    pool.acquire_page()
    pool.release_page(4096)
    assert pool.size_pages == 2
    pool.close()


def test_double_release_rejected(pool):
    off = pool.acquire_page()
    pool.release_page(off)
    with pytest.raises(ValueError):
        pool.release_page(off)


def test_release_out_of_range_rejected(pool):
    with pytest.raises(ValueError):
        pool.release_page(pool.size_pages * PAGE_SIZE)
    with pytest.raises(ValueError):
        pool.release_page(123)  # unaligned


def test_view_address_linearity(real_pool):
    base = real_pool.view_address(0)
    assert real_pool.view_address(4096) == base + 4096
    assert real_pool.view_address(8192) == base + 8192


def test_view_address_out_of_range(pool):
    with pytest.raises(ValueError):
        pool.view_address(pool.size_pages * PAGE_SIZE)


def test_write_via_view_read_via_shortcut_slot(pool):
    from vmshortcut import reserve

    off = pool.acquire_page()
    node = reserve(pool, 2)
    node.set_indirection(1, off)
    pool.write_bytes(off, 100, b"\xab")
    assert node.read_bytes(1, 100, 1) == b"\xab"
    node.destroy()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["acquire", "release"]), min_size=1, max_size=120))
def test_conservation_against_set_model(ops):
    """acquired + free partitions the file exactly, vs a reference set model."""
    pool = EmulatedPagePool(2, shrink_threshold=1)
    acquired = set()
    import random

    rnd = random.Random(1234)
    for op in ops:
        if op == "acquire":
            off = pool.acquire_page()
            assert off not in acquired
            acquired.add(off)
        elif acquired:
            off = rnd.choice(sorted(acquired))
            acquired.remove(off)
            pool.release_page(off)
        all_pages = set(range(0, pool.size_pages * PAGE_SIZE, PAGE_SIZE))
        free = set(pool.free_offsets)
        assert free | acquired == all_pages
        assert not (free & acquired)
    pool.close()


@requires_real
def test_no_hard_fault_spike_on_first_read(real_pool):
    real_pool.reserve_total(512)
    offs = [real_pool.acquire_page() for _ in range(512)]
    from vmshortcut._engine import native

    base = real_pool.view_address(0)
    t0 = time.perf_counter_ns()
    native.touch_pages(base, 512)
    first = time.perf_counter_ns() - t0
    t0 = time.perf_counter_ns()
    native.touch_pages(base, 512)
    second = time.perf_counter_ns() - t0
    assert first < 3 * max(second, 1), (first, second)
    del offs


def test_view_survives_growth_contents(pool):
    off = pool.acquire_page()
    pool.write_bytes(off, 8, b"WORLD")
    pool.reserve_total(64)  # forces growth and view re-establishment
    assert pool.read_bytes(off, 8, 5) == b"WORLD"
