# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Native core: virtual-memory syscall wrappers and hot access/insert kernels.

Everything timing-sensitive lives here so benchmark loops run at native
speed with the GIL released.  The pure-Python modules fall back to slow
paths when this extension is unavailable.
"""

cimport cython
from libc.stdint cimport uint8_t, uint32_t, uint64_t, int64_t, uintptr_t
from libc.string cimport memset
from libc.errno cimport errno
from posix.time cimport clock_gettime, timespec, CLOCK_MONOTONIC

cdef extern from "sys/mman.h" nogil:
    void *c_mmap "mmap"(void *addr, size_t length, int prot, int flags, int fd, long offset)
    int c_munmap "munmap"(void *addr, size_t length)
    int PROT_READ
    int PROT_WRITE
    int MAP_SHARED
    int MAP_PRIVATE
    int MAP_FIXED
    int MAP_ANONYMOUS
    int MAP_NORESERVE
    int MAP_POPULATE

cdef extern from *:
    """
    #include <stdint.h>
    static inline void vs_store_release_i64(int64_t *p, int64_t v) {
        __atomic_store_n(p, v, __ATOMIC_RELEASE);
    }
    static inline int64_t vs_load_acquire_i64(const int64_t *p) {
        return __atomic_load_n(p, __ATOMIC_ACQUIRE);
    }
    static inline void vs_store_release_u64(uint64_t *p, uint64_t v) {
        __atomic_store_n(p, v, __ATOMIC_RELEASE);
    }
    static inline uint64_t vs_load_acquire_u64(const uint64_t *p) {
        return __atomic_load_n(p, __ATOMIC_ACQUIRE);
    }
    #define VS_HASH_CONST 0x9E3779B97F4A7C15ULL
    #define VS_CH_NONE 0xFFFFFFFFFFFFFFFFULL
    """
    void vs_store_release_i64(int64_t *p, int64_t v) nogil
    int64_t vs_load_acquire_i64(const int64_t *p) nogil
    void vs_store_release_u64(uint64_t *p, uint64_t v) nogil
    uint64_t vs_load_acquire_u64(const uint64_t *p) nogil
    uint64_t VS_HASH_CONST
    uint64_t VS_CH_NONE

cdef enum:
    PAGE = 4096
    PAGE_WORDS = 512            # u64 words per page
    BUCKET_HEADER_WORDS = 2     # word 0: local depth, word 1: count
    BUCKET_CAPACITY = 255       # (4096 - 16) / 16 entries

HAVE_NATIVE = True
PAGE_SIZE = PAGE

cdef void *MAP_FAILED_PTR = <void *> -1


cdef inline uint64_t _hash(uint64_t key) nogil:
    return key * VS_HASH_CONST


cdef inline uint64_t _dir_slot(uint64_t h, int global_depth) nogil:
    if global_depth == 0:
        return 0
    return h >> (64 - global_depth)


# ---------------------------------------------------------------------------
# Raw virtual-memory plumbing
# ---------------------------------------------------------------------------

def reserve_region(size_t length):
    """Reserve `length` bytes of anonymous private memory; returns the address.

    A reservation only: no physical pages are committed and reads yield
    zeros until individual pages are remapped.
    """
    cdef void *addr = c_mmap(NULL, length, PROT_READ | PROT_WRITE,
                             MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0)
    if addr == MAP_FAILED_PTR:
        raise OSError(errno, "mmap(anonymous reservation) failed")
    return <uintptr_t> addr


def map_shared(int fd, size_t length):
    """Map `length` bytes of the memory file read/write shared; returns the address."""
    cdef void *addr = c_mmap(NULL, length, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0)
    if addr == MAP_FAILED_PTR:
        raise OSError(errno, "mmap(shared view) failed")
    return <uintptr_t> addr


def unmap_region(size_t addr, size_t length):
    if c_munmap(<void *> addr, length) != 0:
        raise OSError(errno, "munmap failed")


def remap_fixed(size_t addr, size_t length, int fd, size_t offset, bint populate=False):
    """Replace the mapping at [addr, addr+length) with file pages at `offset`.

    Shared + fixed placement: existing page-table entries for the range are
    invalidated and the next access (or the populate flag) establishes the
    new translation.
    """
    cdef int flags = MAP_SHARED | MAP_FIXED
    if populate:
        flags |= MAP_POPULATE
    cdef void *res = c_mmap(<void *> addr, length, PROT_READ | PROT_WRITE,
                            flags, fd, <long> offset)
    if res == MAP_FAILED_PTR:
        raise OSError(errno, "mmap(fixed remap) failed")
    if <uintptr_t> res != addr:
        raise OSError(0, "fixed remap moved: requested 0x%x got 0x%x" % (addr, <uintptr_t> res))


def remap_slots(size_t base, int fd, const uint64_t[::1] offsets, size_t start_slot,
                bint coalesce, bint populate=False):
    """Remap pages [start_slot, start_slot+len) of the region at `base` to the
    given file offsets.  With `coalesce`, runs of consecutive offsets collapse
    into a single remap call.  Returns the number of underlying remap calls.
    """
    cdef Py_ssize_t n = offsets.shape[0]
    cdef Py_ssize_t i = 0, run
    cdef int calls = 0
    cdef int flags = MAP_SHARED | MAP_FIXED
    cdef void *res
    cdef size_t addr
    cdef long off
    if populate:
        flags |= MAP_POPULATE
    while i < n:
        run = 1
        if coalesce:
            while i + run < n and offsets[i + run] == offsets[i] + <uint64_t> (run * PAGE):
                run += 1
        addr = base + (start_slot + i) * PAGE
        off = <long> offsets[i]
        with nogil:
            res = c_mmap(<void *> addr, run * PAGE, PROT_READ | PROT_WRITE, flags, fd, off)
        if res == MAP_FAILED_PTR:
            raise OSError(errno, "mmap(fixed remap) failed at slot %d" % (start_slot + i))
        calls += 1
        i += run
    return calls


def wrap_region(size_t addr, size_t length):
    """Expose raw memory as a writable buffer (no ownership taken)."""
    return <uint8_t[:length]> (<uint8_t *> addr)


def zero_fill(size_t addr, size_t length):
    with nogil:
        memset(<void *> addr, 0, length)


def touch_pages(size_t addr, size_t npages):
    """Read one byte per page, forcing page-table entries to exist."""
    cdef uint64_t acc = 0
    cdef size_t i
    cdef uint8_t *p = <uint8_t *> addr
    with nogil:
        for i in range(npages):
            acc += p[i * PAGE]
    return acc


def read_maps_contains(size_t addr):
    """True if `addr` falls inside any mapping of the current process."""
    cdef uintptr_t lo, hi
    with open("/proc/self/maps") as fh:
        for line in fh:
            span = line.split(None, 1)[0]
            lo_s, hi_s = span.split("-")
            lo = int(lo_s, 16)
            hi = int(hi_s, 16)
            if lo <= addr < hi:
                return True
    return False


# ---------------------------------------------------------------------------
# Version publication (maintenance worker <-> lookup threads)
# ---------------------------------------------------------------------------

def publish_i64(int64_t[::1] arr, Py_ssize_t idx, int64_t value):
    vs_store_release_i64(&arr[idx], value)


def load_i64(const int64_t[::1] arr, Py_ssize_t idx):
    return vs_load_acquire_i64(&arr[idx])


def publish_u64(uint64_t[::1] arr, Py_ssize_t idx, uint64_t value):
    vs_store_release_u64(&arr[idx], value)


# ---------------------------------------------------------------------------
# Inner-node access kernels (motivation / creation / fan-in experiments)
# ---------------------------------------------------------------------------

def set_pointer_array(size_t dst, const uint64_t[::1] addrs):
    """Store leaf addresses into a pointer-array inner node (timed loop)."""
    cdef Py_ssize_t i, n = addrs.shape[0]
    cdef uint64_t *d = <uint64_t *> dst
    with nogil:
        for i in range(n):
            d[i] = addrs[i]


def access_ptr_array(size_t inner, const uint32_t[::1] slots, const uint32_t[::1] inpage):
    """Traditional lookup loop: resolve the pointer, then read inside the leaf."""
    cdef Py_ssize_t i, n = slots.shape[0]
    cdef uint64_t *node = <uint64_t *> inner
    cdef uint64_t acc = 0
    cdef uintptr_t leaf
    with nogil:
        for i in range(n):
            leaf = <uintptr_t> node[slots[i]]
            acc += (<uint64_t *> (leaf + inpage[i]))[0]
    return acc


def access_region(size_t base, const uint32_t[::1] slots, const uint32_t[::1] inpage):
    """Shortcut lookup loop: the slot is an offset into one consecutive region."""
    cdef Py_ssize_t i, n = slots.shape[0]
    cdef uint64_t acc = 0
    with nogil:
        for i in range(n):
            acc += (<uint64_t *> (base + (<size_t> slots[i]) * PAGE + inpage[i]))[0]
    return acc


# ---------------------------------------------------------------------------
# Shootdown experiment kernels
# ---------------------------------------------------------------------------

def shoot_random(size_t region, int fd, const uint64_t[::1] page_idx,
                 const uint64_t[::1] offsets, bint populate):
    """Remap randomly selected pages of an already mapped region (timed inside).

    Returns total nanoseconds spent in the remap loop.
    """
    cdef Py_ssize_t i, n = page_idx.shape[0]
    cdef int flags = MAP_SHARED | MAP_FIXED
    cdef void *res = NULL
    cdef timespec t0, t1
    cdef long long ns
    if populate:
        flags |= MAP_POPULATE
    with nogil:
        clock_gettime(CLOCK_MONOTONIC, &t0)
        for i in range(n):
            res = c_mmap(<void *> (region + page_idx[i] * PAGE), PAGE,
                         PROT_READ | PROT_WRITE, flags, fd, <long> offsets[i])
            if res == MAP_FAILED_PTR:
                break
        clock_gettime(CLOCK_MONOTONIC, &t1)
    if res == MAP_FAILED_PTR:
        raise OSError(errno, "mmap(fixed remap) failed during shoot loop")
    ns = (t1.tv_sec - t0.tv_sec) * 1000000000LL + (t1.tv_nsec - t0.tv_nsec)
    return ns


def read_pages_until(size_t region, size_t npages, int64_t[::1] stop_flag):
    """Sequentially read the region (one word per page) until the flag is set.

    Returns (pages_read, nanoseconds) measured inside the loop.
    """
    cdef uint64_t acc = 0
    cdef long long pages = 0
    cdef size_t i
    cdef timespec t0, t1
    cdef long long ns
    with nogil:
        clock_gettime(CLOCK_MONOTONIC, &t0)
        while vs_load_acquire_i64(&stop_flag[0]) == 0:
            for i in range(npages):
                acc += (<uint64_t *> (region + i * PAGE))[0]
            pages += <long long> npages
            if vs_load_acquire_i64(&stop_flag[0]) != 0:
                break
        clock_gettime(CLOCK_MONOTONIC, &t1)
    ns = (t1.tv_sec - t0.tv_sec) * 1000000000LL + (t1.tv_nsec - t0.tv_nsec)
    if acc == 0x5F5F5F5F5F5F5F5F:  # keep the accumulator alive
        pages += 0
    return pages, ns


def read_pages_fixed(size_t region, size_t npages, long long total_pages):
    """Sequentially read `total_pages` pages (wrapping); returns nanoseconds."""
    cdef uint64_t acc = 0
    cdef long long done = 0
    cdef size_t i = 0
    cdef timespec t0, t1
    with nogil:
        clock_gettime(CLOCK_MONOTONIC, &t0)
        while done < total_pages:
            acc += (<uint64_t *> (region + i * PAGE))[0]
            i += 1
            if i == npages:
                i = 0
            done += 1
        clock_gettime(CLOCK_MONOTONIC, &t1)
    if acc == 0x5F5F5F5F5F5F5F5F:
        done += 0
    return (t1.tv_sec - t0.tv_sec) * 1000000000LL + (t1.tv_nsec - t0.tv_nsec)


# ---------------------------------------------------------------------------
# Bucket primitives (4 KB page: u64 local_depth, u64 count, 255 x 16 B entries)
# ---------------------------------------------------------------------------

cdef inline int _bucket_lookup(const uint64_t *bw, uint64_t key, uint64_t h, uint64_t *out) nogil:
    cdef uint32_t pos = (<uint32_t> h) % BUCKET_CAPACITY
    cdef int t
    cdef uint64_t k
    for t in range(BUCKET_CAPACITY):
        k = bw[BUCKET_HEADER_WORDS + 2 * pos]
        if k == key:
            out[0] = bw[BUCKET_HEADER_WORDS + 2 * pos + 1]
            return 1
        if k == 0:
            return 0
        pos += 1
        if pos == BUCKET_CAPACITY:
            pos = 0
    return 0


cdef inline int _bucket_insert(uint64_t *bw, uint64_t key, uint64_t h, uint64_t value) nogil:
    """1 = stored or updated, 0 = bucket full."""
    cdef uint32_t pos = (<uint32_t> h) % BUCKET_CAPACITY
    cdef int t
    cdef uint64_t k
    for t in range(BUCKET_CAPACITY):
        k = bw[BUCKET_HEADER_WORDS + 2 * pos]
        if k == key:
            bw[BUCKET_HEADER_WORDS + 2 * pos + 1] = value
            return 1
        if k == 0:
            bw[BUCKET_HEADER_WORDS + 2 * pos] = key
            bw[BUCKET_HEADER_WORDS + 2 * pos + 1] = value
            bw[1] += 1
            return 1
        pos += 1
        if pos == BUCKET_CAPACITY:
            pos = 0
    return 0


def split_bucket(uint8_t[::1] pool, size_t old_off, size_t a_off, size_t b_off, int new_depth):
    """Rehash a full bucket's entries into two fresh buckets by the next hash bit.

    Returns the number of entries that moved to the high (b) bucket.
    """
    cdef uint64_t *old = <uint64_t *> &pool[old_off]
    cdef uint64_t *a = <uint64_t *> &pool[a_off]
    cdef uint64_t *b = <uint64_t *> &pool[b_off]
    cdef int i, moved = 0
    cdef uint64_t k, v, h
    with nogil:
        a[0] = <uint64_t> new_depth
        a[1] = 0
        b[0] = <uint64_t> new_depth
        b[1] = 0
        for i in range(BUCKET_CAPACITY):
            k = old[BUCKET_HEADER_WORDS + 2 * i]
            if k == 0:
                continue
            v = old[BUCKET_HEADER_WORDS + 2 * i + 1]
            h = _hash(k)
            if (h >> (64 - new_depth)) & 1:
                _bucket_insert(b, k, h, v)
                moved += 1
            else:
                _bucket_insert(a, k, h, v)
    return moved


# ---------------------------------------------------------------------------
# Extendible-hashing kernels (directory of pool offsets, top-bit routing)
# ---------------------------------------------------------------------------

def eh_insert_batch(const uint64_t[::1] directory, int global_depth, uint8_t[::1] pool,
                    const uint64_t[::1] keys, const uint64_t[::1] values, Py_ssize_t start):
    """Insert keys[start:] until a bucket fills; returns the index of the key
    that needs a split, or len(keys) when done."""
    cdef Py_ssize_t i = start, n = keys.shape[0]
    cdef uint64_t h, k
    cdef uint64_t *bw
    cdef uint8_t *base = &pool[0]
    with nogil:
        while i < n:
            k = keys[i]
            h = _hash(k)
            bw = <uint64_t *> (base + directory[_dir_slot(h, global_depth)])
            if _bucket_insert(bw, k, h, values[i]) == 0:
                break
            i += 1
    return i


def eh_lookup_batch(const uint64_t[::1] directory, int global_depth, const uint8_t[::1] pool,
                    const uint64_t[::1] keys, uint64_t[::1] out, uint8_t[::1] found):
    """Traditional-route lookups; returns the number of hits."""
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef uint64_t h, v
    cdef Py_ssize_t hits = 0
    cdef const uint8_t *base = &pool[0]
    with nogil:
        for i in range(n):
            h = _hash(keys[i])
            if _bucket_lookup(<const uint64_t *> (base + directory[_dir_slot(h, global_depth)]),
                              keys[i], h, &v):
                out[i] = v
                found[i] = 1
                hits += 1
            else:
                out[i] = 0
                found[i] = 0
    return hits


def sc_lookup_batch_real(size_t sc_base, int global_depth,
                         const uint64_t[::1] keys, uint64_t[::1] out, uint8_t[::1] found):
    """Shortcut-route lookups on a live region (caller guarantees sync)."""
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef uint64_t h, v
    cdef Py_ssize_t hits = 0
    with nogil:
        for i in range(n):
            h = _hash(keys[i])
            if _bucket_lookup(<const uint64_t *> (sc_base + _dir_slot(h, global_depth) * PAGE),
                              keys[i], h, &v):
                out[i] = v
                found[i] = 1
                hits += 1
            else:
                out[i] = 0
                found[i] = 0
    return hits


def sc_lookup_batch_emulated(const uint64_t[::1] slot_offsets, int global_depth,
                             const uint8_t[::1] pool, const uint64_t[::1] keys,
                             uint64_t[::1] out, uint8_t[::1] found):
    """Shortcut-route lookups through the emulated node's indirection table."""
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef uint64_t h, v
    cdef Py_ssize_t hits = 0
    cdef const uint8_t *base = &pool[0]
    with nogil:
        for i in range(n):
            h = _hash(keys[i])
            if _bucket_lookup(<const uint64_t *> (base + slot_offsets[_dir_slot(h, global_depth)]),
                              keys[i], h, &v):
                out[i] = v
                found[i] = 1
                hits += 1
            else:
                out[i] = 0
                found[i] = 0
    return hits


def seh_lookup_batch_real(const uint64_t[::1] directory, int global_depth,
                          const uint8_t[::1] pool, const int64_t[::1] versions,
                          const uint64_t[::1] sc_base_holder, bint fanin_ok,
                          const uint64_t[::1] keys, uint64_t[::1] out, uint8_t[::1] found):
    """Auto-routed lookups: per access, take the shortcut iff the directories
    are in sync and the fan-in gate allows it.  Returns (hits, shortcut_routed).
    """
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef uint64_t h, v
    cdef Py_ssize_t hits = 0
    cdef long long routed = 0
    cdef int64_t tv = versions[0]
    cdef const uint8_t *base = &pool[0]
    cdef size_t sc
    cdef const uint64_t *bw
    with nogil:
        for i in range(n):
            h = _hash(keys[i])
            if fanin_ok and vs_load_acquire_i64(&versions[1]) == tv:
                sc = <size_t> vs_load_acquire_u64(&sc_base_holder[0])
                bw = <const uint64_t *> (sc + _dir_slot(h, global_depth) * PAGE)
                routed += 1
            else:
                bw = <const uint64_t *> (base + directory[_dir_slot(h, global_depth)])
            if _bucket_lookup(bw, keys[i], h, &v):
                out[i] = v
                found[i] = 1
                hits += 1
            else:
                out[i] = 0
                found[i] = 0
    return hits, routed


# ---------------------------------------------------------------------------
# Open-addressing table kernels (interleaved [key, value] slots, low-bit mask)
# ---------------------------------------------------------------------------

cdef inline int _ot_insert(uint64_t *t, uint64_t mask, uint64_t key, uint64_t value) nogil:
    """1 = new key stored, 0 = existing key updated."""
    cdef uint64_t idx = _hash(key) & mask
    cdef uint64_t k
    while True:
        k = t[2 * idx]
        if k == key:
            t[2 * idx + 1] = value
            return 0
        if k == 0:
            t[2 * idx] = key
            t[2 * idx + 1] = value
            return 1
        idx = (idx + 1) & mask


cdef inline int _ot_lookup(const uint64_t *t, uint64_t mask, uint64_t key, uint64_t *out) nogil:
    cdef uint64_t idx = _hash(key) & mask
    cdef uint64_t k
    while True:
        k = t[2 * idx]
        if k == key:
            out[0] = t[2 * idx + 1]
            return 1
        if k == 0:
            return 0
        idx = (idx + 1) & mask


def ht_insert_batch(uint64_t[::1] table, Py_ssize_t count, Py_ssize_t grow_at,
                    const uint64_t[::1] keys, const uint64_t[::1] values, Py_ssize_t start):
    """Insert until the load threshold is crossed; returns (next_index, count)."""
    cdef Py_ssize_t i = start, n = keys.shape[0]
    cdef uint64_t mask = (table.shape[0] // 2) - 1
    cdef uint64_t *t = &table[0]
    with nogil:
        while i < n:
            count += _ot_insert(t, mask, keys[i], values[i])
            i += 1
            if count > grow_at:
                break
    return i, count


def ht_rehash(const uint64_t[::1] old_table, uint64_t[::1] new_table):
    """Move every entry into the (larger) table."""
    cdef Py_ssize_t i, n = old_table.shape[0] // 2
    cdef uint64_t mask = (new_table.shape[0] // 2) - 1
    cdef uint64_t *t = &new_table[0]
    with nogil:
        for i in range(n):
            if old_table[2 * i] != 0:
                _ot_insert(t, mask, old_table[2 * i], old_table[2 * i + 1])


def ht_lookup_batch(const uint64_t[::1] table, const uint64_t[::1] keys,
                    uint64_t[::1] out, uint8_t[::1] found):
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef uint64_t mask = (table.shape[0] // 2) - 1
    cdef uint64_t v
    cdef Py_ssize_t hits = 0
    cdef const uint64_t *t = &table[0]
    with nogil:
        for i in range(n):
            if _ot_lookup(t, mask, keys[i], &v):
                out[i] = v
                found[i] = 1
                hits += 1
            else:
                out[i] = 0
                found[i] = 0
    return hits


# ---------------------------------------------------------------------------
# Incremental-rehash table kernels
# ---------------------------------------------------------------------------
# state: [0] old_count, [1] new_count, [2] migrate_cursor, [3] migrating flag

cdef inline void _hti_migrate(uint64_t *old_t, Py_ssize_t old_slots, uint64_t new_mask,
                              uint64_t *new_t, int64_t *st, int batch) nogil:
    cdef int moved = 0
    cdef Py_ssize_t cur = <Py_ssize_t> st[2]
    while moved < batch and st[0] > 0 and cur < old_slots:
        if old_t[2 * cur] != 0:
            _ot_insert(new_t, new_mask, old_t[2 * cur], old_t[2 * cur + 1])
            old_t[2 * cur] = 0
            st[0] -= 1
            st[1] += 1
            moved += 1
        cur += 1
    st[2] = cur
    if st[0] == 0 or cur >= old_slots:
        st[3] = 0


def hti_insert_batch(uint64_t[::1] old_table, uint64_t[::1] new_table, int64_t[::1] state,
                     Py_ssize_t grow_at, int migrate_batch,
                     const uint64_t[::1] keys, const uint64_t[::1] values, Py_ssize_t start):
    """Insert with incremental migration; returns (next_index, reason).

    reason: 0 = batch done, 1 = growth trigger (caller allocates the new
    table and flips state), 2 = migration finished (caller drops old table).
    """
    cdef Py_ssize_t i = start, n = keys.shape[0]
    cdef Py_ssize_t old_slots = old_table.shape[0] // 2
    cdef uint64_t new_mask = (new_table.shape[0] // 2) - 1
    cdef uint64_t *old_t = &old_table[0]
    cdef uint64_t *new_t = &new_table[0]
    cdef int64_t *st = &state[0]
    cdef int reason = 0
    with nogil:
        while i < n:
            if st[3]:
                _hti_migrate(old_t, old_slots, new_mask, new_t, st, migrate_batch)
                st[1] += _ot_insert(new_t, new_mask, keys[i], values[i])
                i += 1
                if st[3] == 0:
                    reason = 2
                    break
            else:
                st[1] += _ot_insert(new_t, new_mask, keys[i], values[i])
                i += 1
                if st[1] > grow_at:
                    reason = 1
                    break
    return i, reason


def hti_lookup_batch(uint64_t[::1] old_table, uint64_t[::1] new_table, int64_t[::1] state,
                     int migrate_batch, const uint64_t[::1] keys,
                     uint64_t[::1] out, uint8_t[::1] found):
    """Lookups that also migrate while a rehash is in flight.

    Probes the table holding more entries first.  Returns (hits, migration_done).
    """
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef Py_ssize_t old_slots = old_table.shape[0] // 2
    cdef uint64_t old_mask = (old_table.shape[0] // 2) - 1
    cdef uint64_t new_mask = (new_table.shape[0] // 2) - 1
    cdef uint64_t *old_t = &old_table[0]
    cdef uint64_t *new_t = &new_table[0]
    cdef int64_t *st = &state[0]
    cdef uint64_t v
    cdef Py_ssize_t hits = 0
    cdef int finished = 0
    cdef int hit
    with nogil:
        for i in range(n):
            if st[3]:
                _hti_migrate(old_t, old_slots, new_mask, new_t, st, migrate_batch)
                if st[3] == 0:
                    finished = 1
            if st[3] and st[0] > st[1]:
                hit = _ot_lookup(old_t, old_mask, keys[i], &v)
                if not hit:
                    hit = _ot_lookup(new_t, new_mask, keys[i], &v)
            else:
                hit = _ot_lookup(new_t, new_mask, keys[i], &v)
                if not hit and st[3]:
                    hit = _ot_lookup(old_t, old_mask, keys[i], &v)
            if hit:
                out[i] = v
                found[i] = 1
                hits += 1
            else:
                out[i] = 0
                found[i] = 0
    return hits, finished


# ---------------------------------------------------------------------------
# Chained-hashing kernels (inline slot entry + chain of 128 B overflow buckets)
# ---------------------------------------------------------------------------
# chain bucket layout (16 u64 words): [0] next index, [1] count, [2..15] 7 entries
# chain index sentinel: UINT64_MAX

cdef enum:
    CH_WORDS = 16
    CH_CAP = 7


def ch_insert_batch(uint64_t[::1] slots, uint64_t[::1] heads, uint64_t[::1] chains,
                    int64_t[::1] state, const uint64_t[::1] keys, const uint64_t[::1] values,
                    Py_ssize_t start):
    """Insert keys[start:]; returns (next_index, needs_more_chain_space).

    state: [0] next free chain bucket, [1] chain bucket capacity.
    """
    cdef Py_ssize_t i = start, n = keys.shape[0]
    cdef uint64_t mask = slots.shape[0] // 2 - 1
    cdef uint64_t *sl = &slots[0]
    cdef uint64_t *hd = &heads[0]
    cdef uint64_t *ch = &chains[0]
    cdef int64_t *st = &state[0]
    cdef uint64_t k, idx, cur, prev
    cdef uint64_t *b
    cdef int j, stored, needs_space = 0
    with nogil:
        while i < n:
            k = keys[i]
            idx = _hash(k) & mask
            if sl[2 * idx] == 0:
                sl[2 * idx] = k
                sl[2 * idx + 1] = values[i]
                i += 1
                continue
            if sl[2 * idx] == k:
                sl[2 * idx + 1] = values[i]
                i += 1
                continue
            # walk the chain: update in place if present, else append at tail
            stored = 0
            prev = VS_CH_NONE
            cur = hd[idx]
            while cur != VS_CH_NONE:
                b = ch + cur * CH_WORDS
                for j in range(<int> b[1]):
                    if b[2 + 2 * j] == k:
                        b[2 + 2 * j + 1] = values[i]
                        stored = 1
                        break
                if stored:
                    break
                prev = cur
                cur = b[0]
            if stored:
                i += 1
                continue
            if prev != VS_CH_NONE and ch[prev * CH_WORDS + 1] < CH_CAP:
                b = ch + prev * CH_WORDS
                b[2 + 2 * b[1]] = k
                b[2 + 2 * b[1] + 1] = values[i]
                b[1] += 1
                i += 1
                continue
            # need a fresh bucket
            if st[0] >= st[1]:
                needs_space = 1
                break
            cur = <uint64_t> st[0]
            st[0] += 1
            b = ch + cur * CH_WORDS
            b[0] = VS_CH_NONE
            b[1] = 1
            b[2] = k
            b[3] = values[i]
            if prev == VS_CH_NONE:
                hd[idx] = cur
            else:
                ch[prev * CH_WORDS] = cur
            i += 1
    return i, needs_space


def ch_lookup_batch(const uint64_t[::1] slots, const uint64_t[::1] heads,
                    const uint64_t[::1] chains, const uint64_t[::1] keys,
                    uint64_t[::1] out, uint8_t[::1] found):
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef uint64_t mask = slots.shape[0] // 2 - 1
    cdef const uint64_t *sl = &slots[0]
    cdef const uint64_t *hd = &heads[0]
    cdef const uint64_t *ch = &chains[0]
    cdef uint64_t k, idx, cur
    cdef const uint64_t *b
    cdef int j, hit
    cdef Py_ssize_t hits = 0
    with nogil:
        for i in range(n):
            k = keys[i]
            idx = _hash(k) & mask
            hit = 0
            if sl[2 * idx] == k:
                out[i] = sl[2 * idx + 1]
                hit = 1
            elif sl[2 * idx] != 0:
                cur = hd[idx]
                while cur != VS_CH_NONE and not hit:
                    b = ch + cur * CH_WORDS
                    for j in range(<int> b[1]):
                        if b[2 + 2 * j] == k:
                            out[i] = b[2 + 2 * j + 1]
                            hit = 1
                            break
                    cur = b[0]
            if hit:
                found[i] = 1
                hits += 1
            else:
                out[i] = 0
                found[i] = 0
    return hits
