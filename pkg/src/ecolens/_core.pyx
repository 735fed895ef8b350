# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled novelty kernel.

Seen pairs are kept exactly, as packed uint64 keys in a sorted array plus
a small hash buffer that is merged into the array when it fills up. A
Bloom filter sits in front: a Bloom miss proves the pair is new and skips
the binary search entirely.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint32_t, uint64_t
from libcpp.algorithm cimport binary_search, inplace_merge, sort
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector

cnp.import_array()

DEF MIN_BUFFER = 65536


cdef inline uint64_t _mix(uint64_t x) noexcept nogil:
    # splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ULL
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


cdef class PairStore:
    """Exact set of packed pair keys with a Bloom front."""

    cdef vector[uint64_t] bloom
    cdef uint64_t mask
    cdef int k
    cdef vector[uint64_t] sorted_keys
    cdef unordered_set[uint64_t] buffer
    cdef public uint64_t bloom_hits
    cdef public uint64_t bloom_false_hits

    def __cinit__(self, uint64_t expected=1, int bits_per_item=8, int k=3):
        cdef uint64_t m = 1024
        cdef uint64_t want = expected * <uint64_t>bits_per_item
        cdef uint64_t cap = (<uint64_t>1) << 31
        while m < want and m < cap:
            m <<= 1
        self.bloom.resize(m >> 6, 0)
        self.mask = m - 1
        self.k = k
        self.bloom_hits = 0
        self.bloom_false_hits = 0

    cdef inline bint _bloom_test_and_set(self, uint64_t key) noexcept nogil:
        cdef uint64_t h = _mix(key)
        cdef uint64_t h1 = h & 0xFFFFFFFFULL
        cdef uint64_t h2 = (h >> 32) | 1
        cdef uint64_t pos, bit
        cdef bint present = True
        cdef int j
        for j in range(self.k):
            pos = (h1 + <uint64_t>j * h2) & self.mask
            bit = (<uint64_t>1) << (pos & 63)
            if not (self.bloom[pos >> 6] & bit):
                present = False
                self.bloom[pos >> 6] |= bit
        return present

    cdef void _merge(self) noexcept nogil:
        cdef size_t mid = self.sorted_keys.size()
        for key in self.buffer:
            self.sorted_keys.push_back(key)
        self.buffer.clear()
        sort(self.sorted_keys.begin() + mid, self.sorted_keys.end())
        inplace_merge(self.sorted_keys.begin(), self.sorted_keys.begin() + mid, self.sorted_keys.end())

    cdef bint add(self, uint64_t key) noexcept nogil:
        """Insert key; return True if it was not present before."""
        cdef size_t limit
        if self._bloom_test_and_set(key):
            self.bloom_hits += 1
            if self.buffer.count(key) or binary_search(self.sorted_keys.begin(), self.sorted_keys.end(), key):
                return False
            self.bloom_false_hits += 1
        self.buffer.insert(key)
        limit = self.sorted_keys.size() // 8
        if limit < MIN_BUFFER:
            limit = MIN_BUFFER
        if self.buffer.size() >= limit:
            self._merge()
        return True

    def __len__(self):
        return self.sorted_keys.size() + self.buffer.size()

    def add_key(self, uint64_t key):
        return self.add(key)


cdef inline object _out(vector[int64_t]& v):
    if v.size() == 0:
        return np.zeros(0, np.int64)
    return np.asarray(<int64_t[:v.size()]> v.data()).copy()


cdef inline object _out32(vector[int32_t]& v):
    if v.size() == 0:
        return np.zeros(0, np.int32)
    return np.asarray(<int32_t[:v.size()]> v.data()).copy()


def detect_first_occurrences(offsets, libs, eligible, bint want_pairs=True):
    """See ``ecolens._pycore.detect_first_occurrences``."""
    cdef const int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const int32_t[::1] lib = np.ascontiguousarray(libs, dtype=np.int32)
    cdef const uint8_t[::1] elig = np.ascontiguousarray(eligible, dtype=np.uint8)

    cdef Py_ssize_t n_events = off.shape[0] - 1
    cdef Py_ssize_t n_libs = elig.shape[0]
    cdef Py_ssize_t i, j, a, b, k
    cdef int32_t x
    cdef uint64_t key, total_pairs = 0

    cdef vector[uint8_t] seen
    seen.resize(n_libs, 0)
    cdef vector[int32_t] cur
    cdef vector[int64_t] s_ev, p_ev
    cdef vector[int32_t] s_lib, p_a, p_b

    if want_pairs:
        for i in range(n_events):
            k = 0
            for j in range(off[i], off[i + 1]):
                if elig[lib[j]]:
                    k += 1
            total_pairs += <uint64_t>(k * (k - 1) // 2)
    cdef PairStore store = PairStore(total_pairs if total_pairs > 0 else 1)

    with nogil:
        for i in range(n_events):
            cur.clear()
            for j in range(off[i], off[i + 1]):
                x = lib[j]
                if elig[x]:
                    cur.push_back(x)
                    if not seen[x]:
                        seen[x] = 1
                        s_ev.push_back(i)
                        s_lib.push_back(x)
            if not want_pairs:
                continue
            k = <Py_ssize_t>cur.size()
            for a in range(k):
                for b in range(a + 1, k):
                    key = (<uint64_t>cur[a] << 32) | <uint64_t><uint32_t>cur[b]
                    if store.add(key):
                        p_ev.push_back(i)
                        p_a.push_back(cur[a])
                        p_b.push_back(cur[b])

    return _out(s_ev), _out32(s_lib), _out(p_ev), _out32(p_a), _out32(p_b)
