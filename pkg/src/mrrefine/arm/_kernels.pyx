# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled support counting over packed 64-bit tid-set words."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long) nogil


cdef class TidsetIndex:
    cdef readonly object words
    cdef readonly Py_ssize_t n_transactions
    cdef Py_ssize_t n_words

    def __init__(self, transactions, Py_ssize_t n_items):
        cdef Py_ssize_t n = len(transactions)
        self.n_transactions = n
        self.n_words = max(1, (n + 63) // 64)
        words = np.zeros((max(n_items, 1), self.n_words), dtype=np.uint64)
        cdef uint64_t[:, ::1] w = words
        cdef Py_ssize_t t, i
        for t, items in enumerate(transactions):
            for i in items:
                w[i, t >> 6] |= (<uint64_t>1) << (t & 63)
        self.words = words

    def count(self, candidates):
        cdef Py_ssize_t n_cand = len(candidates)
        if n_cand == 0:
            return []
        sizes = {len(x) for x in candidates}
        if len(sizes) > 1:
            return [self.count([x])[0] for x in candidates]
        if 0 in sizes:
            return [self.n_transactions] * n_cand
        cand = np.asarray(candidates, dtype=np.intp)
        cdef Py_ssize_t[:, ::1] c = np.ascontiguousarray(cand)
        cdef uint64_t[:, ::1] w = self.words
        out = np.zeros(n_cand, dtype=np.int64)
        cdef int64_t[::1] o = out
        cdef Py_ssize_t size = c.shape[1]
        cdef Py_ssize_t r, j, word
        cdef uint64_t acc
        cdef int64_t total
        with nogil:
            for r in range(n_cand):
                total = 0
                for word in range(self.n_words):
                    acc = <uint64_t>0xFFFFFFFFFFFFFFFF
                    for j in range(size):
                        acc &= w[c[r, j], word]
                        if acc == 0:
                            break
                    total += popcount64(acc)
                o[r] = total
        return out.tolist()
