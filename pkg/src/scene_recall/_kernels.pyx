# cython: language_level=3, boundscheck=False, wraparound=False
# cython: initializedcheck=False, cdivision=True
"""Compiled retrieval kernels.

Reference semantics live in _kernels_py; this module must stay
behavior-identical: float64 accumulation of float32 rows, results ordered
(similarity desc, ordinal asc), strict comparisons for pool admission and
search termination.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND_NAME = "compiled"

ctypedef bint (*cmp_t)(double, long long, double, long long) noexcept nogil


cdef struct Heap:
    double *sim
    long long *ordn
    int size


cdef inline bint _cand_less(double s1, long long o1, double s2, long long o2) noexcept nogil:
    # Frontier pop order: similarity desc, ordinal asc.
    if s1 != s2:
        return s1 > s2
    return o1 < o2


cdef inline bint _best_less(double s1, long long o1, double s2, long long o2) noexcept nogil:
    # Result-pool root: weakest kept entry (sim asc, ordinal desc).
    if s1 != s2:
        return s1 < s2
    return o1 > o2


cdef inline void _sift_down(Heap *h, cmp_t less) noexcept nogil:
    cdef int i = 0, c
    cdef double s = h.sim[0]
    cdef long long o = h.ordn[0]
    while True:
        c = 2 * i + 1
        if c >= h.size:
            break
        if c + 1 < h.size and less(h.sim[c + 1], h.ordn[c + 1], h.sim[c], h.ordn[c]):
            c += 1
        if less(h.sim[c], h.ordn[c], s, o):
            h.sim[i] = h.sim[c]
            h.ordn[i] = h.ordn[c]
            i = c
        else:
            break
    h.sim[i] = s
    h.ordn[i] = o


cdef inline void _push(Heap *h, double s, long long o, cmp_t less) noexcept nogil:
    cdef int i = h.size, p
    h.size += 1
    while i > 0:
        p = (i - 1) >> 1
        if less(s, o, h.sim[p], h.ordn[p]):
            h.sim[i] = h.sim[p]
            h.ordn[i] = h.ordn[p]
            i = p
        else:
            break
    h.sim[i] = s
    h.ordn[i] = o


cdef inline void _pop(Heap *h, double *s, long long *o, cmp_t less) noexcept nogil:
    s[0] = h.sim[0]
    o[0] = h.ordn[0]
    h.size -= 1
    if h.size > 0:
        h.sim[0] = h.sim[h.size]
        h.ordn[0] = h.ordn[h.size]
        _sift_down(h, less)


cdef inline void _replace(Heap *h, double s, long long o, cmp_t less) noexcept nogil:
    h.sim[0] = s
    h.ordn[0] = o
    _sift_down(h, less)


cdef inline double _dot(const float *row, const double *q, Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t j
    for j in range(d):
        acc += (<double> row[j]) * q[j]
    return acc


cdef Heap _alloc(int cap):
    cdef Heap h
    h.sim = <double *> malloc((cap if cap > 0 else 1) * sizeof(double))
    h.ordn = <long long *> malloc((cap if cap > 0 else 1) * sizeof(long long))
    h.size = 0
    if h.sim == NULL or h.ordn == NULL:
        free(h.sim)
        free(h.ordn)
        raise MemoryError()
    return h


def flat_topk(const cnp.float32_t[:, ::1] mat, const cnp.float64_t[::1] q, int k):
    """Top-k (ordinals, sims) over all rows, sorted (sim desc, ordinal asc)."""
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t d = mat.shape[1]
    cdef int m = k if k < <int> n else <int> n
    if m < 0:
        m = 0
    out_o = np.empty(m, dtype=np.int64)
    out_s = np.empty(m, dtype=np.float64)
    if m == 0:
        return out_o, out_s
    cdef cnp.int64_t[::1] ov = out_o
    cdef cnp.float64_t[::1] sv = out_s
    cdef Heap best = _alloc(m)
    cdef Py_ssize_t i
    cdef double s, ps
    cdef long long po
    try:
        with nogil:
            for i in range(n):
                s = _dot(&mat[i, 0], &q[0], d)
                if best.size < m:
                    _push(&best, s, i, _best_less)
                elif s > best.sim[0]:
                    _replace(&best, s, i, _best_less)
            # Weakest pops first; filling from the back yields the final order.
            for i in range(m - 1, -1, -1):
                _pop(&best, &ps, &po, _best_less)
                sv[i] = ps
                ov[i] = po
    finally:
        free(best.sim)
        free(best.ordn)
    return out_o, out_s


def beam_search(
    const cnp.float32_t[:, ::1] mat,
    const cnp.float64_t[::1] q,
    const cnp.int32_t[:, ::1] adj,
    const cnp.int32_t[::1] deg,
    const cnp.int64_t[::1] entries,
    int ef,
    cnp.int32_t[::1] visited,
    int stamp,
):
    """Best-first graph search keeping at most ef candidates.

    Matches _kernels_py.beam_search: a cell of `visited` counts as seen when
    it equals `stamp`; returns (ordinals, sims) sorted (sim desc, ordinal asc).
    """
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t d = mat.shape[1]
    cdef Py_ssize_t ne = entries.shape[0]
    cdef int cap_best = ef if ef < <int> n else <int> n
    cdef Heap cand = _alloc(<int> n)
    cdef Heap best
    try:
        best = _alloc(cap_best)
    except MemoryError:
        free(cand.sim)
        free(cand.ordn)
        raise
    cdef Py_ssize_t i, j
    cdef long long o, nb, po
    cdef double s, ps
    cdef int mres
    cdef cnp.int64_t[::1] ov
    cdef cnp.float64_t[::1] sv
    try:
        with nogil:
            for i in range(ne):
                o = entries[i]
                if visited[o] == stamp:
                    continue
                visited[o] = stamp
                s = _dot(&mat[o, 0], &q[0], d)
                if best.size < ef:
                    _push(&cand, s, o, _cand_less)
                    _push(&best, s, o, _best_less)
                elif s > best.sim[0]:
                    _push(&cand, s, o, _cand_less)
                    _replace(&best, s, o, _best_less)
            while cand.size > 0:
                _pop(&cand, &s, &o, _cand_less)
                if best.size >= ef and s < best.sim[0]:
                    break
                for j in range(deg[o]):
                    nb = adj[o, j]
                    if visited[nb] == stamp:
                        continue
                    visited[nb] = stamp
                    s = _dot(&mat[nb, 0], &q[0], d)
                    if best.size < ef:
                        _push(&cand, s, nb, _cand_less)
                        _push(&best, s, nb, _best_less)
                    elif s > best.sim[0]:
                        _push(&cand, s, nb, _cand_less)
                        _replace(&best, s, nb, _best_less)
        mres = best.size
        out_o = np.empty(mres, dtype=np.int64)
        out_s = np.empty(mres, dtype=np.float64)
        ov = out_o
        sv = out_s
        for i in range(mres - 1, -1, -1):
            _pop(&best, &ps, &po, _best_less)
            sv[i] = ps
            ov[i] = po
    finally:
        free(cand.sim)
        free(cand.ordn)
        free(best.sim)
        free(best.ordn)
    return out_o, out_s
