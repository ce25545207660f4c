# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``pure.py``. Same signatures, same results."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    """
    #if defined(_MSC_VER)
    #include <intrin.h>
    static inline unsigned long long hn_popcount64(unsigned long long x) { return __popcnt64(x); }
    #else
    static inline unsigned long long hn_popcount64(unsigned long long x) { return __builtin_popcountll(x); }
    #endif
    """
    unsigned long long hn_popcount64(unsigned long long x) nogil

ctypedef cnp.intp_t IDX
ctypedef cnp.float64_t F64
ctypedef cnp.uint64_t U64


def dijkstra_dist(indptr, nbrs, wgts, src):
    cdef IDX[::1] ip = np.ascontiguousarray(indptr, dtype=np.intp)
    cdef IDX[::1] nb = np.ascontiguousarray(nbrs, dtype=np.intp)
    cdef F64[::1] wt = np.ascontiguousarray(wgts, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    out = np.full(n, np.inf)
    cdef F64[::1] dist = out
    # binary heap as parallel arrays, lazy deletion
    cdef Py_ssize_t cap = max(16, 2 * (nb.shape[0] + n))
    heap_d_arr = np.empty(cap, dtype=np.float64)
    heap_v_arr = np.empty(cap, dtype=np.intp)
    cdef F64[::1] hd = heap_d_arr
    cdef IDX[::1] hv = heap_v_arr
    cdef Py_ssize_t size = 0
    cdef Py_ssize_t i, j, child, u, v
    cdef double d, nd, td
    cdef IDX tv

    dist[src] = 0.0
    hd[0] = 0.0
    hv[0] = src
    size = 1
    while size > 0:
        d = hd[0]
        u = hv[0]
        size -= 1
        hd[0] = hd[size]
        hv[0] = hv[size]
        # sift down
        i = 0
        while True:
            child = 2 * i + 1
            if child >= size:
                break
            if child + 1 < size and hd[child + 1] < hd[child]:
                child += 1
            if hd[child] < hd[i]:
                td = hd[i]; hd[i] = hd[child]; hd[child] = td
                tv = hv[i]; hv[i] = hv[child]; hv[child] = tv
                i = child
            else:
                break
        if d > dist[u]:
            continue
        for j in range(ip[u], ip[u + 1]):
            v = nb[j]
            nd = d + wt[j]
            if nd < dist[v]:
                dist[v] = nd
                # push (nd, v), sift up
                hd[size] = nd
                hv[size] = v
                i = size
                size += 1
                while i > 0:
                    j = (i - 1) >> 1
                    if hd[i] < hd[j]:
                        td = hd[i]; hd[i] = hd[j]; hd[j] = td
                        tv = hv[i]; hv[i] = hv[j]; hv[j] = tv
                        i = j
                    else:
                        break
    return out


def hop_limited_multisource(indptr, nbrs, wgts, sources, hops):
    cdef IDX[::1] ip = np.ascontiguousarray(indptr, dtype=np.intp)
    cdef IDX[::1] nb = np.ascontiguousarray(nbrs, dtype=np.intp)
    cdef F64[::1] wt = np.ascontiguousarray(wgts, dtype=np.float64)
    cdef IDX[::1] srcs = np.ascontiguousarray(sources, dtype=np.intp)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef Py_ssize_t k = srcs.shape[0]
    # node-major layout keeps the inner source loop contiguous
    old_arr = np.full((n, k), np.inf)
    cdef F64[:, ::1] old = old_arr
    cdef Py_ssize_t j, r, u, v, e, last_change
    cdef double w, c
    cdef bint changed
    for j in range(k):
        old[srcs[j], j] = 0.0
    if hops <= 0 or k == 0:
        return old_arr.T.copy(), 0
    new_arr = old_arr.copy()
    cdef F64[:, ::1] new = new_arr
    last_change = 0
    for r in range(1, hops + 1):
        changed = False
        with nogil:
            for v in range(n):
                for e in range(ip[v], ip[v + 1]):
                    u = nb[e]
                    w = wt[e]
                    for j in range(k):
                        c = old[u, j] + w
                        if c < new[v, j]:
                            new[v, j] = c
                            changed = True
        if not changed:
            break
        last_change = r
        old_arr, new_arr = new_arr, old_arr
        old = old_arr
        new = new_arr
        new_arr[...] = old_arr
    return old_arr.T.copy(), last_change


def popcount_rows(masks):
    cdef U64[:, ::1] mk = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef Py_ssize_t n = mk.shape[0]
    cdef Py_ssize_t w = mk.shape[1]
    out = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] pc = out
    cdef Py_ssize_t i, j
    cdef cnp.int64_t acc
    with nogil:
        for i in range(n):
            acc = 0
            for j in range(w):
                acc += <cnp.int64_t> hn_popcount64(mk[i, j])
            pc[i] = acc
    return out


def flood_round(indptr, nbrs, eu, ev, known, newly):
    cdef IDX[::1] ip = np.ascontiguousarray(indptr, dtype=np.intp)
    cdef IDX[::1] nb = np.ascontiguousarray(nbrs, dtype=np.intp)
    cdef IDX[::1] us = np.ascontiguousarray(eu, dtype=np.intp)
    cdef IDX[::1] vs = np.ascontiguousarray(ev, dtype=np.intp)
    cdef U64[:, ::1] nw = np.ascontiguousarray(newly, dtype=np.uint64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef Py_ssize_t w = nw.shape[1]
    incoming_arr = np.zeros((n, w), dtype=np.uint64)
    cdef U64[:, ::1] inc = incoming_arr
    pc_arr = popcount_rows(newly)
    cdef cnp.int64_t[::1] pc = pc_arr
    cdef Py_ssize_t u, v, e, j
    cdef cnp.int64_t load, max_load, total
    max_load = 0
    total = 0
    with nogil:
        for u in range(n):
            if pc[u] == 0:
                continue
            for e in range(ip[u], ip[u + 1]):
                v = nb[e]
                for j in range(w):
                    inc[v, j] |= nw[u, j]
        for e in range(us.shape[0]):
            load = pc[us[e]] + pc[vs[e]]
            if load > max_load:
                max_load = load
            total += load
    return incoming_arr, int(max_load), int(total)
