# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled random-walk kernels.

Semantics mirror ``_kernels_py`` exactly: same update order, same
renormalization, same max-residual-first processing with ordinal tie-break,
same traversal accounting.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

BACKEND_NAME = "compiled"


def power_iterate(const cnp.int64_t[::1] indptr,
                  const cnp.int64_t[::1] indices,
                  const double[::1] data,
                  const cnp.int64_t[::1] seed_idx,
                  const double[::1] seed_val,
                  double alpha,
                  int n_iter):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t n_seed = seed_idx.shape[0]
    r_arr = np.zeros(n, dtype=np.float64)
    nxt_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] r = r_arr
    cdef double[::1] nxt = nxt_arr
    cdef double one_minus = 1.0 - alpha
    cdef double ru, total, delta = 0.0
    cdef cnp.int64_t traversals = 0
    cdef Py_ssize_t u, j, k
    cdef int it

    for k in range(n_seed):
        r[seed_idx[k]] = seed_val[k]

    for it in range(n_iter):
        for u in range(n):
            nxt[u] = 0.0
        for u in range(n):
            ru = r[u]
            if ru != 0.0:
                for j in range(indptr[u], indptr[u + 1]):
                    nxt[indices[j]] += data[j] * ru
                traversals += indptr[u + 1] - indptr[u]
        for u in range(n):
            nxt[u] *= one_minus
        for k in range(n_seed):
            nxt[seed_idx[k]] += alpha * seed_val[k]
        total = 0.0
        for u in range(n):
            total += nxt[u]
        if total > 0.0:
            for u in range(n):
                nxt[u] /= total
        if it == n_iter - 1:
            delta = 0.0
            for u in range(n):
                delta += fabs(nxt[u] - r[u])
        for u in range(n):
            r[u] = nxt[u]

    return r_arr, delta, int(traversals)


def push_sweep(const cnp.int64_t[::1] indptr,
               const cnp.int64_t[::1] indices,
               const double[::1] data,
               const cnp.int64_t[::1] seed_idx,
               const double[::1] seed_val,
               double alpha,
               double epsilon,
               cnp.int64_t max_pushes):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t n_seed = seed_idx.shape[0]
    p_arr = np.zeros(n, dtype=np.float64)
    res_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] p = p_arr
    cdef double[::1] res = res_arr

    cdef Py_ssize_t cap = 1024
    hv_arr = np.empty(cap, dtype=np.float64)
    hn_arr = np.empty(cap, dtype=np.int64)
    cdef double[::1] hv = hv_arr
    cdef cnp.int64_t[::1] hn = hn_arr
    cdef Py_ssize_t hsize = 0

    cdef double ru, rv, spread, val, cv, bv
    cdef cnp.int64_t u, v, node, cn, bn
    cdef cnp.int64_t pushes = 0, traversals = 0
    cdef Py_ssize_t i, j, k, child, parent, best

    for k in range(n_seed):
        res[seed_idx[k]] = seed_val[k]

    # heap order: larger residual first, then smaller ordinal
    for k in range(n_seed):
        u = seed_idx[k]
        ru = res[u]
        if ru > epsilon * (indptr[u + 1] - indptr[u]):
            # sift-up insert
            i = hsize
            hsize += 1
            while i > 0:
                parent = (i - 1) >> 1
                if hv[parent] > ru or (hv[parent] == ru and hn[parent] < u):
                    break
                hv[i] = hv[parent]
                hn[i] = hn[parent]
                i = parent
            hv[i] = ru
            hn[i] = u

    while hsize > 0 and pushes < max_pushes:
        val = hv[0]
        u = hn[0]
        # pop: move last element to root and sift down
        hsize -= 1
        if hsize > 0:
            cv = hv[hsize]
            cn = hn[hsize]
            i = 0
            while True:
                child = 2 * i + 1
                if child >= hsize:
                    break
                best = child
                bv = hv[child]
                bn = hn[child]
                if child + 1 < hsize and (hv[child + 1] > bv or (hv[child + 1] == bv and hn[child + 1] < bn)):
                    best = child + 1
                    bv = hv[best]
                    bn = hn[best]
                if cv > bv or (cv == bv and cn < bn):
                    break
                hv[i] = bv
                hn[i] = bn
                i = best
            hv[i] = cv
            hn[i] = cn

        ru = res[u]
        if ru != val:
            continue  # stale entry
        p[u] += alpha * ru
        res[u] = 0.0
        pushes += 1
        traversals += indptr[u + 1] - indptr[u]
        spread = (1.0 - alpha) * ru
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            rv = res[v] + spread * data[j]
            res[v] = rv
            if rv > epsilon * (indptr[v + 1] - indptr[v]):
                if hsize == cap:
                    cap *= 2
                    new_hv = np.empty(cap, dtype=np.float64)
                    new_hn = np.empty(cap, dtype=np.int64)
                    new_hv[:hsize] = hv_arr[:hsize]
                    new_hn[:hsize] = hn_arr[:hsize]
                    hv_arr = new_hv
                    hn_arr = new_hn
                    hv = hv_arr
                    hn = hn_arr
                i = hsize
                hsize += 1
                while i > 0:
                    parent = (i - 1) >> 1
                    if hv[parent] > rv or (hv[parent] == rv and hn[parent] < v):
                        break
                    hv[i] = hv[parent]
                    hn[i] = hn[parent]
                    i = parent
                hv[i] = rv
                hn[i] = v

    cdef double residual = 0.0
    for k in range(n):
        residual += res[k]
    return p_arr, residual, int(pushes), int(traversals)
