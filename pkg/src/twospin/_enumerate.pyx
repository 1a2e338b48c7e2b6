# cython: boundscheck=False, wraparound=False, cdivision=True
"""Gray-code enumeration of spin configurations.

Every configuration is reduced to an integer key built from the number of
occupied vertices in each vertex class and the edge counts (m0, m1).  The
kernel only counts configurations per key, so the caller can turn the
histogram into exact rational weights afterwards.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int8_t, int32_t, int64_t

cnp.import_array()


cdef extern from *:
    int __builtin_ctzll(unsigned long long x) nogil


def histogram(int n, const int32_t[::1] indptr, const int32_t[::1] indices,
              const int32_t[::1] vclass, const int64_t[::1] class_sizes,
              const int8_t[::1] pins, bint want_occ):
    cdef int ncls = class_sizes.shape[0]
    cdef int64_t n_edges = indices.shape[0] // 2
    cdef int64_t e1 = n_edges + 1
    cdef int64_t K = e1 * e1
    cdef Py_ssize_t c, v, w, j
    cdef int64_t[::1] stride = np.zeros(max(ncls, 1), dtype=np.int64)
    for c in range(ncls - 1, -1, -1):
        stride[c] = K
        K *= class_sizes[c] + 1

    hist_arr = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] hist = hist_arr
    occ_arr = np.zeros((n if want_occ else 0, K if want_occ else 0), dtype=np.int64)
    cdef int64_t[:, ::1] occ = occ_arr

    cdef int8_t[::1] sigma = np.zeros(max(n, 1), dtype=np.int8)
    free_arr = np.zeros(max(n, 1), dtype=np.int32)
    cdef int32_t[::1] free = free_arr
    cdef int n_free = 0
    for v in range(n):
        if pins[v] < 0:
            free[n_free] = v
            n_free += 1
        else:
            sigma[v] = pins[v]

    cdef int64_t m0 = 0, m1 = 0, key = 0
    for v in range(n):
        if sigma[v]:
            key += stride[vclass[v]]
        for j in range(indptr[v], indptr[v + 1]):
            w = indices[j]
            if w > v:
                if sigma[v] and sigma[w]:
                    m1 += 1
                elif not sigma[v] and not sigma[w]:
                    m0 += 1
    key += m0 * e1 + m1

    cdef unsigned long long i, total = (<unsigned long long>1) << n_free
    cdef int b
    with nogil:
        for i in range(total):
            if i:
                b = __builtin_ctzll(i)
                v = free[b]
                if sigma[v] == 0:
                    sigma[v] = 1
                    key += stride[vclass[v]]
                    for j in range(indptr[v], indptr[v + 1]):
                        if sigma[indices[j]]:
                            key += 1
                        else:
                            key -= e1
                else:
                    sigma[v] = 0
                    key -= stride[vclass[v]]
                    for j in range(indptr[v], indptr[v + 1]):
                        if sigma[indices[j]]:
                            key -= 1
                        else:
                            key += e1
            hist[key] += 1
            if want_occ:
                for v in range(n):
                    if sigma[v]:
                        occ[v, key] += 1
    return hist_arr, (occ_arr if want_occ else None)
