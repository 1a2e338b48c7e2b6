"""Pure numpy fallback for the enumeration kernel (same contract as the
compiled ``_enumerate.histogram``)."""
from __future__ import annotations

import numpy as np

CHUNK_BITS = 16


def histogram(n, indptr, indices, vclass, class_sizes, pins, want_occ):
    n_edges = len(indices) // 2
    e1 = n_edges + 1
    ncls = len(class_sizes)
    stride = np.zeros(max(ncls, 1), dtype=np.int64)
    K = e1 * e1
    for c in range(ncls - 1, -1, -1):
        stride[c] = K
        K *= int(class_sizes[c]) + 1

    hist = np.zeros(K, dtype=np.int64)
    occ = np.zeros((n, K), dtype=np.int64) if want_occ else None

    pins = np.asarray(pins)
    free = np.flatnonzero(pins < 0)
    n_free = len(free)
    eu, ev = [], []
    for v in range(n):
        for w in indices[indptr[v]:indptr[v + 1]]:
            if w > v:
                eu.append(v)
                ev.append(int(w))
    eu = np.asarray(eu, dtype=np.intp)
    ev = np.asarray(ev, dtype=np.intp)
    vstride = stride[np.asarray(vclass, dtype=np.intp)] if n else np.zeros(0, np.int64)

    base = np.where(pins > 0, 1, 0).astype(np.int8)
    chunk_bits = min(n_free, CHUNK_BITS)
    chunk = 1 << chunk_bits
    low = np.arange(chunk, dtype=np.int64)
    low_bits = ((low[:, None] >> np.arange(chunk_bits)) & 1).astype(np.int8)
    for hi in range(1 << (n_free - chunk_bits)):
        sigma = np.broadcast_to(base, (chunk, n)).copy()
        if chunk_bits:
            sigma[:, free[:chunk_bits]] = low_bits
        for b in range(chunk_bits, n_free):
            sigma[:, free[b]] = (hi >> (b - chunk_bits)) & 1
        su = sigma[:, eu]
        sv = sigma[:, ev]
        m1 = (su & sv).sum(axis=1, dtype=np.int64)
        m0 = ((1 - su) & (1 - sv)).sum(axis=1, dtype=np.int64)
        key = sigma.astype(np.int64) @ vstride + m0 * e1 + m1
        hist += np.bincount(key, minlength=K)
        if want_occ:
            for v in range(n):
                occ[v] += np.bincount(key[sigma[:, v] == 1], minlength=K)
    return hist, occ
