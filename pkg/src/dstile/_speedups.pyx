# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops: per-candidate coverage gains
during greedy tiling, and character-level edit distance."""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()


def coverage_gains(
    cnp.int64_t[::1] indptr,
    cnp.int32_t[::1] ids,
    cnp.int64_t[::1] weights,
    cnp.uint8_t[::1] covered,
):
    """Sum of weights of not-yet-covered component ids, per candidate.

    Candidates are CSR segments of ``ids``: candidate c owns
    ids[indptr[c]:indptr[c+1]].
    """
    cdef Py_ssize_t n_cand = indptr.shape[0] - 1
    gains = np.zeros(n_cand, dtype=np.int64)
    cdef cnp.int64_t[::1] out = gains
    cdef Py_ssize_t c, j
    cdef cnp.int64_t acc
    cdef cnp.int32_t cid
    for c in range(n_cand):
        acc = 0
        for j in range(indptr[c], indptr[c + 1]):
            cid = ids[j]
            if covered[cid] == 0:
                acc += weights[cid]
        out[c] = acc
    return gains


def levenshtein(str a, str b):
    """Unit-cost insert/delete/substitute edit distance over characters."""
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef cnp.int64_t[::1] prev = np.arange(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] curr = np.zeros(lb + 1, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef cnp.int64_t sub, best
    cdef Py_UCS4 ca
    for i in range(1, la + 1):
        curr[0] = i
        ca = a[i - 1]
        for j in range(1, lb + 1):
            sub = prev[j - 1] + (0 if ca == <Py_UCS4>b[j - 1] else 1)
            best = prev[j] + 1
            if curr[j - 1] + 1 < best:
                best = curr[j - 1] + 1
            if sub < best:
                best = sub
            curr[j] = best
        prev, curr = curr, prev
    return int(prev[lb])
