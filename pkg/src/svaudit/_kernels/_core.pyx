# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Semantics match svaudit._kernels._pyfallback exactly for the integer-valued
kernels; cosine_scores may differ from the fallback by a few ulps because the
dot product is accumulated sequentially here.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def cosine_scores(
    double[:, ::1] emb,
    double[::1] norms,
    long long[::1] ia,
    long long[::1] ib,
):
    """Cosine similarity for each row pair (emb[ia[k]], emb[ib[k]])."""
    cdef Py_ssize_t m = ia.shape[0]
    cdef Py_ssize_t d = emb.shape[1]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, j, a, b
    cdef double acc, s
    with nogil:
        for k in range(m):
            a = ia[k]
            b = ib[k]
            acc = 0.0
            for j in range(d):
                acc += emb[a, j] * emb[b, j]
            s = acc / (norms[a] * norms[b])
            if s > 1.0:
                s = 1.0
            elif s < -1.0:
                s = -1.0
            out[k] = s
    return out_arr


def confusion_counts(
    const unsigned char[::1] decisions,
    const unsigned char[::1] labels,
    const signed char[::1] groups,
):
    """Count tp/fp/tn/fn per group plus excluded trials.

    Group codes: 0 = unprotected, 1 = protected, 2 = excluded. Returns
    int64 [tp_p, fp_p, tn_p, fn_p, tp_u, fp_u, tn_u, fn_u, excluded].
    """
    cdef Py_ssize_t n = decisions.shape[0]
    out_arr = np.zeros(9, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int g, base, cell
    with nogil:
        for i in range(n):
            g = groups[i]
            if g == 2:
                out[8] += 1
                continue
            base = 0 if g == 1 else 4
            if labels[i]:
                cell = 0 if decisions[i] else 3   # tp / fn
            else:
                cell = 1 if decisions[i] else 2   # fp / tn
            out[base + cell] += 1
    return out_arr


def roc_counts(scores, labels):
    """Error counts at every distinct score value, ascending.

    Returns (thresholds, n_neg_ge, n_pos_lt) under the rule d = 1 iff
    score >= threshold.
    """
    order = np.argsort(scores, kind="stable")
    s_arr = np.ascontiguousarray(scores[order], dtype=np.float64)
    y_arr = np.ascontiguousarray(labels[order], dtype=np.uint8)

    cdef double[::1] s = s_arr
    cdef const unsigned char[::1] y = y_arr
    cdef Py_ssize_t n = s.shape[0]

    cdef Py_ssize_t n_distinct = 1
    cdef Py_ssize_t i
    for i in range(1, n):
        if s[i] != s[i - 1]:
            n_distinct += 1

    thr_arr = np.empty(n_distinct, dtype=np.float64)
    neg_ge_arr = np.empty(n_distinct, dtype=np.int64)
    pos_lt_arr = np.empty(n_distinct, dtype=np.int64)
    cdef double[::1] thr = thr_arr
    cdef long long[::1] neg_ge = neg_ge_arr
    cdef long long[::1] pos_lt = pos_lt_arr

    cdef long long n_neg = 0
    cdef long long pos_below = 0
    cdef long long neg_below = 0
    cdef Py_ssize_t k = 0
    with nogil:
        for i in range(n):
            if not y[i]:
                n_neg += 1
        for i in range(n):
            if i == 0 or s[i] != s[i - 1]:
                thr[k] = s[i]
                pos_lt[k] = pos_below
                neg_ge[k] = n_neg - neg_below
                k += 1
            if y[i]:
                pos_below += 1
            else:
                neg_below += 1
    return thr_arr, neg_ge_arr, pos_lt_arr
