# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: phrase-occurrence counting and hinge-loss SGD.

Mirrors ``_pure.py`` operation for operation; keep the two in sync.
"""

import numpy as np


def count_matches(docs, phrases):
    """See ``_pure.count_matches``; same contract, same output order."""
    cdef Py_ssize_t nphr = len(phrases)
    cdef Py_ssize_t i, j, pos, m, k, n
    cdef const int[:] doc
    cdef const int[:] ph
    cdef bint ok

    by_first = {}
    for j in range(nphr):
        ph = phrases[j]
        if ph.shape[0] == 0:
            continue
        key = ph[0]
        if key in by_first:
            by_first[key].append(j)
        else:
            by_first[key] = [j]

    out_d, out_p, out_c = [], [], []
    cdef Py_ssize_t ndocs = len(docs)
    for i in range(ndocs):
        doc = docs[i]
        n = doc.shape[0]
        hits = {}
        for pos in range(n):
            cands = by_first.get(doc[pos])
            if cands is None:
                continue
            for j in cands:
                ph = phrases[j]
                m = ph.shape[0]
                if pos + m > n:
                    continue
                ok = True
                for k in range(m):
                    if doc[pos + k] != ph[k]:
                        ok = False
                        break
                if ok:
                    hits[j] = hits.get(j, 0) + 1
        for j in sorted(hits):
            out_d.append(i)
            out_p.append(j)
            out_c.append(hits[j])
    return (
        np.asarray(out_d, dtype=np.int64),
        np.asarray(out_p, dtype=np.int64),
        np.asarray(out_c, dtype=np.int64),
    )


def hinge_sgd(X, y, order, lam):
    """See ``_pure.hinge_sgd``; same schedule and update order."""
    cdef const double[:, :] Xv = X
    cdef const double[:] yv = y
    cdef const long long[:] ov = order
    cdef double lam_c = lam
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t d = Xv.shape[1]
    cdef Py_ssize_t steps = ov.shape[0]
    cdef Py_ssize_t s, k, i
    cdef double b = 0.0, eta, margin, dot, shrink, scale
    w_arr = np.zeros(d, dtype=np.float64)
    cdef double[:] w = w_arr

    for s in range(steps):
        i = ov[s]
        eta = 1.0 / (lam_c * (s + 1))
        dot = 0.0
        for k in range(d):
            dot += Xv[i, k] * w[k]
        margin = yv[i] * (dot + b)
        shrink = 1.0 - eta * lam_c
        b = b * shrink
        if margin < 1.0:
            scale = eta * yv[i]
            for k in range(d):
                w[k] = w[k] * shrink + scale * Xv[i, k]
            b += scale
        else:
            for k in range(d):
                w[k] = w[k] * shrink
    return w_arr, b
