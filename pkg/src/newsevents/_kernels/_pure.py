"""Pure-Python/numpy fallbacks for the hot kernels.

Semantics must match ``_speedups.pyx`` exactly: same visit orders, same
update formulas, same tie handling. The compiled module is preferred at
import time; this one exists so the package works without a C toolchain.
"""

import numpy as np


def count_matches(docs, phrases):
    """Count contiguous token-id matches of each phrase in each document.

    docs: list of int32 arrays; sentence boundaries are marked with -1 so a
    match can never straddle two sentences. phrases: list of int32 arrays
    (no sentinels). Overlapping matches count once per start position.

    Returns (doc_idx, phrase_idx, count) int64 arrays sorted by (doc, phrase).
    """
    by_first = {}
    for j, ph in enumerate(phrases):
        if len(ph) == 0:
            continue
        by_first.setdefault(int(ph[0]), []).append(j)

    out_d, out_p, out_c = [], [], []
    for i, doc in enumerate(docs):
        hits = {}
        n = len(doc)
        for pos in range(n):
            cands = by_first.get(int(doc[pos]))
            if not cands:
                continue
            for j in cands:
                ph = phrases[j]
                m = len(ph)
                if pos + m > n:
                    continue
                if np.array_equal(doc[pos : pos + m], ph):
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
    """Subgradient descent on the L2-regularized hinge loss.

    X: (n, d) float64, y: (n,) float64 in {-1, +1}, order: int64 visit
    sequence (epochs concatenated), lam: L2 penalty. Learning rate at step t
    (1-based) is 1/(lam*t). The bias is treated as the weight of an
    implicit constant feature: it shrinks by (1 - eta*lam) along with the
    weights every step, which keeps it bounded when one class heavily
    outnumbers the other (early steps have eta up to 1/lam).

    Returns (w, b).
    """
    n, d = X.shape
    w = np.zeros(d, dtype=np.float64)
    b = 0.0
    t = 0
    for i in order:
        t += 1
        eta = 1.0 / (lam * t)
        xi = X[i]
        margin = y[i] * (float(xi @ w) + b)
        shrink = 1.0 - eta * lam
        w *= shrink
        b *= shrink
        if margin < 1.0:
            w += (eta * y[i]) * xi
            b += eta * y[i]
    return w, b
