"""Compiled inner loop for the search objective.

``selection_logdets`` evaluates ``log2 det(I + snr * G[c, c])`` for many
column subsets ``c`` of one Gram matrix by an in-place Cholesky factorization.
A pure numpy version is kept for platforms without numba and as a test
oracle.
"""

import math

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_INV_LN2 = 1.0 / math.log(2.0)


def selection_logdets_numpy(gram, cols, snr):
    sub = snr * gram[cols[:, :, None], cols[:, None, :]]
    idx = np.arange(cols.shape[1])
    sub[..., idx, idx] += 1.0
    chol = np.linalg.cholesky(sub)
    return 2.0 * np.log(np.abs(chol[..., idx, idx])).sum(axis=-1) * _INV_LN2


def _selection_logdets(gram, cols, snr, out):
    nsel, k = cols.shape
    a = np.empty((k, k), dtype=gram.dtype)
    for s in range(nsel):
        for i in range(k):
            ci = cols[s, i]
            for j in range(i + 1):
                a[i, j] = snr * gram[ci, cols[s, j]]
            a[i, i] += 1.0
        acc = 0.0
        for j in range(k):
            d = a[j, j].real
            for p in range(j):
                d -= (a[j, p] * np.conj(a[j, p])).real
            d = math.sqrt(d)
            acc += math.log(d)
            for i in range(j + 1, k):
                v = a[i, j]
                for p in range(j):
                    v -= a[i, p] * np.conj(a[j, p])
                a[i, j] = v / d
        out[s] = 2.0 * acc * _INV_LN2


if numba is not None:
    _compiled = numba.njit(cache=True, nogil=True)(_selection_logdets)

    def selection_logdets(gram, cols, snr):
        out = np.empty(cols.shape[0])
        _compiled(np.ascontiguousarray(gram), np.ascontiguousarray(cols, dtype=np.int64),
                  float(snr), out)
        return out
else:  # pragma: no cover
    selection_logdets = selection_logdets_numpy
