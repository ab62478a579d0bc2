# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Kendall pair counting and the CART split search.

Both functions return exactly what :mod:`cvtnet._pykernels` returns for the
same arguments; the arithmetic order is kept identical so results match bit
for bit.
"""
import numpy as np

from libc.stdint cimport int64_t


def kendall_counts(const double[::1] x, const double[::1] y):
    """Return ``(n_pairs, concordant - discordant, tied_x, tied_y)``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef double dx, dy
    cdef int64_t s = 0, tx = 0, ty = 0
    if y.shape[0] != n:
        raise ValueError("x and y must have equal length")
    for i in range(n - 1):
        for j in range(i + 1, n):
            dx = x[j] - x[i]
            dy = y[j] - y[i]
            if dx == 0:
                tx += 1
            if dy == 0:
                ty += 1
            if dx == 0 or dy == 0:
                continue
            if (dx > 0) == (dy > 0):
                s += 1
            else:
                s -= 1
    return n * (n - 1) // 2, s, tx, ty


def best_split(const double[:, ::1] X, const Py_ssize_t[::1] y,
               Py_ssize_t n_classes, const Py_ssize_t[::1] features,
               Py_ssize_t max_features):
    """Search ``features`` in order for the Gini-optimal threshold.

    Stops after ``max_features`` non-constant features have been examined.
    Returns ``(feature, threshold, score)``; ``feature`` is -1 when every
    visited feature is constant. ``score`` is ``sum(cL**2)/nL + sum(cR**2)/nR``
    which is maximal where the weighted child impurity is minimal.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k, f, i, c, visited = 0, best_f = -1
    cdef double best_thr = 0.0, best_score = -1.0, score, thr, lo, hi
    cdef int64_t sq_left, sq_right
    cdef int64_t[::1] left = np.zeros(n_classes, dtype=np.int64)
    cdef int64_t[::1] total = np.zeros(n_classes, dtype=np.int64)
    cdef Py_ssize_t[::1] order
    cdef double[::1] col

    for i in range(n):
        total[y[i]] += 1

    for k in range(features.shape[0]):
        if visited >= max_features:
            break
        f = features[k]
        col = np.ascontiguousarray(X[:, f])
        order = np.argsort(col, kind="stable").astype(np.intp)
        if col[order[0]] == col[order[n - 1]]:
            continue
        visited += 1
        for c in range(n_classes):
            left[c] = 0
        for i in range(n - 1):
            left[y[order[i]]] += 1
            lo = col[order[i]]
            hi = col[order[i + 1]]
            if lo == hi:
                continue
            sq_left = 0
            sq_right = 0
            for c in range(n_classes):
                sq_left += left[c] * left[c]
                sq_right += (total[c] - left[c]) * (total[c] - left[c])
            score = <double>sq_left / <double>(i + 1) + <double>sq_right / <double>(n - i - 1)
            thr = (lo + hi) / 2.0
            if thr == hi:
                thr = lo
            if (score > best_score
                    or (score == best_score
                        and (f < best_f or (f == best_f and thr < best_thr)))):
                best_score = score
                best_f = f
                best_thr = thr
    return best_f, best_thr, best_score
