# cython: language_level=3
"""Compiled hot loops. Semantics mirror ``_pykernels`` operation for operation."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int64_t i64


def lisa_perm_counts(const f64[::1] z, const i64[::1] indptr, const i64[::1] indices,
                     const f64[::1] weights, const i64[:, ::1] draws):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t n_perm = draws.shape[0]
    cdef Py_ssize_t i, p, k, start, deg, r
    cdef f64 zi, lag, lagp, obs
    lags = np.zeros(n, dtype=np.float64)
    larger = np.zeros(n, dtype=np.int64)
    cdef f64[::1] lags_v = lags
    cdef i64[::1] larger_v = larger
    with nogil:
        for i in range(n):
            start = indptr[i]
            deg = indptr[i + 1] - start
            if deg == 0:
                continue
            zi = z[i]
            lag = 0.0
            for k in range(deg):
                lag = lag + weights[start + k] * z[indices[start + k]]
            lags_v[i] = lag
            obs = zi * lag
            for p in range(n_perm):
                lagp = 0.0
                for k in range(deg):
                    r = draws[p, k]
                    if r >= i:
                        r = r + 1
                    lagp = lagp + weights[start + k] * z[r]
                if zi * lagp >= obs:
                    larger_v[i] += 1
    return lags, larger


def gini_best_split(const f64[:, ::1] X, const i64[::1] y, const i64[:, ::1] order,
                    Py_ssize_t n_classes, Py_ssize_t min_leaf):
    cdef Py_ssize_t m = X.shape[0]
    cdef Py_ssize_t n_feat = X.shape[1]
    cdef Py_ssize_t f, s, c, idx, n_l, n_r
    cdef i64 s_l, s_r
    cdef f64 cost, x_here, x_next
    cdef f64 best_cost = np.inf
    cdef Py_ssize_t best_f = -1
    cdef f64 best_thr = 0.0
    total = np.zeros(n_classes, dtype=np.int64)
    left = np.zeros(n_classes, dtype=np.int64)
    right = np.zeros(n_classes, dtype=np.int64)
    cdef i64[::1] tot_v = total
    cdef i64[::1] left_v = left
    cdef i64[::1] right_v = right
    cdef i64 s_tot = 0
    for s in range(m):
        tot_v[y[s]] += 1
    for c in range(n_classes):
        s_tot += tot_v[c] * tot_v[c]
    with nogil:
        for f in range(n_feat):
            s_l = 0
            s_r = s_tot
            for c in range(n_classes):
                left_v[c] = 0
                right_v[c] = tot_v[c]
            for s in range(m - 1):
                idx = order[s, f]
                c = y[idx]
                s_l += 2 * left_v[c] + 1
                left_v[c] += 1
                s_r -= 2 * right_v[c] - 1
                right_v[c] -= 1
                x_here = X[idx, f]
                x_next = X[order[s + 1, f], f]
                if x_here == x_next:
                    continue
                n_l = s + 1
                n_r = m - n_l
                if n_l < min_leaf or n_r < min_leaf:
                    continue
                cost = (<f64>n_l - <f64>s_l / <f64>n_l) + (<f64>n_r - <f64>s_r / <f64>n_r)
                if cost < best_cost:
                    best_cost = cost
                    best_f = f
                    best_thr = 0.5 * (x_here + x_next)
    return best_f, best_thr, best_cost


def mwu_null_counts(Py_ssize_t n_a, Py_ssize_t n_b):
    cdef Py_ssize_t size = n_a * n_b + 1
    cdef Py_ssize_t i, u, step
    counts = np.zeros(size, dtype=np.int64)
    cdef i64[::1] c = counts
    c[0] = 1
    for i in range(1, n_a + 1):
        step = n_b + i
        for u in range(size - 1, step - 1, -1):
            c[u] -= c[u - step]
        for u in range(i, size):
            c[u] += c[u - i]
    return counts


def sgd_hinge_epoch(const f64[::1] data, const i64[::1] indices, const i64[::1] indptr,
                    const f64[::1] y, const i64[::1] order, f64[::1] v,
                    f64 scale, f64 b, f64 t, f64 alpha, f64 l2_part, f64 eta0):
    """One pass of hinge-loss SGD with ``w = scale * v``; returns (scale, b, t, loss, eta_sum)."""
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t q, row, j, start, stop, d = v.shape[0]
    cdef f64 dot, margin, eta, coef, loss = 0.0, eta_sum = 0.0
    with nogil:
        for q in range(n):
            row = order[q]
            start = indptr[row]
            stop = indptr[row + 1]
            dot = 0.0
            for j in range(start, stop):
                dot = dot + v[indices[j]] * data[j]
            margin = y[row] * (scale * dot + b)
            eta = eta0 / (1.0 + eta0 * alpha * t)
            eta_sum = eta_sum + eta
            scale = scale * (1.0 - eta * alpha * l2_part)
            if margin < 1.0:
                loss = loss + (1.0 - margin)
                coef = eta * y[row] / scale
                for j in range(start, stop):
                    v[indices[j]] = v[indices[j]] + coef * data[j]
                b = b + eta * y[row]
            if scale < 1e-9:
                for j in range(d):
                    v[j] = v[j] * scale
                scale = 1.0
            t = t + 1.0
    return scale, b, t, loss, eta_sum
