"""Pure-Python/numpy kernels.

Each function reproduces the compiled version's floating-point operation
order (sequential accumulation, no fused multiply-add), so both backends
return bitwise-identical results.
"""
import numpy as np


def lisa_perm_counts(z, indptr, indices, weights, draws):
    n = z.shape[0]
    n_perm = draws.shape[0]
    lags = np.zeros(n)
    larger = np.zeros(n, dtype=np.int64)
    for i in range(n):
        start, stop = indptr[i], indptr[i + 1]
        deg = stop - start
        if deg == 0:
            continue
        w = weights[start:stop]
        nbrs = indices[start:stop]
        lag = 0.0
        for k in range(deg):
            lag = lag + w[k] * z[nbrs[k]]
        lags[i] = lag
        idx = draws[:, :deg]
        idx = idx + (idx >= i)
        lagp = np.zeros(n_perm)
        for k in range(deg):
            lagp = lagp + w[k] * z[idx[:, k]]
        larger[i] = np.count_nonzero(z[i] * lagp >= z[i] * lag)
    return lags, larger


def gini_best_split(X, y, order, n_classes, min_leaf):
    m, n_feat = X.shape
    total = np.bincount(y, minlength=n_classes).astype(np.int64)
    best_f, best_thr, best_cost = -1, 0.0, np.inf
    if m < 2:
        return best_f, best_thr, best_cost
    n_l = np.arange(1, m, dtype=np.int64)
    n_r = m - n_l
    size_ok = (n_l >= min_leaf) & (n_r >= min_leaf)
    for f in range(n_feat):
        o = order[:, f]
        xs = X[o, f]
        onehot = np.zeros((m, n_classes), dtype=np.int64)
        onehot[np.arange(m), y[o]] = 1
        left = np.cumsum(onehot, axis=0)[:-1]
        right = total - left
        s_l = (left * left).sum(axis=1)
        s_r = (right * right).sum(axis=1)
        valid = size_ok & (xs[:-1] != xs[1:])
        if not valid.any():
            continue
        cost = (n_l - s_l.astype(float) / n_l) + (n_r - s_r.astype(float) / n_r)
        cost = np.where(valid, cost, np.inf)
        pos = int(np.argmin(cost))
        if cost[pos] < best_cost:
            best_cost = float(cost[pos])
            best_f = f
            best_thr = float(0.5 * (xs[pos] + xs[pos + 1]))
    return best_f, best_thr, best_cost


def mwu_null_counts(n_a, n_b):
    size = n_a * n_b + 1
    c = [0] * size
    c[0] = 1
    for i in range(1, n_a + 1):
        step = n_b + i
        for u in range(size - 1, step - 1, -1):
            c[u] -= c[u - step]
        for u in range(i, size):
            c[u] += c[u - i]
    return np.array(c, dtype=np.int64)


def sgd_hinge_epoch(data, indices, indptr, y, order, v, scale, b, t, alpha, l2_part, eta0):
    loss = 0.0
    eta_sum = 0.0
    for row in order:
        start, stop = indptr[row], indptr[row + 1]
        cols = indices[start:stop]
        vals = data[start:stop]
        dot = 0.0
        if stop > start:
            dot = float(np.cumsum(v[cols] * vals)[-1])
        margin = y[row] * (scale * dot + b)
        eta = eta0 / (1.0 + eta0 * alpha * t)
        eta_sum = eta_sum + eta
        scale = scale * (1.0 - eta * alpha * l2_part)
        if margin < 1.0:
            loss = loss + (1.0 - margin)
            coef = eta * y[row] / scale
            # indices within a CSR row are unique, so fancy-index update is safe
            v[cols] = v[cols] + coef * vals
            b = b + eta * y[row]
        if scale < 1e-9:
            v *= scale
            scale = 1.0
        t = t + 1.0
    return scale, b, t, loss, eta_sum
