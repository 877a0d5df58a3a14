"""Compiled loop kernels; same signatures and results as ``numpy_impl``."""

import numpy as np
from numba import njit

from .numpy_impl import OPT_OUT, OPTION_A, OPTION_B


@njit(cache=True)
def _u(w, a):
    if a == 0.0:
        return w
    return -np.expm1(-a * w) / a


@njit(cache=True)
def _mix(q, hit, miss):
    if q == 0.0:
        return miss
    if q == 1.0:
        return hit
    return q * hit + (1.0 - q) * miss


@njit(cache=True)
def _eu_a(c, a, q, x, r):
    # u(0) = 0 by normalization
    return _mix(q, _u(r * (x - c), a), 0.0)


@njit(cache=True)
def _eu_b(c, a, q, y, r):
    return _mix(q, _u(y - r * c, a), _u(y, a))


@njit(cache=True)
def choice_codes(costs, coefs, qs, xs, ys, r):
    n = costs.shape[0]
    t = qs.shape[0]
    out = np.empty((n, t), dtype=np.int8)
    for i in range(n):
        c = costs[i]
        a = coefs[i]
        for j in range(t):
            eu_a = _eu_a(c, a, qs[j], xs[j], r)
            eu_b = _eu_b(c, a, qs[j], ys[j], r)
            if eu_b >= eu_a and eu_b >= 0.0:
                out[i, j] = OPTION_B
            elif eu_a >= 0.0:
                out[i, j] = OPTION_A
            else:
                out[i, j] = OPT_OUT
    return out


@njit(cache=True)
def b_thresholds(costs, coefs, q, x, r, y_lo, y_hi, tol):
    n = costs.shape[0]
    out = np.empty(n)
    for i in range(n):
        c = costs[i]
        a = coefs[i]
        need = max(_eu_a(c, a, q, x, r), 0.0)
        if _eu_b(c, a, q, y_lo, r) >= need:
            out[i] = y_lo
            continue
        if not _eu_b(c, a, q, y_hi, r) >= need:
            out[i] = np.inf
            continue
        lo = y_lo
        hi = y_hi
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _eu_b(c, a, q, mid, r) >= need:
                hi = mid
            else:
                lo = mid
        out[i] = hi
    return out


@njit(cache=True)
def srs_batch(n, uniforms):
    m, k = uniforms.shape
    out = np.empty((m, k), dtype=np.int64)
    perm = np.empty(n, dtype=np.int64)
    for row in range(m):
        for i in range(n):
            perm[i] = i
        for j in range(k):
            pick = j + np.int64(uniforms[row, j] * (n - j))
            if pick > n - 1:
                pick = n - 1
            held = perm[j]
            perm[j] = perm[pick]
            perm[pick] = held
            out[row, j] = perm[j]
    return out


@njit(cache=True)
def inclusion_counts(samples, n):
    out = np.zeros(n, dtype=np.int64)
    m, k = samples.shape
    for row in range(m):
        for j in range(k):
            out[samples[row, j]] += 1
    return out


@njit(cache=True)
def row_sums(samples, values):
    m, k = samples.shape
    out = np.empty(m)
    for row in range(m):
        acc = 0.0
        for j in range(k):
            acc += values[samples[row, j]]
        out[row] = acc
    return out
