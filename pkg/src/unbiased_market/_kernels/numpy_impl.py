"""Vectorized numpy kernels.

Every function here has a loop-style twin in ``numba_impl`` that performs
the same floating-point operations in the same order, so both backends
agree on identical inputs.
"""

import numpy as np

OPTION_A = 0
OPTION_B = 1
OPT_OUT = 2


def utility(w, a):
    """Normalized CARA utility, linear where ``a == 0``."""
    w = np.asarray(w, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    safe_a = np.where(a == 0.0, 1.0, a)
    with np.errstate(over="ignore", invalid="ignore"):
        cara = -np.expm1(-safe_a * w) / safe_a
    return np.where(a == 0.0, w, cara)


def _mix(q, hit, miss):
    # zero-weight branches are skipped so 0 * -inf never produces nan
    with np.errstate(invalid="ignore"):
        out = q * hit + (1.0 - q) * miss
    out = np.where(q == 0.0, miss, out)
    return np.where(q == 1.0, hit, out)


def expected_utilities(costs, coefs, q, x, y, r):
    """Expected utilities of Option A and Option B, broadcasting over inputs."""
    eu_a = _mix(q, utility(r * (x - costs), coefs), utility(0.0, coefs))
    eu_b = _mix(q, utility(y - r * costs, coefs), utility(y, coefs))
    return eu_a, eu_b


def choice_codes(costs, coefs, qs, xs, ys, r):
    """Choice code of every seller (rows) at every triple (columns)."""
    c = np.asarray(costs, dtype=np.float64)[:, None]
    a = np.asarray(coefs, dtype=np.float64)[:, None]
    q = np.asarray(qs, dtype=np.float64)[None, :]
    x = np.asarray(xs, dtype=np.float64)[None, :]
    y = np.asarray(ys, dtype=np.float64)[None, :]
    eu_a, eu_b = expected_utilities(c, a, q, x, y, float(r))
    take_b = (eu_b >= eu_a) & (eu_b >= 0.0)
    take_a = ~take_b & (eu_a >= 0.0)
    out = np.full(eu_a.shape, OPT_OUT, dtype=np.int8)
    out[take_a] = OPTION_A
    out[take_b] = OPTION_B
    return out


def b_thresholds(costs, coefs, q, x, r, y_lo, y_hi, tol):
    """Smallest y in [y_lo, y_hi] at which each seller picks Option B.

    Sellers who never pick B on the interval get ``inf``. Bisection keeps
    the upper bracket, so the returned y always induces B.
    """
    c = np.asarray(costs, dtype=np.float64)
    a = np.asarray(coefs, dtype=np.float64)
    eu_a, _ = expected_utilities(c, a, q, x, 0.0, r)
    need = np.maximum(eu_a, 0.0)

    def accepts(y):
        _, eu_b = expected_utilities(c, a, q, x, y, r)
        return eu_b >= need

    out = np.full(c.shape, np.inf)
    at_lo = accepts(np.full(c.shape, y_lo))
    at_hi = accepts(np.full(c.shape, y_hi))
    out[at_lo] = y_lo
    active = at_hi & ~at_lo
    lo = np.full(c.shape, y_lo)
    hi = np.full(c.shape, y_hi)
    while True:
        active &= (hi - lo) > tol
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        ok = accepts(mid)
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
    settled = at_hi & ~at_lo
    out[settled] = hi[settled]
    return out


def srs_batch(n, uniforms):
    """Partial Fisher-Yates: one size-k sample of range(n) per row of uniforms."""
    uniforms = np.asarray(uniforms, dtype=np.float64)
    m, k = uniforms.shape
    perm = np.broadcast_to(np.arange(n, dtype=np.int64), (m, n)).copy()
    rows = np.arange(m)
    for j in range(k):
        pick = j + (uniforms[:, j] * (n - j)).astype(np.int64)
        np.minimum(pick, n - 1, out=pick)
        held = perm[rows, j].copy()
        perm[rows, j] = perm[rows, pick]
        perm[rows, pick] = held
    return perm[:, :k]


def inclusion_counts(samples, n):
    """How often each index in range(n) appears across all sample rows."""
    return np.bincount(np.asarray(samples).ravel(), minlength=n).astype(np.int64)


def row_sums(samples, values):
    """Sum of ``values`` over each sample row."""
    # sequential accumulation, matching the compiled loop bit for bit
    gathered = np.asarray(values, dtype=np.float64)[samples]
    return np.cumsum(gathered, axis=1)[:, -1]
