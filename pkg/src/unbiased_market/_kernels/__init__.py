"""Hot numeric kernels with a compiled backend and a pure-numpy fallback.

The numba backend is used when numba imports cleanly, unless the
environment variable ``UNBIASED_MARKET_DISABLE_NUMBA`` is set to a true
value (``1``, ``true``, ``yes``). Both backends return identical results.
"""

import os

import numpy as np

from . import numpy_impl
from .numpy_impl import OPT_OUT, OPTION_A, OPTION_B, utility

_DISABLED = os.environ.get("UNBIASED_MARKET_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

_compiled = None
if not _DISABLED:
    try:
        from . import numba_impl as _compiled
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _compiled = None

BACKEND = "numba" if _compiled is not None else "numpy"
_impl = _compiled if _compiled is not None else numpy_impl


def _f64(values):
    return np.ascontiguousarray(values, dtype=np.float64)


def choice_codes(costs, coefs, qs, xs, ys, r=1):
    """int8 matrix of choice codes, sellers by triples.

    Always the numpy version: its vectorized expm1 outruns the compiled
    scalar loop (see benchmarks/bench_kernels.py), and outputs are identical.
    """
    return numpy_impl.choice_codes(_f64(costs), _f64(coefs), _f64(qs), _f64(xs), _f64(ys), float(r))


def b_thresholds(costs, coefs, q, x, y_lo, y_hi, r=1, tol=1e-9):
    """Per-seller smallest Option-B payment on [y_lo, y_hi] that wins; inf if none."""
    return _impl.b_thresholds(
        _f64(costs), _f64(coefs), float(q), float(x), float(r), float(y_lo), float(y_hi), float(tol)
    )


def option_a_acceptable(costs, coefs, q, x, r=1):
    """Whether each seller weakly prefers Option A at (q, x) to opting out."""
    eu_a, _ = numpy_impl.expected_utilities(_f64(costs), _f64(coefs), float(q), float(x), 0.0, float(r))
    return eu_a >= 0.0


def srs_batch(n, uniforms):
    """One uniform size-k sample without replacement per row of ``uniforms``."""
    return _impl.srs_batch(int(n), np.atleast_2d(_f64(uniforms)))


def inclusion_counts(samples, n):
    return _impl.inclusion_counts(np.ascontiguousarray(samples, dtype=np.int64), int(n))


def row_sums(samples, values):
    return _impl.row_sums(np.ascontiguousarray(samples, dtype=np.int64), _f64(values))


__all__ = [
    "BACKEND",
    "OPTION_A",
    "OPTION_B",
    "OPT_OUT",
    "b_thresholds",
    "choice_codes",
    "inclusion_counts",
    "option_a_acceptable",
    "row_sums",
    "srs_batch",
    "utility",
]
