"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The mock model's window-relevance computation is the inner loop of the whole
desk-scale pipeline: removal ranking re-scores n+1 contexts per example and
every candidate evaluation re-scores again, each call ending up here.

Set ``ADVQA_DISABLE_NUMBA=1`` to force the numpy path (it is also used
automatically when numba is not installed).  ``benchmarks/bench_kernels.py``
compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ADVQA_DISABLE_NUMBA", "").strip() not in ("", "0", "false")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _window_relevance_numpy(in_q: np.ndarray, window: int) -> np.ndarray:
    """r[i] = number of positions j != i with |j-i| <= window and in_q[j]."""
    n = in_q.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    prefix = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(in_q, out=prefix[1:])
    lo = np.maximum(np.arange(n) - window, 0)
    hi = np.minimum(np.arange(n) + window, n - 1)
    return prefix[hi + 1] - prefix[lo] - in_q


@njit(cache=True)
def _window_relevance_numba(in_q, window):  # pragma: no cover - numba path
    n = in_q.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        lo = i - window
        if lo < 0:
            lo = 0
        hi = i + window
        if hi > n - 1:
            hi = n - 1
        s = 0
        for j in range(lo, hi + 1):
            s += in_q[j]
        out[i] = s - in_q[i]
    return out


def window_relevance(in_q: np.ndarray, window: int) -> np.ndarray:
    """Windowed question-word counts around each position, self excluded.

    ``in_q`` is an int64 0/1 array marking which context words are question
    words; the result is the mock model's relevance vector.
    """
    in_q = np.ascontiguousarray(in_q, dtype=np.int64)
    if HAS_NUMBA:
        return _window_relevance_numba(in_q, window)
    return _window_relevance_numpy(in_q, window)


def hashed_bow(bins: np.ndarray, n_bins: int) -> np.ndarray:
    """Accumulate hashed token bins into a fixed-length count vector."""
    if bins.size == 0:
        return np.zeros(n_bins, dtype=np.float64)
    return np.bincount(bins, minlength=n_bins).astype(np.float64)
