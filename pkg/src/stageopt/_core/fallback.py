"""Vectorized numpy implementations of the hot Lipschitz set scans.

These mirror ``_speedups.pyx`` operation for operation; both backends apply
the identical per-element comparison ``bound - L * d >= h`` so their outputs
agree exactly (the comparisons are on identically computed IEEE values).
"""

from __future__ import annotations

import numpy as np


def lipschitz_expand(lower: np.ndarray, dist: np.ndarray, lipschitz: np.ndarray,
                     thresholds: np.ndarray, safe_prev: np.ndarray) -> np.ndarray:
    """One round of Lipschitz safe-set growth.

    A point x' is certified iff for every safety function i there is a
    previously safe x with lower[i, x] - L_i * d(x, x') >= h_i. The previous
    set is always contained in the result.
    """
    safe_idx = np.flatnonzero(safe_prev)
    certified = np.ones(dist.shape[0], dtype=bool)
    for i in range(lower.shape[0]):
        margins = lower[i, safe_idx][:, None] - lipschitz[i] * dist[safe_idx, :]
        certified &= np.any(margins >= thresholds[i], axis=0)
    return certified | safe_prev


def expander_counts(upper: np.ndarray, dist: np.ndarray, lipschitz: np.ndarray,
                    thresholds: np.ndarray, safe: np.ndarray,
                    count_all: bool = False) -> np.ndarray:
    """Optimistic enlargement counts e(x) for every safe point.

    e(x) is the number of non-safe points x' with
    upper[i, x] - L_i * d(x, x') >= h_i for all i. With ``count_all=False``
    only membership matters and counting stops at the first certified point
    (values are then capped at 1).
    """
    n = dist.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    safe_idx = np.flatnonzero(safe)
    unsafe_idx = np.flatnonzero(~safe)
    if len(safe_idx) == 0 or len(unsafe_idx) == 0:
        return counts
    ok = np.ones((len(safe_idx), len(unsafe_idx)), dtype=bool)
    sub = dist[np.ix_(safe_idx, unsafe_idx)]
    for i in range(upper.shape[0]):
        ok &= upper[i, safe_idx][:, None] - lipschitz[i] * sub >= thresholds[i]
    if count_all:
        counts[safe_idx] = ok.sum(axis=1)
    else:
        counts[safe_idx] = np.any(ok, axis=1).astype(np.int64)
    return counts
