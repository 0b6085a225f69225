"""Feature pre-binning for histogram-based tree growth.

Each feature gets up to ``max_bins - 1`` candidate thresholds taken from
training-data quantiles (exact value midpoints when the feature has few
distinct values). Bin codes are uint8; a sample goes left at threshold
index ``b`` iff its code is <= ``b``, which is equivalent to ``x <= T[b]``.
"""

from __future__ import annotations

import numpy as np

MAX_BINS = 32


def fit_bins(X: np.ndarray, max_bins: int = MAX_BINS) -> list[np.ndarray]:
    """Per-feature ascending threshold arrays (possibly empty for constants)."""
    thresholds: list[np.ndarray] = []
    for j in range(X.shape[1]):
        u = np.unique(X[:, j])
        if u.size <= 1:
            thresholds.append(np.empty(0, dtype=np.float64))
        elif u.size <= max_bins:
            thresholds.append(((u[:-1] + u[1:]) / 2.0).astype(np.float64))
        else:
            qs = np.quantile(X[:, j], np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
            cand = np.unique(qs)
            cand = cand[cand < u[-1]]
            thresholds.append(cand.astype(np.float64))
    return thresholds


def bin_codes(X: np.ndarray, thresholds: list[np.ndarray]) -> np.ndarray:
    """uint8 code per cell: the count of thresholds strictly below the value."""
    codes = np.empty(X.shape, dtype=np.uint8)
    for j, T in enumerate(thresholds):
        if T.size == 0:
            codes[:, j] = 0
        else:
            codes[:, j] = np.searchsorted(T, X[:, j], side="left").astype(np.uint8)
    return codes


def pack_thresholds(thresholds: list[np.ndarray], max_bins: int = MAX_BINS):
    """Pad per-feature thresholds into a rectangular float array plus counts."""
    d = len(thresholds)
    thr_pad = np.zeros((d, max(1, max_bins - 1)), dtype=np.float64)
    n_thr = np.zeros(d, dtype=np.int32)
    for j, T in enumerate(thresholds):
        n_thr[j] = T.size
        thr_pad[j, : T.size] = T
    return thr_pad, n_thr
