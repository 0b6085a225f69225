"""Compiled inner loops for tree growth and forest prediction.

Every kernel is a plain Python function decorated with ``numba.njit``. When
the environment variable PRESENTEVAL_NO_NUMBA is set (or numba is missing),
callers get the undecorated ``py_func`` instead, which executes the exact
same statements in the same order, so results are bit-identical, only slow.
Kernels are single-threaded by design: accumulation order is fixed, which
keeps every fit reproducible.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            fn.py_func = fn
            return fn

        if args and callable(args[0]):
            return wrap(args[0])
        return wrap


USE_NUMBA = _HAVE_NUMBA and not os.environ.get("PRESENTEVAL_NO_NUMBA")


@njit(cache=True)
def grow_tree(
    codes,          # (N, d) uint8, all training rows
    n_thr,          # (d,) int32 candidate-threshold counts
    thr_pad,        # (d, B-1) float64 padded thresholds
    rows,           # (n,) int32 row ids of this tree's sample (permuted in place)
    wgt,            # (N,) float64 per-row weight (bootstrap multiplicity)
    grad,           # (N,) float64 per-row target sum contribution (weight included)
    sq,             # (N,) float64 per-row weighted squared target (purity check)
    max_depth,      # int
    min_leaf,       # float, weighted minimum per child
    use_gini,       # bool: binary Gini criterion, else variance reduction
    k,              # features examined per split (== d when use_subset is False)
    raw_rand,       # (cap, k) int32 nonneg randoms, consumed when use_subset
    use_subset,     # bool
    feature,        # (cap,) int32 out, -1 marks a leaf
    threshold,      # (cap,) float64 out
    left,           # (cap,) int32 out
    right,          # (cap,) int32 out
    leaf_w,         # (cap,) float64 out
    leaf_s,         # (cap,) float64 out
    out_leaf,       # (N,) int32 out, leaf node id per sampled row
):
    N, d = codes.shape
    B = thr_pad.shape[1] + 1
    scratch_w = np.zeros((k, B), np.float64)
    scratch_s = np.zeros((k, B), np.float64)
    pool = np.empty(d, np.int32)
    for j in range(d):
        pool[j] = j
    feat_ids = np.empty(k, np.int32)

    n = rows.shape[0]
    cap = feature.shape[0]
    st_node = np.empty(cap, np.int32)
    st_lo = np.empty(cap, np.int32)
    st_hi = np.empty(cap, np.int32)
    st_depth = np.empty(cap, np.int32)
    st_w = np.empty(cap, np.float64)
    st_s = np.empty(cap, np.float64)
    st_q = np.empty(cap, np.float64)

    w0 = 0.0
    s0 = 0.0
    q0 = 0.0
    for ii in range(n):
        r = rows[ii]
        w0 += wgt[r]
        s0 += grad[r]
        q0 += sq[r]

    node_count = 1
    sp = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n
    st_depth[0] = 0
    st_w[0] = w0
    st_s[0] = s0
    st_q[0] = q0
    sp = 1

    while sp > 0:
        sp -= 1
        nd = st_node[sp]
        lo = st_lo[sp]
        hi = st_hi[sp]
        depth = st_depth[sp]
        w = st_w[sp]
        s = st_s[sp]
        q = st_q[sp]

        # a node stops at the depth cap, below the size floor, or when pure:
        # one-sided class mass (gini) or zero within-node variance (regression)
        make_leaf = False
        if depth >= max_depth or w < 2.0 * min_leaf:
            make_leaf = True
        elif use_gini:
            if s <= 0.0 or s >= w:
                make_leaf = True
        elif q - s * s / w <= 1e-12 * max(q, 1.0):
            make_leaf = True

        if not make_leaf:
            if use_subset:
                for j in range(k):
                    rr = j + raw_rand[nd, j] % (d - j)
                    tmp = pool[j]
                    pool[j] = pool[rr]
                    pool[rr] = tmp
                    feat_ids[j] = pool[j]
            else:
                for j in range(k):
                    feat_ids[j] = j

            for ii in range(lo, hi):
                r = rows[ii]
                wr = wgt[r]
                gr = grad[r]
                for j in range(k):
                    b = codes[r, feat_ids[j]]
                    scratch_w[j, b] += wr
                    scratch_s[j, b] += gr

            if use_gini:
                crit_p = (s * s + (w - s) * (w - s)) / w
            else:
                crit_p = s * s / w

            # impure nodes split on the best valid candidate even at zero
            # gain (an axis-balanced pattern like XOR has no first-level
            # gain, yet the children's splits then separate it)
            best_gain = -np.inf
            best_j = -1
            best_b = -1
            best_wl = 0.0
            best_sl = 0.0
            for j in range(k):
                f = feat_ids[j]
                nt = n_thr[f]
                wl = 0.0
                sl = 0.0
                for b in range(nt):
                    wl += scratch_w[j, b]
                    sl += scratch_s[j, b]
                    wr_ = w - wl
                    if wl < min_leaf or wr_ < min_leaf:
                        continue
                    sr_ = s - sl
                    if use_gini:
                        c = (sl * sl + (wl - sl) * (wl - sl)) / wl + (
                            sr_ * sr_ + (wr_ - sr_) * (wr_ - sr_)
                        ) / wr_
                    else:
                        c = sl * sl / wl + sr_ * sr_ / wr_
                    g = c - crit_p
                    if g > best_gain:
                        best_gain = g
                        best_j = j
                        best_b = b
                        best_wl = wl
                        best_sl = sl

            # reset scratch: wholesale for big nodes, touched bins for small ones
            if hi - lo > B:
                for j in range(k):
                    for b in range(B):
                        scratch_w[j, b] = 0.0
                        scratch_s[j, b] = 0.0
            else:
                for ii in range(lo, hi):
                    r = rows[ii]
                    for j in range(k):
                        b = codes[r, feat_ids[j]]
                        scratch_w[j, b] = 0.0
                        scratch_s[j, b] = 0.0

            if use_subset:
                for j in range(k - 1, -1, -1):
                    rr = j + raw_rand[nd, j] % (d - j)
                    tmp = pool[j]
                    pool[j] = pool[rr]
                    pool[rr] = tmp

            if best_j < 0:
                make_leaf = True
            else:
                fglob = feat_ids[best_j]
                i = lo
                jj = hi - 1
                while i <= jj:
                    if codes[rows[i], fglob] <= best_b:
                        i += 1
                    else:
                        tmp2 = rows[i]
                        rows[i] = rows[jj]
                        rows[jj] = tmp2
                        jj -= 1
                mid = i
                ql = 0.0
                for ii in range(lo, mid):
                    ql += sq[rows[ii]]
                feature[nd] = fglob
                threshold[nd] = thr_pad[fglob, best_b]
                lid = node_count
                rid = node_count + 1
                node_count += 2
                left[nd] = lid
                right[nd] = rid
                st_node[sp] = rid
                st_lo[sp] = mid
                st_hi[sp] = hi
                st_depth[sp] = depth + 1
                st_w[sp] = w - best_wl
                st_s[sp] = s - best_sl
                st_q[sp] = q - ql
                sp += 1
                st_node[sp] = lid
                st_lo[sp] = lo
                st_hi[sp] = mid
                st_depth[sp] = depth + 1
                st_w[sp] = best_wl
                st_s[sp] = best_sl
                st_q[sp] = ql
                sp += 1

        if make_leaf:
            feature[nd] = -1
            leaf_w[nd] = w
            leaf_s[nd] = s
            for ii in range(lo, hi):
                out_leaf[rows[ii]] = nd

    return node_count


@njit(cache=True)
def predict_forest_sum(X, roots, feature, threshold, left, right, value, out):
    """Sum of per-tree leaf values for every sample (trees live in one arena)."""
    n = X.shape[0]
    for t in range(roots.shape[0]):
        root = roots[t]
        for i in range(n):
            nd = root
            while feature[nd] >= 0:
                if X[i, feature[nd]] <= threshold[nd]:
                    nd = left[nd]
                else:
                    nd = right[nd]
            out[i] += value[nd]


def get_kernels():
    """(grow_tree, predict_forest_sum) honoring the numba opt-out."""
    if USE_NUMBA:
        return grow_tree, predict_forest_sum
    return grow_tree.py_func, predict_forest_sum.py_func
