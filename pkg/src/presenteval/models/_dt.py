"""Single CART with exact split search.

Unlike the histogram-grown ensemble trees, the standalone decision tree
scans every midpoint between consecutive distinct sorted feature values, so
its first split coincides with exhaustive enumeration. Ties in gain resolve
to the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

import numpy as np

from ._forest import ArenaBuilder, TreeArena, UNLIMITED_DEPTH


def best_split(X: np.ndarray, y: np.ndarray, use_gini: bool, min_leaf: int = 1):
    """Exact best (feature, threshold, gain) or None when nothing is valid.

    Gain is the summed child criterion minus the parent criterion, where the
    criterion is ``s**2/w`` for variance reduction and
    ``(s**2 + (w - s)**2)/w`` for binary Gini; both are n times the usual
    impurity decrease, which preserves the argmax. Zero-gain candidates are
    still returned; purity stopping is the caller's job.
    """
    n, d = X.shape
    if n < 2 * min_leaf or n < 2:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]

    w = float(n)
    s = float(y.sum())
    if use_gini:
        crit_p = (s * s + (w - s) * (w - s)) / w
    else:
        crit_p = s * s / w

    wl = np.arange(1, n, dtype=np.float64)[:, None]
    sl = np.cumsum(ys, axis=0)[:-1]
    wr = w - wl
    sr = s - sl
    if use_gini:
        crit = (sl * sl + (wl - sl) ** 2) / wl + (sr * sr + (wr - sr) ** 2) / wr
    else:
        crit = sl * sl / wl + sr * sr / wr
    gain = crit - crit_p

    valid = xs[:-1] < xs[1:]
    valid &= (wl >= min_leaf) & (wr >= min_leaf)
    gain = np.where(valid, gain, -np.inf)

    best_pos = np.argmax(gain, axis=0)
    best_per_feature = gain[best_pos, np.arange(d)]
    j = int(np.argmax(best_per_feature))
    g = float(best_per_feature[j])
    if not np.isfinite(g):
        return None
    pos = int(best_pos[j])
    thr = float((xs[pos, j] + xs[pos + 1, j]) / 2.0)
    return j, thr, g


class DecisionTree:
    def __init__(self, max_depth=None, min_samples_leaf=1, classification=True):
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.classification = bool(classification)
        self.arena_: TreeArena | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DecisionTree":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        depth_cap = UNLIMITED_DEPTH if self.max_depth is None else int(self.max_depth)

        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []

        def new_node() -> int:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            return len(feature) - 1

        root = new_node()
        stack = [(root, np.arange(X.shape[0]), 0)]
        while stack:
            nd, idx, depth = stack.pop()
            ysub = y[idx]
            split = None
            pure = ysub.min() == ysub.max()
            if depth < depth_cap and not pure:
                split = best_split(X[idx], ysub, self.classification, self.min_samples_leaf)
            if split is None:
                value[nd] = float(ysub.mean())
                continue
            j, thr, _ = split
            go_left = X[idx, j] <= thr
            feature[nd] = j
            threshold[nd] = thr
            lid = new_node()
            rid = new_node()
            left[nd] = lid
            right[nd] = rid
            stack.append((rid, idx[~go_left], depth + 1))
            stack.append((lid, idx[go_left], depth + 1))

        builder = ArenaBuilder()
        builder.add_tree(
            np.asarray(feature, dtype=np.int32),
            np.asarray(threshold, dtype=np.float64),
            np.asarray(left, dtype=np.int32),
            np.asarray(right, dtype=np.int32),
            np.asarray(value, dtype=np.float64),
        )
        self.arena_ = builder.build()
        return self

    def predict_proba1(self, X: np.ndarray) -> np.ndarray:
        return self.arena_.predict_sum(X)

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.arena_.predict_sum(X)

    def to_state(self) -> dict:
        return {
            "kind": "dt",
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "classification": self.classification,
            "arena": self.arena_.to_state() if self.arena_ else None,
        }

    @classmethod
    def from_state(cls, state: dict) -> "DecisionTree":
        model = cls(
            max_depth=state["max_depth"],
            min_samples_leaf=state["min_samples_leaf"],
            classification=state["classification"],
        )
        if state["arena"] is not None:
            model.arena_ = TreeArena.from_state(state["arena"])
        return model
