"""Tree arena shared by every tree-based estimator.

A fitted ensemble is stored as flat node arrays (one arena for all trees)
plus per-tree root offsets: compact, serializable, and cheap to traverse.
``value`` holds the leaf payload: class-1 frequency for classifiers, mean
target for regression trees, or the boosting step for gradient-boosted
trees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._binning import MAX_BINS, bin_codes, fit_bins, pack_thresholds
from ._kernels import get_kernels


@dataclass
class TreeArena:
    roots: np.ndarray       # (n_trees,) int64
    feature: np.ndarray     # (n_nodes,) int32, -1 for leaves
    threshold: np.ndarray   # (n_nodes,) float64
    left: np.ndarray        # (n_nodes,) int32, arena-absolute
    right: np.ndarray       # (n_nodes,) int32
    value: np.ndarray       # (n_nodes,) float64

    @property
    def n_trees(self) -> int:
        return int(self.roots.shape[0])

    def predict_sum(self, X: np.ndarray) -> np.ndarray:
        _, predict_sum = get_kernels()
        out = np.zeros(X.shape[0], dtype=np.float64)
        predict_sum(
            np.ascontiguousarray(X, dtype=np.float64),
            self.roots, self.feature, self.threshold, self.left, self.right,
            self.value, out,
        )
        return out

    def to_state(self) -> dict:
        return {
            "roots": self.roots.tolist(),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "TreeArena":
        return cls(
            roots=np.asarray(state["roots"], dtype=np.int64),
            feature=np.asarray(state["feature"], dtype=np.int32),
            threshold=np.asarray(state["threshold"], dtype=np.float64),
            left=np.asarray(state["left"], dtype=np.int32),
            right=np.asarray(state["right"], dtype=np.int32),
            value=np.asarray(state["value"], dtype=np.float64),
        )


class ArenaBuilder:
    def __init__(self) -> None:
        self.roots: list[int] = []
        self.feature: list[np.ndarray] = []
        self.threshold: list[np.ndarray] = []
        self.left: list[np.ndarray] = []
        self.right: list[np.ndarray] = []
        self.value: list[np.ndarray] = []
        self._offset = 0

    def add_tree(self, feature, threshold, left, right, value) -> None:
        n = feature.shape[0]
        self.roots.append(self._offset)
        self.feature.append(feature)
        self.threshold.append(threshold)
        split = feature >= 0
        self.left.append(np.where(split, left + self._offset, -1).astype(np.int32))
        self.right.append(np.where(split, right + self._offset, -1).astype(np.int32))
        self.value.append(value)
        self._offset += n

    def build(self) -> TreeArena:
        return TreeArena(
            roots=np.asarray(self.roots, dtype=np.int64),
            feature=np.concatenate(self.feature),
            threshold=np.concatenate(self.threshold),
            left=np.concatenate(self.left),
            right=np.concatenate(self.right),
            value=np.concatenate(self.value),
        )


class BinnedDesign:
    """Training matrix pre-binned once per fit and reused by every tree."""

    def __init__(self, X: np.ndarray, max_bins: int = MAX_BINS) -> None:
        X = np.ascontiguousarray(X, dtype=np.float64)
        self.n, self.d = X.shape
        thresholds = fit_bins(X, max_bins)
        self.codes = np.ascontiguousarray(bin_codes(X, thresholds))
        self.thr_pad, self.n_thr = pack_thresholds(thresholds, max_bins)


def grow_one_tree(
    design: BinnedDesign,
    rows: np.ndarray,
    wgt: np.ndarray,
    grad: np.ndarray,
    sq: np.ndarray,
    *,
    max_depth: int,
    min_leaf: float,
    use_gini: bool,
    k: int | None = None,
    rng: np.random.Generator | None = None,
):
    """Fit one tree on (possibly weighted) rows; returns node arrays + stats.

    ``sq`` carries per-row weighted squared targets for the regression
    purity check. ``k`` enables per-split feature subsampling of that many
    features, with subset randomness drawn up front from ``rng`` so the
    compiled kernel stays deterministic.
    """
    grow, _ = get_kernels()
    n = rows.shape[0]
    cap = 2 * n + 3
    use_subset = k is not None and k < design.d
    kk = design.d if not use_subset else int(k)
    if use_subset:
        raw_rand = rng.integers(0, np.iinfo(np.int32).max, size=(cap, kk), dtype=np.int32)
    else:
        raw_rand = np.zeros((1, 1), dtype=np.int32)

    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    leaf_w = np.zeros(cap, dtype=np.float64)
    leaf_s = np.zeros(cap, dtype=np.float64)
    out_leaf = np.full(design.n, -1, dtype=np.int32)

    node_count = grow(
        design.codes, design.n_thr, design.thr_pad,
        rows, wgt, grad, sq,
        max_depth, float(min_leaf), use_gini, kk, raw_rand, use_subset,
        feature, threshold, left, right, leaf_w, leaf_s, out_leaf,
    )
    sl = slice(0, node_count)
    return (
        feature[sl].copy(), threshold[sl].copy(), left[sl].copy(), right[sl].copy(),
        leaf_w[sl].copy(), leaf_s[sl].copy(), out_leaf,
    )


UNLIMITED_DEPTH = 1_000_000
