"""Random forest: bagged histogram-grown CARTs with per-split feature subsets.

Classification trees split on binary Gini with sqrt(d) candidate features
per split; regression trees use variance reduction with d/3 candidates.
Bootstrap resampling is expressed as integer row weights. Class probability
is the mean of per-tree leaf class frequencies; regression predicts the
mean of per-tree leaf means.
"""

from __future__ import annotations

import numpy as np

from ._forest import ArenaBuilder, BinnedDesign, TreeArena, UNLIMITED_DEPTH, grow_one_tree


class RandomForest:
    def __init__(self, n_estimators=200, max_depth=None, min_samples_leaf=1,
                 bootstrap=True, classification=True, seed=0):
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.bootstrap = bool(bootstrap)
        self.classification = bool(classification)
        self.seed = int(seed)
        self.arena_: TreeArena | None = None

    def _subset_size(self, d: int) -> int:
        if self.classification:
            return max(1, int(np.sqrt(d)))
        return max(1, d // 3)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForest":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        design = BinnedDesign(X)
        k = self._subset_size(d)
        depth = UNLIMITED_DEPTH if self.max_depth is None else int(self.max_depth)
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_estimators)
        builder = ArenaBuilder()
        for t in range(self.n_estimators):
            rng = np.random.Generator(np.random.PCG64(seeds[t]))
            if self.bootstrap:
                draw = rng.integers(0, n, size=n)
                rows, counts = np.unique(draw, return_counts=True)
                rows = rows.astype(np.int32)
                wgt = np.zeros(n, dtype=np.float64)
                wgt[rows] = counts.astype(np.float64)
            else:
                rows = np.arange(n, dtype=np.int32)
                wgt = np.ones(n, dtype=np.float64)
            grad = wgt * y
            feature, threshold, left, right, leaf_w, leaf_s, _ = grow_one_tree(
                design, rows, wgt, grad, grad * y,
                max_depth=depth, min_leaf=float(self.min_samples_leaf),
                use_gini=self.classification, k=k, rng=rng,
            )
            value = np.zeros(feature.shape[0], dtype=np.float64)
            is_leaf = feature < 0
            denom = np.where(leaf_w > 0, leaf_w, np.inf)
            value[is_leaf] = (leaf_s / denom)[is_leaf]
            builder.add_tree(feature, threshold, left, right, value)
        self.arena_ = builder.build()
        return self

    def predict_proba1(self, X: np.ndarray) -> np.ndarray:
        return self.arena_.predict_sum(X) / self.arena_.n_trees

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.arena_.predict_sum(X) / self.arena_.n_trees

    def to_state(self) -> dict:
        return {
            "kind": "rf",
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "bootstrap": self.bootstrap,
            "classification": self.classification,
            "seed": self.seed,
            "arena": self.arena_.to_state() if self.arena_ else None,
        }

    @classmethod
    def from_state(cls, state: dict) -> "RandomForest":
        model = cls(
            n_estimators=state["n_estimators"],
            max_depth=state["max_depth"],
            min_samples_leaf=state["min_samples_leaf"],
            bootstrap=state["bootstrap"],
            classification=state["classification"],
            seed=state["seed"],
        )
        if state["arena"] is not None:
            model.arena_ = TreeArena.from_state(state["arena"])
        return model
