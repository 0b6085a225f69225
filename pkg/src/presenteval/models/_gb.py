"""Gradient boosting over depth-limited regression trees.

Classification boosts the logistic loss: each round fits a least-squares
tree to the residuals ``y - p`` and replaces leaf means by a damped Newton
step (gradient sum over curvature sum). Regression boosts squared loss with
plain mean-residual leaves. The per-round training loss curve is recorded;
it is non-increasing by construction of the leaf steps.
"""

from __future__ import annotations

import numpy as np

from ._forest import ArenaBuilder, BinnedDesign, TreeArena, grow_one_tree

_LEAF_STEP_LIMIT = 1e3


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(y: np.ndarray, raw: np.ndarray) -> float:
    # numerically stable mean of log(1 + exp(-margin))
    margin = np.where(y > 0.5, raw, -raw)
    return float(np.mean(np.logaddexp(0.0, -margin)))


class GradientBoosting:
    def __init__(self, n_estimators=200, learning_rate=0.1, max_depth=3,
                 min_samples_leaf=1, classification=True):
        self.n_estimators = int(n_estimators)
        self.learning_rate = float(learning_rate)
        self.max_depth = int(max_depth)
        self.min_samples_leaf = int(min_samples_leaf)
        self.classification = bool(classification)
        self.base_score_ = 0.0
        self.arena_: TreeArena | None = None
        self.train_loss_curve_: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoosting":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = y.shape[0]
        design = BinnedDesign(X)
        rows_template = np.arange(n, dtype=np.int32)
        wgt = np.ones(n, dtype=np.float64)

        if self.classification:
            p_mean = float(y.mean())
            self.base_score_ = float(np.log(p_mean / (1.0 - p_mean)))
        else:
            self.base_score_ = float(y.mean())

        raw = np.full(n, self.base_score_, dtype=np.float64)
        builder = ArenaBuilder()
        losses = []
        if self.classification:
            losses.append(_log_loss(y, raw))
        else:
            losses.append(float(np.mean((y - raw) ** 2)))

        for _ in range(self.n_estimators):
            if self.classification:
                p = _sigmoid(raw)
                residual = y - p
                hessian = p * (1.0 - p)
            else:
                residual = y - raw
                hessian = None

            rows = rows_template.copy()
            feature, threshold, left, right, leaf_w, leaf_s, leaf_of = grow_one_tree(
                design, rows, wgt, residual, residual * residual,
                max_depth=self.max_depth, min_leaf=float(self.min_samples_leaf),
                use_gini=False,
            )
            is_leaf = feature < 0
            value = np.zeros(feature.shape[0], dtype=np.float64)
            if self.classification:
                hess_per_leaf = np.bincount(leaf_of, weights=hessian,
                                            minlength=feature.shape[0])
                denom = np.where(hess_per_leaf > 1e-12, hess_per_leaf, np.inf)
                step = leaf_s / denom
            else:
                denom = np.where(leaf_w > 0, leaf_w, np.inf)
                step = leaf_s / denom
            value[is_leaf] = np.clip(step[is_leaf], -_LEAF_STEP_LIMIT, _LEAF_STEP_LIMIT)

            raw += self.learning_rate * value[leaf_of]
            builder.add_tree(feature, threshold, left, right, value)

            if self.classification:
                losses.append(_log_loss(y, raw))
            else:
                losses.append(float(np.mean((y - raw) ** 2)))

        self.arena_ = builder.build() if self.n_estimators > 0 else None
        self.train_loss_curve_ = np.asarray(losses)
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        raw = np.full(X.shape[0], self.base_score_, dtype=np.float64)
        if self.arena_ is not None and self.arena_.n_trees:
            raw += self.learning_rate * self.arena_.predict_sum(X)
        return raw

    def predict_proba1(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.decision_function(X)

    def to_state(self) -> dict:
        return {
            "kind": "gb",
            "n_estimators": self.n_estimators,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "classification": self.classification,
            "base_score": self.base_score_,
            "arena": self.arena_.to_state() if self.arena_ else None,
        }

    @classmethod
    def from_state(cls, state: dict) -> "GradientBoosting":
        model = cls(
            n_estimators=state["n_estimators"],
            learning_rate=state["learning_rate"],
            max_depth=state["max_depth"],
            min_samples_leaf=state["min_samples_leaf"],
            classification=state["classification"],
        )
        model.base_score_ = state["base_score"]
        if state["arena"] is not None:
            model.arena_ = TreeArena.from_state(state["arena"])
        return model
