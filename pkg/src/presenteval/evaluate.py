"""Evaluation protocol pieces: folds, video-level aggregation, and metrics.

Folds are person-grouped and class-stratified: every video of a person
lands in one fold, and fold class counts stay as balanced as the grouping
permits. Local-scope window predictions reduce to a video decision by
majority vote (classification) or median (regression). Metrics treat the
high-competence class as positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvalError
from .labels import CLASS_HIGH, CLASS_LOW


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[str, int]
    seed: int

    def fold_of(self, video_id: str) -> int:
        return self.assignments[video_id]

    def test_videos(self, fold: int) -> list[str]:
        return sorted(v for v, f in self.assignments.items() if f == fold)

    def train_videos(self, fold: int) -> list[str]:
        return sorted(v for v, f in self.assignments.items() if f != fold)


def make_folds(videos, k: int = 10, seed: int = 0) -> FoldPlan:
    """Grouped, stratified fold assignment.

    ``videos`` is an iterable of (video_id, person_id, class_label). Persons
    are shuffled deterministically, ordered by decreasing video count, and
    greedily placed on the fold where their majority class is rarest (ties:
    smaller fold, then lower index).
    """
    videos = list(videos)
    persons: dict[str, list[tuple[str, str]]] = {}
    for video_id, person_id, label in videos:
        persons.setdefault(person_id, []).append((video_id, label))
    if k < 2:
        raise EvalError("k must be >= 2")
    if len(persons) < k:
        raise EvalError(f"{len(persons)} persons cannot fill {k} folds")

    rng = np.random.default_rng(seed)
    order = sorted(persons)
    rng.shuffle(order)
    order.sort(key=lambda p: -len(persons[p]))

    fold_class: list[dict[str, int]] = [dict() for _ in range(k)]
    fold_size = [0] * k
    assignments: dict[str, int] = {}
    for person in order:
        vids = persons[person]
        labels = [lab for _, lab in vids]
        major = max(sorted(set(labels)), key=labels.count)
        best = min(
            range(k),
            key=lambda f: (fold_class[f].get(major, 0), fold_size[f], f),
        )
        for video_id, lab in vids:
            assignments[video_id] = best
            fold_class[best][lab] = fold_class[best].get(lab, 0) + 1
            fold_size[best] += 1
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def shuffle_split_folds(video_ids, k: int, seed: int) -> FoldPlan:
    """Plain seeded shuffle split into k near-equal folds (no grouping)."""
    ids = sorted(video_ids)
    if k < 2:
        raise EvalError("k must be >= 2")
    if len(ids) < k:
        raise EvalError(f"{len(ids)} videos cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    rng.shuffle(ids)
    assignments = {vid: i % k for i, vid in enumerate(ids)}
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def video_vote(window_preds, tie_probs=None) -> str:
    """Majority class; ties break by highest mean probability, then low."""
    preds = list(window_preds)
    if not preds:
        raise EvalError("video_vote needs at least one window prediction")
    n_high = sum(1 for p in preds if p == CLASS_HIGH)
    n_low = len(preds) - n_high
    if n_high > n_low:
        return CLASS_HIGH
    if n_low > n_high:
        return CLASS_LOW
    if tie_probs is not None:
        mean = np.asarray(tie_probs, dtype=np.float64).mean(axis=0)
        if mean[1] > mean[0]:
            return CLASS_HIGH
    return CLASS_LOW


def video_median(window_preds) -> float:
    vals = np.asarray(list(window_preds), dtype=np.float64)
    if vals.size == 0:
        raise EvalError("video_median needs at least one window prediction")
    return float(np.median(vals))


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def degenerate(self) -> bool:
        return self.precision is None or self.recall is None


def classification_metrics(y_true, y_pred) -> ClassificationMetrics:
    """Accuracy/precision/recall/F1 with positive = high competence.

    Zero-denominator precision or recall is reported as None and F1 falls
    back to 0 for that evaluation.
    """
    t = list(y_true)
    p = list(y_pred)
    if len(t) != len(p):
        raise EvalError(f"length mismatch: {len(t)} true vs {len(p)} predicted")
    if not t:
        raise EvalError("metrics need at least one sample")
    for lab in (*t, *p):
        if lab not in (CLASS_LOW, CLASS_HIGH):
            raise EvalError(f"unknown class label {lab!r}")
    tp = sum(1 for a, b in zip(t, p) if a == CLASS_HIGH and b == CLASS_HIGH)
    tn = sum(1 for a, b in zip(t, p) if a == CLASS_LOW and b == CLASS_LOW)
    fp = sum(1 for a, b in zip(t, p) if a == CLASS_LOW and b == CLASS_HIGH)
    fn = sum(1 for a, b in zip(t, p) if a == CLASS_HIGH and b == CLASS_LOW)
    accuracy = (tp + tn) / len(t)
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    if precision is not None and recall is not None and (precision + recall) > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return ClassificationMetrics(accuracy, precision, recall, f1, tp, tn, fp, fn)


def mse(y_true, y_hat) -> float:
    t = np.asarray(list(y_true), dtype=np.float64)
    h = np.asarray(list(y_hat), dtype=np.float64)
    if t.shape != h.shape:
        raise EvalError(f"length mismatch: {t.shape} vs {h.shape}")
    if t.size == 0:
        raise EvalError("mse needs at least one sample")
    return float(np.mean((t - h) ** 2))


def pearson_r(x, y) -> float:
    xv = np.asarray(list(x), dtype=np.float64)
    yv = np.asarray(list(y), dtype=np.float64)
    if xv.shape != yv.shape:
        raise EvalError(f"length mismatch: {xv.shape} vs {yv.shape}")
    if xv.size < 2:
        raise EvalError("pearson_r needs at least two samples")
    dx = xv - xv.mean()
    dy = yv - yv.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise EvalError("pearson_r undefined for constant input")
    r = float((dx * dy).sum() / (sx * sy))
    return max(-1.0, min(1.0, r))
