"""Competence targets from rating tables.

The regression target for a video is the mean over raters and the six
body-language & voice items (10-15). Classification discretizes that score
at a threshold: the shipped default 2.83, or the median recomputed from any
score list. Interrater reliability is the two-way mixed, absolute-agreement,
average-measures intraclass correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RatingsError
from .ingest import RatingTable
from .schemas import BODY_VOICE_ITEMS, SCORE_RANGE

CLASS_LOW = "low"
CLASS_HIGH = "high"
CLASSES = (CLASS_LOW, CLASS_HIGH)

DEFAULT_THRESHOLD = 2.83


@dataclass(frozen=True)
class DiscretizationRule:
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        lo, hi = SCORE_RANGE
        if not lo < self.threshold < hi:
            raise RatingsError(f"threshold must lie in ({lo}, {hi}), got {self.threshold}")


@dataclass(frozen=True)
class CompetenceTarget:
    video_id: str
    score: float
    class_label: str | None = None


def competence_score(ratings: RatingTable, video_id: str) -> float:
    """Mean over raters per item, then mean over items 10-15."""
    item_means = []
    for item in BODY_VOICE_ITEMS:
        entries = ratings.ratings_for(video_id, item)
        if not entries:
            raise RatingsError(f"video {video_id!r}: item {item} has no ratings")
        item_means.append(float(np.mean([r for _, r in entries])))
    return float(np.mean(item_means))


def compute_median_threshold(scores) -> float:
    scores = np.asarray(list(scores), dtype=np.float64)
    if scores.size == 0:
        raise RatingsError("cannot take the median of an empty score list")
    return float(np.median(scores))


def discretize(score: float, rule: DiscretizationRule) -> str:
    """High iff score >= threshold; the boundary itself counts as high."""
    lo, hi = SCORE_RANGE
    if not lo <= score <= hi:
        raise RatingsError(f"score {score} outside [{lo}, {hi}]")
    return CLASS_HIGH if score >= rule.threshold else CLASS_LOW


def build_targets(
    ratings: RatingTable,
    video_ids,
    rule: DiscretizationRule | None = None,
) -> list[CompetenceTarget]:
    targets = []
    for vid in video_ids:
        score = competence_score(ratings, vid)
        label = discretize(score, rule) if rule is not None else None
        targets.append(CompetenceTarget(video_id=vid, score=score, class_label=label))
    return targets


def rating_matrix(ratings: RatingTable, item: int, video_ids=None) -> np.ndarray:
    """Videos x raters matrix for one item; raises if any cell is missing."""
    vids = list(video_ids) if video_ids is not None else list(ratings.video_ids())
    raters = ratings.rater_ids()
    mat = np.empty((len(vids), len(raters)), dtype=np.float64)
    for i, vid in enumerate(vids):
        got = dict(ratings.ratings_for(vid, item))
        missing = [r for r in raters if r not in got]
        if missing:
            raise RatingsError(f"video {vid!r} item {item}: missing raters {missing}")
        for j, r in enumerate(raters):
            mat[i, j] = got[r]
    return mat


def icc_a_k(matrix: np.ndarray) -> float:
    """Two-way mixed, absolute-agreement, average-measures ICC of a targets x raters matrix."""
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 2 or mat.shape[1] < 2:
        raise RatingsError("ICC needs a 2-D matrix with >=2 targets and >=2 raters")
    if not np.all(np.isfinite(mat)):
        raise RatingsError("ICC matrix contains missing or non-finite cells")
    n, k = mat.shape
    grand = mat.mean()
    row_means = mat.mean(axis=1)
    col_means = mat.mean(axis=0)
    ss_rows = k * float(((row_means - grand) ** 2).sum())
    ss_cols = n * float(((col_means - grand) ** 2).sum())
    ss_total = float(((mat - grand) ** 2).sum())
    ss_err = ss_total - ss_rows - ss_cols
    ms_rows = ss_rows / (n - 1)
    ms_cols = ss_cols / (k - 1)
    ms_err = ss_err / ((n - 1) * (k - 1))
    denom = ms_rows + (ms_cols - ms_err) / n
    if abs(denom) < 1e-300:
        raise RatingsError("ICC undefined: no variance in the rating matrix")
    return (ms_rows - ms_err) / denom


def export_targets_csv(targets: list[CompetenceTarget], path, threshold: float | None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("video_id,score,class_label,threshold_used\n")
        thr = "" if threshold is None else repr(float(threshold))
        for t in targets:
            label = t.class_label or ""
            fh.write(f"{t.video_id},{repr(float(t.score))},{label},{thr}\n")
