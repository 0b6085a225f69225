"""Multimodal combination rules.

Feature fusion concatenates the per-modality descriptors of one sample into
a single vector for one jointly trained estimator. Late fusion combines the
per-modality model outputs: median, product, or sum of class probabilities
for classification, and the median of predicted values for regression.
Fused class scores are renormalized for reporting; decisions are by argmax,
which renormalization cannot change.
"""

from __future__ import annotations

import numpy as np

from .errors import FusionError
from .features import FeatureVector
from .schemas import MODALITIES

FF = "ff"
LF_MEDIAN = "lf_median"
LF_PRODUCT = "lf_product"
LF_SUM = "lf_sum"

FUSION_RULES = (FF, LF_MEDIAN, LF_PRODUCT, LF_SUM)
LATE_RULES = (LF_MEDIAN, LF_PRODUCT, LF_SUM)


def feature_fuse(vectors: list[FeatureVector]) -> FeatureVector:
    """Concatenate one sample's modality descriptors in canonical order."""
    if not vectors:
        raise FusionError("feature_fuse needs at least one vector")
    scopes = {v.scope for v in vectors}
    if len(scopes) > 1:
        raise FusionError(f"scope mismatch across modalities: {sorted(map(str, scopes))}")
    video_ids = {v.video_id for v in vectors}
    if len(video_ids) > 1:
        raise FusionError(f"video mismatch across modalities: {sorted(video_ids)}")
    seen = [v.modality for v in vectors]
    if len(set(seen)) != len(seen):
        raise FusionError(f"duplicate modalities in fusion input: {seen}")
    ordered = sorted(vectors, key=lambda v: MODALITIES.index(v.modality))
    values = np.concatenate([v.values for v in ordered])
    names = tuple(
        f"{v.modality}:{name}" for v in ordered for name in v.feature_names
    )
    return FeatureVector(
        video_id=vectors[0].video_id,
        modality="fused",
        scope=vectors[0].scope,
        values=values,
        feature_names=names,
    )


def split_fused(vector: FeatureVector) -> dict[str, FeatureVector]:
    """Invert feature_fuse: recover the per-modality vectors exactly."""
    out: dict[str, FeatureVector] = {}
    names = vector.feature_names
    order: list[str] = []
    for n in names:
        m = n.split(":", 1)[0]
        if m not in order:
            order.append(m)
    offset = 0
    for m in order:
        block = [n for n in names if n.startswith(f"{m}:")]
        out[m] = FeatureVector(
            video_id=vector.video_id,
            modality=m,
            scope=vector.scope,
            values=vector.values[offset:offset + len(block)].copy(),
            feature_names=tuple(n.split(":", 1)[1] for n in block),
        )
        offset += len(block)
    return out


def late_fuse_class(probs, rule: str) -> np.ndarray:
    """Combine >=2 per-modality class-probability vectors into one.

    Returns the fused vector normalized to sum 1. A degenerate all-zero
    product comes back uniform, which downstream tie-breaking resolves.
    """
    if rule not in LATE_RULES:
        raise FusionError(f"unknown late-fusion rule {rule!r}")
    mat = np.asarray(probs, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 2:
        raise FusionError("late fusion needs >=2 modality probability vectors")
    if mat.shape[1] < 2:
        raise FusionError("probability vectors must cover >=2 classes")
    if rule == LF_MEDIAN:
        fused = np.median(mat, axis=0)
    elif rule == LF_PRODUCT:
        fused = np.prod(mat, axis=0)
    else:
        fused = np.sum(mat, axis=0)
    total = fused.sum()
    if total <= 0.0:
        return np.full(mat.shape[1], 1.0 / mat.shape[1])
    return fused / total


def late_fuse_reg(values) -> float:
    """Median of >=2 per-modality predicted values."""
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size < 2:
        raise FusionError("late fusion needs >=2 modality predictions")
    return float(np.median(vals))
