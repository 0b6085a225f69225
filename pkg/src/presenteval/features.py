"""Fixed-length descriptors from time-indexed feature tables.

Global descriptors summarize a whole video; local descriptors summarize
consecutive 16-second windows. Face and pose streams are reduced with
statistical functionals per column; speech tables already carry acoustic
functionals computed upstream, so they pass through (averaged over rows
when a scope spans several upstream windows).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import FeatureError
from .ingest import FeatureTable, estimate_duration
from .schemas import POSE_COLUMNS, POSE_JOINTS

DEFAULT_WINDOW_S = 16.0

GLOBAL_SCOPE = ("global",)

FUNCTIONALS = {
    "mean": lambda v: v.mean(axis=0),
    "std": lambda v: v.std(axis=0),
    "min": lambda v: v.min(axis=0),
    "max": lambda v: v.max(axis=0),
    "median": lambda v: np.median(v, axis=0),
    "range": lambda v: v.max(axis=0) - v.min(axis=0),
}

DEFAULT_FUNCTIONALS = ("mean", "std", "min", "max")


@dataclass(frozen=True)
class FeatureVector:
    """One fixed-length descriptor: a (video, modality, scope) triple."""

    video_id: str
    modality: str
    scope: tuple
    values: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.feature_names),):
            raise FeatureError(
                f"{self.video_id}/{self.modality}: {self.values.shape[0]} values "
                f"for {len(self.feature_names)} names"
            )
        if not np.all(np.isfinite(self.values)):
            raise FeatureError(f"{self.video_id}/{self.modality}: non-finite feature values")
        self.values.setflags(write=False)


@dataclass(frozen=True)
class Window:
    index: int
    start_s: float
    end_s: float
    table: FeatureTable
    fallback: bool = False


def segment_windows(
    table: FeatureTable,
    window_s: float = DEFAULT_WINDOW_S,
    duration_s: float | None = None,
    origin_s: float | None = None,
) -> list[Window]:
    """Cut a table into consecutive non-overlapping windows.

    The trailing remainder is kept as its own window iff it spans at least
    half a window; a table shorter than half a window comes back as a single
    flagged fallback window. ``duration_s`` and ``origin_s`` override the
    time extent estimated from the table; callers with a manifest pass the
    recorded duration and origin 0 so all modalities of a video agree on
    window boundaries even when rows were dropped.
    """
    if table.n_rows == 0:
        raise FeatureError("cannot window an empty table")
    if window_s <= 0:
        raise FeatureError("window_s must be > 0")
    t0 = float(table.timestamps[0]) if origin_s is None else float(origin_s)
    duration = duration_s if duration_s is not None else estimate_duration(table.timestamps)
    if duration < window_s / 2:
        return [Window(0, t0, t0 + max(duration, 0.0), table, fallback=True)]

    n_full = int(duration // window_s)
    remainder = duration - n_full * window_s
    bounds = [(t0 + i * window_s, t0 + (i + 1) * window_s) for i in range(n_full)]
    if remainder >= window_s / 2:
        bounds.append((t0 + n_full * window_s, t0 + duration))

    out: list[Window] = []
    ts = table.timestamps
    for i, (start, end) in enumerate(bounds):
        mask = (ts >= start) & (ts < end)
        if not mask.any():
            continue
        sub = FeatureTable(
            modality=table.modality,
            columns=table.columns,
            timestamps=np.ascontiguousarray(ts[mask]),
            values=np.ascontiguousarray(table.values[mask]),
            confidence=None if table.confidence is None
            else np.ascontiguousarray(table.confidence[mask]),
            coverage_ratio=table.coverage_ratio,
        )
        out.append(Window(i, start, end, sub))
    if not out:
        return [Window(0, t0, t0 + duration, table, fallback=True)]
    return out


def normalize_pose_frames(values: np.ndarray) -> np.ndarray:
    """Per-frame pose canonicalization: neck at the origin, shoulder span = 1.

    Removes camera placement and subject size so aggregated pose statistics
    describe posture and movement rather than staging.
    """
    n = values.shape[0]
    pts = values.reshape(n, len(POSE_JOINTS), 2)
    neck = pts[:, POSE_JOINTS.index("neck"), :]
    ls = pts[:, POSE_JOINTS.index("l_shoulder"), :]
    rs = pts[:, POSE_JOINTS.index("r_shoulder"), :]
    span = np.linalg.norm(ls - rs, axis=1)
    span = np.where(span > 1e-9, span, 1.0)
    out = (pts - neck[:, None, :]) / span[:, None, None]
    return out.reshape(n, len(POSE_COLUMNS))


def aggregate(
    table: FeatureTable,
    functionals: tuple[str, ...] = DEFAULT_FUNCTIONALS,
    video_id: str = "",
    scope: tuple = GLOBAL_SCOPE,
) -> FeatureVector:
    """Reduce a table to one descriptor.

    Face/pose: each functional over each schema column, ordered column-major
    by (column, functional). Speech: row mean of the upstream functional
    vectors (the identity for a one-row table).
    """
    if table.n_rows == 0:
        raise FeatureError("cannot aggregate an empty table")
    if table.modality == "speech":
        return FeatureVector(
            video_id=video_id,
            modality="speech",
            scope=scope,
            values=table.values.mean(axis=0),
            feature_names=table.columns,
        )
    unknown = [f for f in functionals if f not in FUNCTIONALS]
    if unknown:
        raise FeatureError(f"unknown functionals {unknown}; choose from {sorted(FUNCTIONALS)}")
    values = table.values
    if table.modality == "pose":
        values = normalize_pose_frames(values)
    blocks = np.stack([FUNCTIONALS[f](values) for f in functionals], axis=1)
    names = tuple(f"{col}__{f}" for col in table.columns for f in functionals)
    return FeatureVector(
        video_id=video_id,
        modality=table.modality,
        scope=scope,
        values=blocks.reshape(-1),
        feature_names=names,
    )


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension centering/scaling fitted on a training set.

    Dimensions constant in training (zero std) transform to 0.
    """

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        self.mean.setflags(write=False)
        self.std.setflags(write=False)

    @property
    def constant_dims(self) -> np.ndarray:
        return self.std == 0.0

    def transform(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.mean.shape[0]:
            raise FeatureError(
                f"dimension mismatch: standardizer has {self.mean.shape[0]}, input has {values.shape[-1]}"
            )
        safe = np.where(self.std > 0.0, self.std, 1.0)
        out = (values - self.mean) / safe
        if self.constant_dims.any():
            out = np.where(self.constant_dims, 0.0, out)
        return out


def fit_standardizer(vectors) -> Standardizer:
    """Fit per-dimension mean and population std on training vectors only."""
    mat = _as_matrix(vectors)
    if mat.shape[0] < 2:
        raise FeatureError("need at least 2 vectors to fit a standardizer")
    return Standardizer(mean=mat.mean(axis=0), std=mat.std(axis=0))


def apply_standardizer(standardizer: Standardizer, vector: FeatureVector) -> FeatureVector:
    values = standardizer.transform(vector.values)
    return replace(vector, values=values)


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        return np.asarray(vectors, dtype=np.float64)
    rows = [v.values if isinstance(v, FeatureVector) else np.asarray(v, float) for v in vectors]
    lengths = {r.shape[0] for r in rows}
    if len(lengths) > 1:
        raise FeatureError(f"vectors have mixed lengths {sorted(lengths)}")
    return np.array(rows, dtype=np.float64)


def export_vectors_csv(vectors: list[FeatureVector], path) -> None:
    """One row per descriptor with scope metadata, for inspection and reuse."""
    if not vectors:
        raise FeatureError("nothing to export")
    names = vectors[0].feature_names
    for v in vectors:
        if v.feature_names != names:
            raise FeatureError("export requires a homogeneous feature space")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["video_id", "modality", "scope", "window_index",
                           "start_s", "end_s", *names]) + "\n")
        for v in vectors:
            if v.scope == GLOBAL_SCOPE:
                meta = [v.video_id, v.modality, "global", "", "", ""]
            else:
                _, idx, start, end = v.scope
                meta = [v.video_id, v.modality, "window", str(idx), repr(float(start)), repr(float(end))]
            fh.write(",".join(meta + [repr(float(x)) for x in v.values]) + "\n")
