"""Loading and validation of dataset manifests, feature tables, and ratings.

A dataset on disk is a JSON manifest naming one CSV feature table per
modality per video, plus a ratings CSV. Everything loaded here is immutable
after construction and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ManifestError, RatingsError, SchemaError
from .schemas import (
    BODY_VOICE_ITEMS,
    CONFIDENCE_COLUMN,
    DATASET_TAGS,
    MODALITIES,
    MODALITY_COLUMNS,
    N_RATING_ITEMS,
    RATING_SCALE,
    TIME_COLUMN,
)

DEFAULT_CONFIDENCE_THRESHOLD = 0.5

# Modalities whose tables carry one row per video frame; their row counts
# must agree with the manifest duration.
FRAME_INDEXED_MODALITIES = ("face", "pose")


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    person_id: str
    duration_s: float
    fps: float
    modality_paths: dict[str, Path]

    def __post_init__(self) -> None:
        if not self.video_id:
            raise ManifestError("video_id must be non-empty")
        if not self.person_id:
            raise ManifestError(f"video {self.video_id!r}: person_id must be non-empty")
        if not self.duration_s > 0:
            raise ManifestError(f"video {self.video_id!r}: duration_s must be > 0")
        if not self.fps > 0:
            raise ManifestError(f"video {self.video_id!r}: fps must be > 0")
        if not self.modality_paths:
            raise ManifestError(f"video {self.video_id!r}: needs at least one modality path")
        unknown = set(self.modality_paths) - set(MODALITIES)
        if unknown:
            raise ManifestError(f"video {self.video_id!r}: unknown modalities {sorted(unknown)}")


@dataclass(frozen=True)
class Manifest:
    dataset_tag: str
    videos: tuple[VideoRecord, ...]

    def __post_init__(self) -> None:
        if self.dataset_tag not in DATASET_TAGS:
            raise ManifestError(f"dataset_tag must be one of {DATASET_TAGS}, got {self.dataset_tag!r}")
        seen: set[str] = set()
        for v in self.videos:
            if v.video_id in seen:
                raise ManifestError(f"duplicate video_id {v.video_id!r}")
            seen.add(v.video_id)

    @property
    def video_ids(self) -> tuple[str, ...]:
        return tuple(v.video_id for v in self.videos)

    @property
    def person_ids(self) -> tuple[str, ...]:
        return tuple(v.person_id for v in self.videos)

    def record(self, video_id: str) -> VideoRecord:
        for v in self.videos:
            if v.video_id == video_id:
                return v
        raise KeyError(video_id)


@dataclass(frozen=True)
class FeatureTable:
    """Time-indexed numeric matrix for one modality of one video."""

    modality: str
    columns: tuple[str, ...]
    timestamps: np.ndarray
    values: np.ndarray
    confidence: np.ndarray | None = None
    coverage_ratio: float = 1.0
    n_dropped: int = 0

    def __post_init__(self) -> None:
        for arr in (self.timestamps, self.values, self.confidence):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path: str | Path) -> None:
        """Write the table back out; numeric text is round-trip exact."""
        cols = [TIME_COLUMN]
        arrays = [self.timestamps]
        if self.confidence is not None:
            cols.append(CONFIDENCE_COLUMN)
            arrays.append(self.confidence)
        cols.extend(self.columns)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            mat = np.column_stack([*arrays, self.values])
            for row in mat:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


@dataclass(frozen=True)
class RatingTable:
    """(video_id, rater_id, item, rating) entries on the 4-point scale."""

    entries: tuple[tuple[str, str, int, int], ...]
    _index: dict[tuple[str, int], tuple[tuple[str, int], ...]] = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        index: dict[tuple[str, int], list[tuple[str, int]]] = {}
        for video_id, rater_id, item, rating in self.entries:
            if not 1 <= item <= N_RATING_ITEMS:
                raise RatingsError(f"unknown item index {item} for video {video_id!r}")
            if rating not in RATING_SCALE:
                raise RatingsError(
                    f"rating {rating} for video {video_id!r} item {item} outside scale {RATING_SCALE}"
                )
            index.setdefault((video_id, item), []).append((rater_id, rating))
        object.__setattr__(
            self, "_index", {k: tuple(v) for k, v in index.items()}
        )

    def ratings_for(self, video_id: str, item: int) -> tuple[tuple[str, int], ...]:
        return self._index.get((video_id, item), ())

    def items_for(self, video_id: str) -> tuple[int, ...]:
        return tuple(sorted({item for vid, item in self._index if vid == video_id}))

    def video_ids(self) -> tuple[str, ...]:
        return tuple(sorted({vid for vid, _ in self._index}))

    def rater_ids(self) -> tuple[str, ...]:
        return tuple(sorted({r for _, r, _, _ in self.entries}))


@dataclass(frozen=True)
class ValidationIssue:
    video_id: str
    kind: str
    message: str


@dataclass(frozen=True)
class VideoCheck:
    video_id: str
    modalities_present: dict[str, bool]
    coverage: dict[str, float]
    items_rated: tuple[int, ...]


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    issues: tuple[ValidationIssue, ...]
    checks: tuple[VideoCheck, ...]

    def to_text(self) -> str:
        lines = [f"validation: {'PASS' if self.passed else 'FAIL'}"]
        lines.append(f"videos checked: {len(self.checks)}")
        for issue in self.issues:
            lines.append(f"  [{issue.kind}] {issue.video_id}: {issue.message}")
        return "\n".join(lines) + "\n"


def load_manifest(path: str | Path) -> Manifest:
    """Parse a JSON manifest; relative file paths resolve against its directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: top level must be an object")
    for key in ("dataset_tag", "videos"):
        if key not in raw:
            raise ManifestError(f"{path}: missing required field {key!r}")
    base = path.parent
    videos = []
    for i, entry in enumerate(raw["videos"]):
        for key in ("video_id", "person_id", "duration_s", "fps"):
            if key not in entry:
                raise ManifestError(f"{path}: videos[{i}] missing required field {key!r}")
        paths = {
            m: base / entry[m] for m in MODALITIES if m in entry and entry[m] is not None
        }
        videos.append(
            VideoRecord(
                video_id=str(entry["video_id"]),
                person_id=str(entry["person_id"]),
                duration_s=float(entry["duration_s"]),
                fps=float(entry["fps"]),
                modality_paths=paths,
            )
        )
    return Manifest(dataset_tag=str(raw["dataset_tag"]), videos=tuple(videos))


def load_feature_table(
    path: str | Path,
    modality: str,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> FeatureTable:
    """Load one modality CSV, normalize column order, drop low-confidence rows."""
    if modality not in MODALITIES:
        raise SchemaError(f"unknown modality {modality!r}")
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as exc:
        raise SchemaError(f"{path}: cannot parse CSV: {exc}") from exc

    schema = MODALITY_COLUMNS[modality]
    got = list(frame.columns)
    if TIME_COLUMN not in got:
        raise SchemaError(f"{path}: missing required column {TIME_COLUMN!r}")
    has_conf = CONFIDENCE_COLUMN in got
    feature_cols = [c for c in got if c not in (TIME_COLUMN, CONFIDENCE_COLUMN)]
    missing = sorted(set(schema) - set(feature_cols))
    extra = sorted(set(feature_cols) - set(schema))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing columns {missing[:8]}{'...' if len(missing) > 8 else ''}")
        if extra:
            parts.append(f"unexpected columns {extra[:8]}{'...' if len(extra) > 8 else ''}")
        raise SchemaError(
            f"{path}: {modality} schema mismatch ({len(feature_cols)} of {len(schema)} columns): "
            + "; ".join(parts)
        )

    timestamps = frame[TIME_COLUMN].to_numpy(dtype=np.float64)
    if timestamps.size == 0:
        raise SchemaError(f"{path}: table has no rows")
    if not np.all(np.diff(timestamps) > 0):
        raise SchemaError(f"{path}: timestamps must be strictly increasing")

    values = frame[list(schema)].to_numpy(dtype=np.float64)
    confidence = frame[CONFIDENCE_COLUMN].to_numpy(dtype=np.float64) if has_conf else None

    n_total = values.shape[0]
    n_dropped = 0
    if confidence is not None:
        keep = confidence >= confidence_threshold
        n_dropped = int(n_total - keep.sum())
        if n_dropped:
            timestamps = timestamps[keep]
            values = values[keep]
            confidence = confidence[keep]
    if values.shape[0] == 0:
        raise SchemaError(f"{path}: empty table after confidence filtering")
    if not np.all(np.isfinite(values)):
        raise SchemaError(f"{path}: non-finite values in retained rows")

    return FeatureTable(
        modality=modality,
        columns=schema,
        timestamps=np.ascontiguousarray(timestamps),
        values=np.ascontiguousarray(values),
        confidence=None if confidence is None else np.ascontiguousarray(confidence),
        coverage_ratio=float((n_total - n_dropped) / n_total),
        n_dropped=n_dropped,
    )


def load_ratings(path: str | Path) -> RatingTable:
    """Load the ratings CSV (columns video_id, rater_id, item, rating)."""
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as exc:
        raise RatingsError(f"{path}: cannot parse CSV: {exc}") from exc
    needed = ["video_id", "rater_id", "item", "rating"]
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise RatingsError(f"{path}: missing columns {missing}")
    entries = []
    for row in frame.itertuples(index=False):
        entries.append((str(row.video_id), str(row.rater_id), int(row.item), int(row.rating)))
    return RatingTable(entries=tuple(entries))


def validate_dataset(
    manifest: Manifest,
    ratings: RatingTable,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> ValidationReport:
    """Check that every downstream precondition holds; problems are reported, not raised."""
    issues: list[ValidationIssue] = []
    checks: list[VideoCheck] = []
    for rec in manifest.videos:
        present: dict[str, bool] = {}
        coverage: dict[str, float] = {}
        for modality in MODALITIES:
            p = rec.modality_paths.get(modality)
            if p is None or not Path(p).exists():
                present[modality] = False
                issues.append(
                    ValidationIssue(rec.video_id, "missing-modality",
                                    f"{modality} table missing for {rec.video_id}")
                )
                continue
            present[modality] = True
            try:
                table = load_feature_table(p, modality, confidence_threshold)
            except SchemaError as exc:
                issues.append(ValidationIssue(rec.video_id, "bad-table", str(exc)))
                continue
            coverage[modality] = table.coverage_ratio
            if modality in FRAME_INDEXED_MODALITIES:
                n_source = table.n_rows + table.n_dropped
                implied = n_source / rec.fps
                if abs(implied - rec.duration_s) > 1.0:
                    issues.append(
                        ValidationIssue(
                            rec.video_id, "duration-mismatch",
                            f"{modality} rows imply {implied:.2f}s, manifest says {rec.duration_s:.2f}s",
                        )
                    )
        rated = set(ratings.items_for(rec.video_id))
        missing_items = sorted(set(BODY_VOICE_ITEMS) - rated)
        if missing_items:
            issues.append(
                ValidationIssue(rec.video_id, "missing-ratings",
                                f"items {missing_items} unrated for {rec.video_id}")
            )
        checks.append(
            VideoCheck(
                video_id=rec.video_id,
                modalities_present=present,
                coverage=coverage,
                items_rated=tuple(sorted(rated)),
            )
        )
    return ValidationReport(passed=not issues, issues=tuple(issues), checks=tuple(checks))


def estimate_duration(timestamps: np.ndarray) -> float:
    """Duration implied by a table's time axis: span plus one median sample period."""
    if timestamps.size == 1:
        return 0.0
    span = float(timestamps[-1] - timestamps[0])
    step = float(np.median(np.diff(timestamps)))
    return span + step
