"""Deterministic synthetic dataset generator.

Stands in for the private presentation corpus: every video gets a latent
competence level u ~ Uniform(1, 4), modality streams whose window-level
statistics depend monotonically on u with configurable strength, and rater
scores built from u plus rater noise. Per-modality nuisance makes each
modality an independently noisy view of u, so fusing modalities genuinely
helps. Generation is a pure function of (spec, seed, video index); files
are byte-identical across runs.

Planted signal, per modality (zero signal strength removes all of it):
  speech - designated functional columns shift linearly with the drive;
  face   - smile intensity rises, yaw/gaze scatter falls;
  pose   - wrists/elbows rise and limb jitter falls, in normalized units,
           so the pipeline's pose canonicalization preserves the signal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ConfigError
from .schemas import (
    FACE_COLUMNS,
    MODALITIES,
    N_RATING_ITEMS,
    POSE_COLUMNS,
    POSE_JOINTS,
    SPEECH_COLUMNS,
)

DEFAULT_WINDOW_S = 16.0

SPEECH_SIGNAL_COLUMNS = (
    "F0semitoneFrom27.5Hz_sma3nz_amean",
    "F0semitoneFrom27.5Hz_sma3nz_pctlrange0-2",
    "loudness_sma3_amean",
    "loudness_sma3_stddevNorm",
    "jitterLocal_sma3nz_amean",
    "shimmerLocaldB_sma3nz_amean",
    "HNRdBACF_sma3nz_amean",
    "VoicedSegmentsPerSec",
    "MeanVoicedSegmentLengthSec",
    "loudnessPeaksPerSec",
)

_ARM_JOINTS = ("l_elbow", "r_elbow", "l_wrist", "r_wrist")

# Rest skeleton in shoulder-width units, neck at the origin, y up.
_POSE_BASE = {
    "nose": (0.0, 0.25),
    "neck": (0.0, 0.0),
    "l_shoulder": (-0.5, 0.0),
    "r_shoulder": (0.5, 0.0),
    "l_elbow": (-0.65, -0.45),
    "r_elbow": (0.65, -0.45),
    "l_wrist": (-0.6, -0.85),
    "r_wrist": (0.6, -0.85),
    "l_hip": (-0.35, -1.1),
    "r_hip": (0.35, -1.1),
    "mid_hip": (0.0, -1.1),
    "l_knee": (-0.35, -1.9),
    "r_knee": (0.35, -1.9),
    "l_ankle": (-0.35, -2.6),
    "r_ankle": (0.35, -2.6),
}

_FLOAT_FMT = "%.6g"


@dataclass(frozen=True)
class SynthSpec:
    n_videos: int = 160
    n_persons: int = 160
    duration_range_s: tuple[float, float] = (150.0, 210.0)
    fps: float = 5.0
    signal_strength: dict = field(
        default_factory=lambda: {"speech": 1.0, "face": 1.0, "pose": 1.0}
    )
    modality_noise_sd: dict = field(
        default_factory=lambda: {"speech": 0.25, "face": 0.25, "pose": 0.25}
    )
    rater_noise_sd: float = 0.4
    n_raters: int = 4
    window_s: float = DEFAULT_WINDOW_S
    distribution_shift: dict | None = None
    dataset_tag: str = "T1"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_persons > self.n_videos:
            raise ConfigError("n_persons cannot exceed n_videos")
        if self.n_videos < 1:
            raise ConfigError("n_videos must be >= 1")
        for m, s in self.signal_strength.items():
            if m not in MODALITIES:
                raise ConfigError(f"unknown modality {m!r} in signal_strength")
            if not 0.0 <= s <= 1.0:
                raise ConfigError(f"signal_strength[{m!r}] must lie in [0, 1], got {s}")
        if self.rater_noise_sd < 0:
            raise ConfigError("rater_noise_sd must be >= 0")
        lo, hi = self.duration_range_s
        if not 0 < lo <= hi:
            raise ConfigError("duration_range_s must satisfy 0 < min <= max")

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthSpec":
        kwargs = dict(raw)
        if "duration_range_s" in kwargs:
            kwargs["duration_range_s"] = tuple(kwargs["duration_range_s"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "n_videos": self.n_videos,
            "n_persons": self.n_persons,
            "duration_range_s": list(self.duration_range_s),
            "fps": self.fps,
            "signal_strength": dict(self.signal_strength),
            "modality_noise_sd": dict(self.modality_noise_sd),
            "rater_noise_sd": self.rater_noise_sd,
            "n_raters": self.n_raters,
            "window_s": self.window_s,
            "distribution_shift": self.distribution_shift,
            "dataset_tag": self.dataset_tag,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PairShift:
    """How the second dataset of a pair differs from the first."""

    n_videos: int = 91
    distribution_shift: dict | None = None
    rater_noise_sd: float | None = None
    seed_offset: int = 1_000_003


def _video_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def _window_starts(duration: float, window_s: float) -> np.ndarray:
    n_full = int(duration // window_s)
    remainder = duration - n_full * window_s
    n = n_full + (1 if remainder >= window_s / 2 else 0)
    if n == 0:
        n = 1
    return np.arange(n, dtype=np.float64) * window_s


def _column_shift(values: np.ndarray, shift: dict | None) -> np.ndarray:
    if not shift:
        return values
    return shift.get("offset", 0.0) + shift.get("scale", 1.0) * values


def _speech_table(rng, spec: SynthSpec, drive: float, duration: float) -> pd.DataFrame:
    starts = _window_starts(duration, spec.window_s)
    n = starts.shape[0]
    base = 0.5 * np.sin(np.arange(len(SPEECH_COLUMNS)) * 0.7)
    values = base[None, :] + rng.normal(0.0, 0.3, size=(n, len(SPEECH_COLUMNS)))
    sig_idx = [SPEECH_COLUMNS.index(c) for c in SPEECH_SIGNAL_COLUMNS]
    amps = 1.0 + 0.1 * np.arange(len(sig_idx))
    values[:, sig_idx] += amps[None, :] * drive
    shift = (spec.distribution_shift or {}).get("speech")
    values = _column_shift(values, shift)
    frame = pd.DataFrame(values, columns=list(SPEECH_COLUMNS))
    frame.insert(0, "t", starts)
    return frame


def _face_table(rng, spec: SynthSpec, drive: float, n_frames: int) -> pd.DataFrame:
    t = np.arange(n_frames, dtype=np.float64) / spec.fps
    cols: dict[str, np.ndarray] = {}
    walk = np.cumsum(rng.normal(0.0, 0.5, size=(n_frames, 3)), axis=0)
    cols["head_loc_x_mm"] = walk[:, 0]
    cols["head_loc_y_mm"] = 20.0 + walk[:, 1]
    cols["head_loc_z_mm"] = 650.0 + walk[:, 2]

    calm = np.clip(1.5 - drive, 0.3, 2.5)
    cols["head_rot_pitch_rad"] = rng.normal(0.0, 0.10, n_frames)
    cols["head_rot_yaw_rad"] = rng.normal(0.0, 0.20 * calm, n_frames)
    cols["head_rot_roll_rad"] = rng.normal(0.0, 0.06, n_frames)
    cols["gaze_angle_x_rad"] = rng.normal(0.0, 0.15 * calm, n_frames)
    cols["gaze_angle_y_rad"] = rng.normal(0.0, 0.12 * calm, n_frames)
    cols["gaze_angle_z_rad"] = rng.normal(0.0, 0.05, n_frames)

    for name in FACE_COLUMNS:
        if not name.startswith("au"):
            continue
        au = name[2:4]
        if name.endswith("_int"):
            if au == "12":
                intensity = np.clip(0.8 + 1.8 * drive + rng.normal(0.0, 0.4, n_frames), 0.0, 5.0)
            else:
                level = 0.4 + (0.05 * int(au)) % 1.5
                intensity = np.clip(level + rng.normal(0.0, 0.5, n_frames), 0.0, 5.0)
            cols[name] = intensity
            cols[f"au{au}_occ"] = (intensity > 1.2).astype(np.float64)
    shift = (spec.distribution_shift or {}).get("face")
    values = np.column_stack([cols[c] for c in FACE_COLUMNS])
    values = _column_shift(values, shift)
    frame = pd.DataFrame(values, columns=list(FACE_COLUMNS))
    frame.insert(0, "t", t)
    frame.insert(1, "confidence", _confidence(rng, n_frames))
    return frame


def _pose_table(rng, spec: SynthSpec, drive: float, n_frames: int) -> pd.DataFrame:
    t = np.arange(n_frames, dtype=np.float64) / spec.fps
    shift = (spec.distribution_shift or {}).get("pose") or {}
    arm_offset = shift.get("offset", 0.0)
    jitter_scale = shift.get("scale", 1.0)

    lift = 0.35 * drive
    jitter_arm = 0.06 * np.clip(1.6 - drive, 0.35, 2.5) * jitter_scale
    jitter_body = 0.02 * jitter_scale

    pts = np.empty((n_frames, len(POSE_JOINTS), 2), dtype=np.float64)
    for j, joint in enumerate(POSE_JOINTS):
        bx, by = _POSE_BASE[joint]
        if joint in _ARM_JOINTS:
            by = by + lift + arm_offset
            sd = jitter_arm
        else:
            sd = jitter_body
        pts[:, j, 0] = bx + rng.normal(0.0, sd, n_frames)
        pts[:, j, 1] = by + rng.normal(0.0, sd, n_frames)

    scale = rng.uniform(80.0, 140.0)
    neck_path = np.cumsum(rng.normal(0.0, 0.8, size=(n_frames, 2)), axis=0)
    neck_path += np.array([rng.uniform(200.0, 440.0), rng.uniform(140.0, 240.0)])
    world = pts * scale + neck_path[:, None, :]
    frame = pd.DataFrame(world.reshape(n_frames, -1), columns=list(POSE_COLUMNS))
    frame.insert(0, "t", t)
    frame.insert(1, "confidence", _confidence(rng, n_frames))
    return frame


def _confidence(rng, n: int) -> np.ndarray:
    conf = np.clip(rng.normal(0.95, 0.03, n), 0.0, 1.0)
    drop = rng.random(n) < 0.02
    conf[drop] = rng.uniform(0.05, 0.35, int(drop.sum()))
    return conf


def _ratings_for(rng, spec: SynthSpec, u: float) -> list[tuple[str, int, int]]:
    out = []
    for r in range(spec.n_raters):
        noise = rng.normal(0.0, spec.rater_noise_sd, N_RATING_ITEMS)
        vals = np.clip(np.rint(u + noise), 1, 4).astype(int)
        for item in range(1, N_RATING_ITEMS + 1):
            out.append((f"r{r + 1:02d}", item, int(vals[item - 1])))
    return out


def generate(
    spec: SynthSpec,
    out_dir: str | Path,
    person_ids: list[str] | None = None,
    video_prefix: str | None = None,
) -> Path:
    """Write a full dataset (manifest, feature CSVs, ratings) under out_dir."""
    out_dir = Path(out_dir)
    try:
        (out_dir / "features").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc

    if person_ids is None:
        person_ids = [f"p{i % spec.n_persons + 1:04d}" for i in range(spec.n_videos)]
    elif len(person_ids) != spec.n_videos:
        raise ConfigError("person_ids must have one entry per video")
    prefix = video_prefix if video_prefix is not None else f"{spec.dataset_tag.lower()}_v"

    manifest_videos = []
    rating_rows: list[str] = []
    latents: list[float] = []
    scores: list[float] = []
    for i in range(spec.n_videos):
        rng = _video_rng(spec.seed, i)
        video_id = f"{prefix}{i + 1:04d}"
        u = float(rng.uniform(1.0, 4.0))
        latents.append(u)
        n_frames = int(round(rng.uniform(*spec.duration_range_s) * spec.fps))
        duration = n_frames / spec.fps

        drives = {}
        for m in MODALITIES:
            nu = float(rng.normal(0.0, spec.modality_noise_sd.get(m, 0.0)))
            drives[m] = spec.signal_strength.get(m, 0.0) * ((u - 1.0) / 3.0 + nu)

        tables = {
            "speech": _speech_table(rng, spec, drives["speech"], duration),
            "face": _face_table(rng, spec, drives["face"], n_frames),
            "pose": _pose_table(rng, spec, drives["pose"], n_frames),
        }
        paths = {}
        for m, frame in tables.items():
            rel = f"features/{video_id}_{m}.csv"
            frame.to_csv(out_dir / rel, index=False, float_format=_FLOAT_FMT)
            paths[m] = rel

        entry = {
            "video_id": video_id,
            "person_id": person_ids[i],
            "duration_s": duration,
            "fps": spec.fps,
        }
        entry.update(paths)
        manifest_videos.append(entry)

        item_scores = []
        for rater, item, val in _ratings_for(rng, spec, u):
            rating_rows.append(f"{video_id},{rater},{item},{val}")
            if 10 <= item <= 15:
                item_scores.append(val)
        scores.append(float(np.mean(item_scores)))

    manifest = {"dataset_tag": spec.dataset_tag, "videos": manifest_videos}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8"
    )
    with open(out_dir / "ratings.csv", "w", encoding="utf-8") as fh:
        fh.write("video_id,rater_id,item,rating\n")
        fh.write("\n".join(rating_rows) + "\n")

    lat = np.asarray(latents)
    sc = np.asarray(scores)
    if lat.std() > 0 and sc.std() > 0:
        score_latent_r = float(np.corrcoef(lat, sc)[0, 1])
    else:
        score_latent_r = float("nan")
    summary = {
        "spec": spec.to_dict(),
        "n_videos": spec.n_videos,
        "score_latent_pearson_r": score_latent_r,
        "median_score": float(np.median(sc)),
        "latents": {v["video_id"]: latents[i] for i, v in enumerate(manifest_videos)},
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True), encoding="utf-8"
    )
    return out_dir / "manifest.json"


def generate_pair(
    spec_t1: SynthSpec,
    shift: PairShift,
    out_dir: str | Path,
) -> tuple[Path, Path]:
    """Two linked datasets: T2' persons are a subset of T1' persons."""
    if shift.n_videos > spec_t1.n_persons:
        raise ConfigError(
            f"T2 subset of {shift.n_videos} persons exceeds the T1 pool of {spec_t1.n_persons}"
        )
    out_dir = Path(out_dir)
    t1_manifest = generate(spec_t1, out_dir / "t1")

    pool = [f"p{i + 1:04d}" for i in range(spec_t1.n_persons)]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec_t1.seed, 777])))
    chosen = sorted(rng.choice(len(pool), size=shift.n_videos, replace=False).tolist())
    t2_persons = [pool[i] for i in chosen]

    spec_t2 = replace(
        spec_t1,
        n_videos=shift.n_videos,
        n_persons=shift.n_videos,
        dataset_tag="T2",
        distribution_shift=shift.distribution_shift,
        rater_noise_sd=(
            spec_t1.rater_noise_sd if shift.rater_noise_sd is None else shift.rater_noise_sd
        ),
        seed=spec_t1.seed + shift.seed_offset,
    )
    t2_manifest = generate(spec_t2, out_dir / "t2", person_ids=t2_persons)
    return t1_manifest, t2_manifest
