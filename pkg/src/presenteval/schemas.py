"""Canonical column schemas for the three nonverbal feature modalities.

Feature tables arrive as CSVs produced by upstream extractors; this module
pins the exact column names and ordering the rest of the pipeline assumes.
Input files may permute columns, but names must match one of these schemas.
"""

from __future__ import annotations

MODALITIES = ("speech", "face", "pose")

TIME_COLUMN = "t"
CONFIDENCE_COLUMN = "confidence"

# Acoustic functionals, one row per analysis scope (whole recording or one
# window). 88 descriptors in the extended Geneva minimalistic parameter set.
_F0_LOUDNESS_FUNCTIONALS = (
    "amean",
    "stddevNorm",
    "percentile20.0",
    "percentile50.0",
    "percentile80.0",
    "pctlrange0-2",
    "meanRisingSlope",
    "stddevRisingSlope",
    "meanFallingSlope",
    "stddevFallingSlope",
)

_MEAN_STDDEV = ("amean", "stddevNorm")


def _build_speech_columns() -> tuple[str, ...]:
    cols: list[str] = []
    for f in _F0_LOUDNESS_FUNCTIONALS:
        cols.append(f"F0semitoneFrom27.5Hz_sma3nz_{f}")
    for f in _F0_LOUDNESS_FUNCTIONALS:
        cols.append(f"loudness_sma3_{f}")
    for f in _MEAN_STDDEV:
        cols.append(f"spectralFlux_sma3_{f}")
    for k in range(1, 5):
        for f in _MEAN_STDDEV:
            cols.append(f"mfcc{k}_sma3_{f}")
    for base in ("jitterLocal", "shimmerLocaldB", "HNRdBACF", "logRelF0-H1-H2", "logRelF0-H1-A3"):
        for f in _MEAN_STDDEV:
            cols.append(f"{base}_sma3nz_{f}")
    for k in range(1, 4):
        for part in ("frequency", "bandwidth", "amplitudeLogRelF0"):
            for f in _MEAN_STDDEV:
                cols.append(f"F{k}{part}_sma3nz_{f}")
    for base in ("alphaRatioV", "hammarbergIndexV", "slopeV0-500", "slopeV500-1500", "spectralFluxV"):
        for f in _MEAN_STDDEV:
            cols.append(f"{base}_sma3nz_{f}")
    for k in range(1, 5):
        for f in _MEAN_STDDEV:
            cols.append(f"mfcc{k}V_sma3nz_{f}")
    for base in ("alphaRatioUV", "hammarbergIndexUV", "slopeUV0-500", "slopeUV500-1500", "spectralFluxUV"):
        cols.append(f"{base}_sma3nz_amean")
    cols += [
        "loudnessPeaksPerSec",
        "VoicedSegmentsPerSec",
        "MeanVoicedSegmentLengthSec",
        "StddevVoicedSegmentLength",
        "MeanUnvoicedSegmentLength",
        "StddevUnvoicedSegmentLength",
        "equivalentSoundLevel_dBp",
    ]
    return tuple(cols)


SPEECH_COLUMNS = _build_speech_columns()

# Facial stream: 6 head-pose dims, a 3-component gaze direction, and
# occurrence (0/1) plus intensity (0-5) for 17 action units. The gaze
# descriptor is fixed at 3 components to pin the total at 43 columns.
ACTION_UNITS = (1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17, 20, 23, 25, 26, 45)

FACE_COLUMNS = tuple(
    [
        "head_loc_x_mm",
        "head_loc_y_mm",
        "head_loc_z_mm",
        "head_rot_pitch_rad",
        "head_rot_yaw_rad",
        "head_rot_roll_rad",
        "gaze_angle_x_rad",
        "gaze_angle_y_rad",
        "gaze_angle_z_rad",
    ]
    + [f"au{n:02d}_occ" for n in ACTION_UNITS]
    + [f"au{n:02d}_int" for n in ACTION_UNITS]
)

# Body pose: 2-D locations of the 15 joints the upstream detector reports
# most reliably. The exact joint list is a schema decision of this artifact.
POSE_JOINTS = (
    "nose",
    "neck",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_wrist",
    "r_wrist",
    "l_hip",
    "r_hip",
    "mid_hip",
    "l_knee",
    "r_knee",
    "l_ankle",
    "r_ankle",
)

POSE_COLUMNS = tuple(f"{j}_{axis}" for j in POSE_JOINTS for axis in ("x", "y"))

MODALITY_COLUMNS: dict[str, tuple[str, ...]] = {
    "speech": SPEECH_COLUMNS,
    "face": FACE_COLUMNS,
    "pose": POSE_COLUMNS,
}

assert len(SPEECH_COLUMNS) == 88
assert len(FACE_COLUMNS) == 43
assert len(POSE_COLUMNS) == 30

# Rating instrument: 22 items on a 4-point scale; items 10-15 are the
# "body language & voice" block the pipeline learns from.
N_RATING_ITEMS = 22
RATING_SCALE = (1, 2, 3, 4)
BODY_VOICE_ITEMS = (10, 11, 12, 13, 14, 15)
SCORE_RANGE = (1.0, 4.0)

DATASET_TAGS = ("T1", "T2")
