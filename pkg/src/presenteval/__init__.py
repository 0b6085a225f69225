"""Batch toolkit for estimating presentation competence from multimodal
nonverbal feature streams (speech, face, body pose)."""

from .config import RunConfig, config_from_dict, load_config
from .evaluate import (
    FoldPlan,
    classification_metrics,
    make_folds,
    mse,
    pearson_r,
    video_median,
    video_vote,
)
from .features import (
    FeatureVector,
    Standardizer,
    aggregate,
    apply_standardizer,
    fit_standardizer,
    segment_windows,
)
from .fusion import feature_fuse, late_fuse_class, late_fuse_reg
from .ingest import (
    FeatureTable,
    Manifest,
    RatingTable,
    ValidationReport,
    VideoRecord,
    load_feature_table,
    load_manifest,
    load_ratings,
    validate_dataset,
)
from .labels import (
    CompetenceTarget,
    DiscretizationRule,
    competence_score,
    compute_median_threshold,
    discretize,
    icc_a_k,
)
from .models import ModelSpec, TrainedModel, predict_proba, predict_value, train
from .runner import prepare_dataset, run_cross_dataset, run_same_dataset
from .synth import PairShift, SynthSpec, generate, generate_pair

__version__ = "0.1.0"
