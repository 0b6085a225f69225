"""Exception types raised across the package."""


class PresentEvalError(Exception):
    """Base class for all package errors."""


class ManifestError(PresentEvalError):
    """Malformed or inconsistent dataset manifest."""


class SchemaError(PresentEvalError):
    """Feature table does not match its modality schema."""


class RatingsError(PresentEvalError):
    """Rating table violates the instrument contract."""


class FeatureError(PresentEvalError):
    """Invalid feature aggregation or standardization input."""


class ModelError(PresentEvalError):
    """Estimator misuse: wrong task, dimension mismatch, bad training set."""


class FusionError(PresentEvalError):
    """Incompatible inputs to a fusion rule."""


class EvalError(PresentEvalError):
    """Evaluation protocol violation (folds, metrics, runs)."""


class ConfigError(PresentEvalError):
    """Invalid run or generator configuration."""
