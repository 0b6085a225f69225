"""Run configuration: defaults, file loading, and the config fingerprint.

Every field has a logged default mirroring the experimental setup: 16-second
windows, 10 folds, the 2.83 discretization threshold, and the full model
grid. The fingerprint is a stable hash of the resolved semantic config
(output location and worker count excluded), so equal fingerprints imply
byte-identical result files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .features import DEFAULT_FUNCTIONALS, FUNCTIONALS
from .fusion import FUSION_RULES
from .labels import DEFAULT_THRESHOLD
from .models import FAMILIES, TASKS, default_hyperparameters
from .schemas import MODALITIES

SCOPES = ("global", "local")


@dataclass(frozen=True)
class RunConfig:
    train_manifest: str
    train_ratings: str
    test_manifest: str | None = None
    test_ratings: str | None = None
    modalities: tuple = MODALITIES
    scopes: tuple = SCOPES
    tasks: tuple = TASKS
    families: tuple = FAMILIES
    fusion: tuple = FUSION_RULES
    window_s: float = 16.0
    functionals: tuple = DEFAULT_FUNCTIONALS
    k_folds: int = 10
    seed: int = 7
    threshold_mode: str = "fixed"
    threshold_value: float = DEFAULT_THRESHOLD
    confidence_threshold: float = 0.5
    clamp_range: tuple = (1.0, 4.0)
    model_overrides: dict = field(default_factory=dict)
    save_models: bool = False
    workers: int = 0
    out_dir: str = "runs/latest"

    def __post_init__(self) -> None:
        def check_subset(name, got, allowed, allow_empty=False):
            bad = [x for x in got if x not in allowed]
            if bad:
                raise ConfigError(f"{name}: unknown values {bad}; allowed {list(allowed)}")
            if not got and not allow_empty:
                raise ConfigError(f"{name}: must not be empty")

        check_subset("modalities", self.modalities, MODALITIES)
        check_subset("scopes", self.scopes, SCOPES)
        check_subset("tasks", self.tasks, TASKS)
        check_subset("families", self.families, FAMILIES)
        # an empty fusion list runs single-modality cells only
        check_subset("fusion", self.fusion, FUSION_RULES, allow_empty=True)
        check_subset("functionals", self.functionals, tuple(FUNCTIONALS))
        if self.threshold_mode not in ("fixed", "recompute"):
            raise ConfigError(f"threshold_mode must be fixed|recompute, got {self.threshold_mode!r}")
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")
        if self.window_s <= 0:
            raise ConfigError("window_s must be > 0")
        for fam in self.model_overrides:
            if fam not in FAMILIES:
                raise ConfigError(f"model_overrides: unknown family {fam!r}")
        if (self.test_manifest is None) != (self.test_ratings is None):
            raise ConfigError("test_manifest and test_ratings must be given together")

    @property
    def cross_dataset(self) -> bool:
        return self.test_manifest is not None

    def model_hyperparameters(self, family: str) -> dict:
        merged = default_hyperparameters(family)
        merged.update(self.model_overrides.get(family, {}))
        return merged

    def resolved(self) -> dict:
        """Full semantic config including per-family hyperparameters."""
        return {
            "train_manifest": self.train_manifest,
            "train_ratings": self.train_ratings,
            "test_manifest": self.test_manifest,
            "test_ratings": self.test_ratings,
            "modalities": list(self.modalities),
            "scopes": list(self.scopes),
            "tasks": list(self.tasks),
            "families": list(self.families),
            "fusion": list(self.fusion),
            "window_s": self.window_s,
            "functionals": list(self.functionals),
            "k_folds": self.k_folds,
            "seed": self.seed,
            "threshold_mode": self.threshold_mode,
            "threshold_value": self.threshold_value,
            "confidence_threshold": self.confidence_threshold,
            "clamp_range": list(self.clamp_range),
            "models": {f: _jsonable(self.model_hyperparameters(f)) for f in self.families},
        }

    def fingerprint(self) -> str:
        canon = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _jsonable(d: dict) -> dict:
    return {k: (v if v is None or isinstance(v, (int, float, bool, str)) else str(v))
            for k, v in d.items()}


_TUPLE_FIELDS = ("modalities", "scopes", "tasks", "families", "fusion",
                 "functionals", "clamp_range")


def config_from_dict(raw: dict) -> RunConfig:
    kwargs = dict(raw)
    unknown = set(kwargs) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    for key in _TUPLE_FIELDS:
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = tuple(kwargs[key])
    return RunConfig(**kwargs)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(raw)


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    overrides = {k: v for k, v in overrides.items() if v is not None}
    for key in _TUPLE_FIELDS:
        if key in overrides:
            overrides[key] = tuple(overrides[key])
    return replace(config, **overrides)
