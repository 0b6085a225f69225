"""The estimator zoo: GB, DT, RF, and SVM, each as classifier and regressor.

``train`` standardizes features internally (statistics from the training
set only) and bundles the standardizer into the returned model, so applying
test-set statistics is structurally impossible. Classifiers expose
normalized two-class probabilities; fitted models are immutable and
deterministic given (seed, data, spec).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ModelError
from ..features import Standardizer, fit_standardizer, _as_matrix
from ._dt import DecisionTree, best_split
from ._gb import GradientBoosting
from ._rf import RandomForest
from ._svm import SVMClassifier, SVMRegressor

FAMILIES = ("gb", "dt", "rf", "svm")
TASKS = ("classification", "regression")

SERIAL_FORMAT = "presenteval-model"
SERIAL_VERSION = 1

_DEFAULT_HYPERPARAMETERS = {
    "gb": {"n_estimators": 200, "learning_rate": 0.1, "max_depth": 3, "min_samples_leaf": 1},
    "dt": {"max_depth": None, "min_samples_leaf": 1},
    "rf": {"n_estimators": 200, "max_depth": None, "min_samples_leaf": 1, "bootstrap": True},
    "svm": {"C": 10.0, "gamma": "scale", "tol": 1e-3, "epsilon": 0.1, "max_iter": 400_000},
}


def default_hyperparameters(family: str) -> dict:
    return dict(_DEFAULT_HYPERPARAMETERS[family])


@dataclass(frozen=True)
class ModelSpec:
    family: str
    task: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ModelError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.task not in TASKS:
            raise ModelError(f"unknown task {self.task!r}; choose from {TASKS}")
        merged = default_hyperparameters(self.family)
        unknown = set(self.hyperparameters) - set(merged)
        if unknown:
            raise ModelError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        merged.update(self.hyperparameters)
        object.__setattr__(self, "hyperparameters", merged)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "task": self.task,
            "hyperparameters": dict(self.hyperparameters),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    standardizer: Standardizer
    estimator: object
    # classifiers fit against a pivot class chosen independently of how the
    # two classes are named, so relabeling swaps output columns exactly
    classes: tuple = ()
    pivot_is_second: bool = True

    @property
    def is_classifier(self) -> bool:
        return self.spec.task == "classification"


def _build_estimator(spec: ModelSpec):
    hp = spec.hyperparameters
    clf = spec.task == "classification"
    if spec.family == "gb":
        return GradientBoosting(
            n_estimators=hp["n_estimators"], learning_rate=hp["learning_rate"],
            max_depth=hp["max_depth"], min_samples_leaf=hp["min_samples_leaf"],
            classification=clf,
        )
    if spec.family == "dt":
        return DecisionTree(
            max_depth=hp["max_depth"], min_samples_leaf=hp["min_samples_leaf"],
            classification=clf,
        )
    if spec.family == "rf":
        return RandomForest(
            n_estimators=hp["n_estimators"], max_depth=hp["max_depth"],
            min_samples_leaf=hp["min_samples_leaf"], bootstrap=hp["bootstrap"],
            classification=clf, seed=spec.seed,
        )
    if clf:
        return SVMClassifier(C=hp["C"], gamma=hp["gamma"], tol=hp["tol"],
                             max_iter=hp["max_iter"])
    return SVMRegressor(C=hp["C"], gamma=hp["gamma"], epsilon=hp["epsilon"],
                        tol=hp["tol"], max_iter=hp["max_iter"])


def train(spec: ModelSpec, X, y) -> TrainedModel:
    """Fit one estimator; X may be FeatureVectors or a numeric matrix."""
    mat = _as_matrix(X)
    y = np.asarray(y)
    if mat.shape[0] != y.shape[0]:
        raise ModelError(f"{mat.shape[0]} samples but {y.shape[0]} targets")
    if mat.shape[0] < 2:
        raise ModelError("need at least 2 training samples")

    classes: tuple = ()
    pivot_is_second = True
    if spec.task == "classification":
        uniq = np.unique(y)
        if uniq.shape[0] != 2:
            raise ModelError(f"classification needs exactly 2 classes, got {uniq.shape[0]}")
        classes = tuple(uniq.tolist())
        pivot = y[0]
        pivot_is_second = bool(pivot == uniq[1])
        y_fit = (y == pivot).astype(np.float64)
    else:
        y_fit = y.astype(np.float64)

    standardizer = fit_standardizer(mat)
    Xs = standardizer.transform(mat)
    estimator = _build_estimator(spec)
    estimator.fit(Xs, y_fit)
    return TrainedModel(spec=spec, standardizer=standardizer, estimator=estimator,
                        classes=classes, pivot_is_second=pivot_is_second)


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """(n, 2) class probabilities, columns ordered by sorted class value."""
    if not model.is_classifier:
        raise ModelError("predict_proba requires a classifier")
    Xs = model.standardizer.transform(_as_matrix(X))
    p_pivot = np.clip(model.estimator.predict_proba1(Xs), 0.0, 1.0)
    if model.pivot_is_second:
        return np.column_stack([1.0 - p_pivot, p_pivot])
    return np.column_stack([p_pivot, 1.0 - p_pivot])


def predict_value(model: TrainedModel, X) -> np.ndarray:
    if model.is_classifier:
        raise ModelError("predict_value requires a regressor")
    Xs = model.standardizer.transform(_as_matrix(X))
    return model.estimator.predict_value(Xs)


def save_model(model: TrainedModel, path: str | Path) -> None:
    payload = {
        "format": SERIAL_FORMAT,
        "version": SERIAL_VERSION,
        "spec": model.spec.to_dict(),
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "std": model.standardizer.std.tolist(),
        },
        "classes": list(model.classes),
        "pivot_is_second": model.pivot_is_second,
        "estimator": model.estimator.to_state(),
    }
    Path(path).write_text(json.dumps(payload, separators=(",", ":")), encoding="utf-8")


_ESTIMATOR_KINDS = {
    "gb": GradientBoosting,
    "dt": DecisionTree,
    "rf": RandomForest,
    "svm_clf": SVMClassifier,
    "svm_reg": SVMRegressor,
}


def load_model(path: str | Path) -> TrainedModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != SERIAL_FORMAT:
        raise ModelError(f"{path}: not a serialized model")
    if payload.get("version") != SERIAL_VERSION:
        raise ModelError(f"{path}: unsupported model version {payload.get('version')}")
    spec = ModelSpec(**payload["spec"])
    standardizer = Standardizer(
        mean=np.asarray(payload["standardizer"]["mean"], dtype=np.float64),
        std=np.asarray(payload["standardizer"]["std"], dtype=np.float64),
    )
    est_state = payload["estimator"]
    estimator = _ESTIMATOR_KINDS[est_state["kind"]].from_state(est_state)
    return TrainedModel(
        spec=spec, standardizer=standardizer, estimator=estimator,
        classes=tuple(payload.get("classes", ())),
        pivot_is_second=payload.get("pivot_is_second", True),
    )


__all__ = [
    "FAMILIES",
    "TASKS",
    "ModelSpec",
    "TrainedModel",
    "best_split",
    "default_hyperparameters",
    "load_model",
    "predict_proba",
    "predict_value",
    "save_model",
    "train",
]
