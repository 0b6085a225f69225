"""Experiment engine: same-dataset CV and cross-dataset runs over the grid.

A run sweeps {tasks x scopes x families}; within each combination it trains
one model per modality plus one on the fused descriptor, derives the late-
fusion rows from the single-modality probabilities, and aggregates window
predictions to video level in local scope. Results land in a ResultTable
whose CSV/markdown serializations are byte-deterministic for a fixed
config fingerprint.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import models as model_zoo
from .config import RunConfig
from .errors import EvalError, PresentEvalError
from .evaluate import (
    FoldPlan,
    classification_metrics,
    make_folds,
    mse,
    pearson_r,
    shuffle_split_folds,
    video_median,
    video_vote,
)
from .features import FeatureVector, aggregate, segment_windows
from .fusion import FF, LATE_RULES, feature_fuse, late_fuse_class, late_fuse_reg
from .ingest import load_feature_table, load_manifest, load_ratings, validate_dataset
from .labels import (
    CLASS_HIGH,
    CLASS_LOW,
    DiscretizationRule,
    build_targets,
    compute_median_threshold,
)

FUSED = "fused"


@dataclass
class VideoFeatures:
    video_id: str
    person_id: str
    global_vectors: dict[str, FeatureVector]
    window_vectors: dict[str, dict[int, FeatureVector]]
    window_bounds: dict[int, tuple[float, float]]


@dataclass
class PreparedDataset:
    tag: str
    videos: dict[str, VideoFeatures]
    scores: dict[str, float]
    classes: dict[str, str]
    persons: dict[str, str]
    threshold: float
    flags: tuple[str, ...] = ()

    @property
    def video_ids(self) -> list[str]:
        return sorted(self.videos)


def prepare_dataset(
    manifest_path,
    ratings_path,
    config: RunConfig,
    threshold: float | None = None,
) -> PreparedDataset:
    """Load, validate, featurize, and label one dataset.

    ``threshold`` overrides the discretization threshold (cross-dataset test
    sets reuse the training threshold); otherwise fixed/recompute follows
    the config.
    """
    manifest = load_manifest(manifest_path)
    ratings = load_ratings(ratings_path)
    report = validate_dataset(manifest, ratings, config.confidence_threshold)
    if not report.passed:
        raise EvalError(
            f"dataset {manifest.dataset_tag} failed validation with "
            f"{len(report.issues)} issue(s); first: {report.issues[0].message}"
        )

    targets = build_targets(ratings, [v.video_id for v in manifest.videos])
    scores = {t.video_id: t.score for t in targets}
    if threshold is None:
        if config.threshold_mode == "recompute":
            threshold = compute_median_threshold(list(scores.values()))
        else:
            threshold = config.threshold_value
    rule = DiscretizationRule(threshold=threshold)
    classes = {vid: (CLASS_HIGH if s >= rule.threshold else CLASS_LOW)
               for vid, s in scores.items()}

    need_local = "local" in config.scopes

    def featurize(record) -> VideoFeatures:
        global_vectors: dict[str, FeatureVector] = {}
        window_vectors: dict[str, dict[int, FeatureVector]] = {}
        window_bounds: dict[int, tuple[float, float]] = {}
        for modality in config.modalities:
            table = load_feature_table(
                record.modality_paths[modality], modality, config.confidence_threshold
            )
            global_vectors[modality] = aggregate(
                table, config.functionals, video_id=record.video_id
            )
            if need_local:
                per_window: dict[int, FeatureVector] = {}
                for win in segment_windows(table, config.window_s, record.duration_s,
                                           origin_s=0.0):
                    scope = ("window", win.index, win.start_s, win.end_s)
                    per_window[win.index] = aggregate(
                        win.table, config.functionals,
                        video_id=record.video_id, scope=scope,
                    )
                    window_bounds.setdefault(win.index, (win.start_s, win.end_s))
                window_vectors[modality] = per_window
        return VideoFeatures(
            video_id=record.video_id,
            person_id=record.person_id,
            global_vectors=global_vectors,
            window_vectors=window_vectors,
            window_bounds=window_bounds,
        )

    records = list(manifest.videos)
    if config.workers and config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            feats = list(pool.map(featurize, records))
    else:
        feats = [featurize(r) for r in records]

    return PreparedDataset(
        tag=manifest.dataset_tag,
        videos={f.video_id: f for f in feats},
        scores=scores,
        classes=classes,
        persons={v.video_id: v.person_id for v in manifest.videos},
        threshold=rule.threshold,
    )


@dataclass
class CellResult:
    task: str
    scope: str
    features: str
    family: str
    fusion_rule: str
    fold_metrics: dict[str, list]
    summary: dict[str, float | None]
    pooled_pearson: float | None
    flags: tuple[str, ...]
    train_calls: int

    def key(self) -> tuple:
        return (self.task, self.scope, self.features, self.family, self.fusion_rule)


@dataclass
class PredictionRow:
    task: str
    scope: str
    features: str
    family: str
    fusion_rule: str
    fold: int
    video_id: str
    y_true_score: float
    y_true_class: str
    y_pred: str


@dataclass
class WindowPredictionRow:
    task: str
    scope: str
    features: str
    family: str
    fusion_rule: str
    fold: int
    video_id: str
    window_index: int
    start_s: float
    end_s: float
    y_pred: str
    prob_high: float | None


@dataclass
class ResultTable:
    kind: str
    rows: list[CellResult]
    fingerprint: str
    resolved_config: dict
    video_predictions: list[PredictionRow] = field(default_factory=list)
    window_predictions: list[WindowPredictionRow] = field(default_factory=list)

    def cell(self, task, scope, features, family, fusion_rule="") -> CellResult:
        for row in self.rows:
            if row.key() == (task, scope, features, family, fusion_rule):
                return row
        raise KeyError((task, scope, features, family, fusion_rule))


CLASS_METRICS = ("accuracy", "precision", "recall", "f1")


def _get_matrix(dataset: PreparedDataset, video_ids, modality: str, scope: str):
    """(X, y_score, y_class, sample meta) for one modality or the fused set."""
    rows = []
    meta = []
    for vid in video_ids:
        vf = dataset.videos[vid]
        if scope == "global":
            if modality == FUSED:
                vec = feature_fuse(list(vf.global_vectors.values()))
            else:
                vec = vf.global_vectors[modality]
            rows.append(vec.values)
            meta.append((vid, -1))
        else:
            if modality == FUSED:
                common = sorted(
                    set.intersection(*(set(vf.window_vectors[m]) for m in vf.window_vectors))
                )
                for w in common:
                    vec = feature_fuse([vf.window_vectors[m][w] for m in vf.window_vectors])
                    rows.append(vec.values)
                    meta.append((vid, w))
            else:
                for w in sorted(vf.window_vectors[modality]):
                    rows.append(vf.window_vectors[modality][w].values)
                    meta.append((vid, w))
    X = np.asarray(rows, dtype=np.float64)
    y_score = np.asarray([dataset.scores[vid] for vid, _ in meta])
    y_class = np.asarray([1 if dataset.classes[vid] == CLASS_HIGH else 0 for vid, _ in meta])
    return X, y_score, y_class, meta


def _model_seed(config_seed: int, *parts: int) -> int:
    ss = np.random.SeedSequence([config_seed, *parts])
    return int(ss.generate_state(1)[0])


class _CellAccumulator:
    """Collects per-fold metrics and predictions for one result row."""

    def __init__(self, task, scope, features, family, fusion_rule=""):
        self.task = task
        self.scope = scope
        self.features = features
        self.family = family
        self.fusion_rule = fusion_rule
        self.fold_metrics: dict[str, list] = {}
        self.pooled_true: list[float] = []
        self.pooled_pred: list[float] = []
        self.flags: set[str] = set()
        self.train_calls = 0

    def add_fold_classification(self, fold, y_true_labels, y_pred_labels):
        m = classification_metrics(y_true_labels, y_pred_labels)
        self.fold_metrics.setdefault("accuracy", []).append(m.accuracy)
        self.fold_metrics.setdefault("precision", []).append(m.precision)
        self.fold_metrics.setdefault("recall", []).append(m.recall)
        self.fold_metrics.setdefault("f1", []).append(m.f1)
        if m.degenerate:
            self.flags.add(f"degenerate_confusion_fold_{fold}")

    def add_fold_regression(self, fold, y_true, y_pred):
        self.fold_metrics.setdefault("mse", []).append(mse(y_true, y_pred))
        self.pooled_true.extend(float(v) for v in y_true)
        self.pooled_pred.extend(float(v) for v in y_pred)

    def finish(self) -> CellResult:
        summary: dict[str, float | None] = {}
        for metric, vals in sorted(self.fold_metrics.items()):
            present = [v for v in vals if v is not None]
            if len(present) < len(vals):
                self.flags.add(f"{metric}_missing_in_some_folds")
            if present:
                summary[f"{metric}_mean"] = float(np.mean(present))
                summary[f"{metric}_std"] = float(np.std(present))
            else:
                summary[f"{metric}_mean"] = None
                summary[f"{metric}_std"] = None
        pooled = None
        if self.pooled_true:
            try:
                pooled = pearson_r(self.pooled_pred, self.pooled_true)
            except EvalError:
                self.flags.add("pearson_undefined")
        return CellResult(
            task=self.task, scope=self.scope, features=self.features,
            family=self.family, fusion_rule=self.fusion_rule,
            fold_metrics=self.fold_metrics, summary=summary,
            pooled_pearson=pooled, flags=tuple(sorted(self.flags)),
            train_calls=self.train_calls,
        )


def _aggregate_video_class(meta, proba, scope):
    """Per-video (label, prob_high, window detail) from per-sample probabilities."""
    out = {}
    detail = {}
    by_video: dict[str, list[int]] = {}
    for i, (vid, _w) in enumerate(meta):
        by_video.setdefault(vid, []).append(i)
    for vid, idxs in by_video.items():
        probs = proba[idxs]
        labels = [CLASS_HIGH if probs[j, 1] > probs[j, 0] else CLASS_LOW
                  for j in range(len(idxs))]
        if scope == "global":
            out[vid] = (labels[0], float(probs[0, 1]))
        else:
            out[vid] = (video_vote(labels, probs), float(probs[:, 1].mean()))
        detail[vid] = [(meta[i][1], labels[j], float(probs[j, 1]))
                       for j, i in enumerate(idxs)]
    return out, detail


def _aggregate_video_reg(meta, values, scope, clamp):
    values = np.clip(values, clamp[0], clamp[1])
    out = {}
    detail = {}
    by_video: dict[str, list[int]] = {}
    for i, (vid, _w) in enumerate(meta):
        by_video.setdefault(vid, []).append(i)
    for vid, idxs in by_video.items():
        vals = values[idxs]
        out[vid] = float(vals[0]) if scope == "global" else video_median(vals)
        detail[vid] = [(meta[i][1], float(vals[j])) for j, i in enumerate(idxs)]
    return out, detail


def _fuse_window_probs(metas, probas, rule):
    """Align per-modality window probabilities and fuse them per sample."""
    maps = []
    for meta, proba in zip(metas, probas):
        maps.append({key: proba[i] for i, key in enumerate(meta)})
    common = sorted(set(maps[0]).intersection(*maps[1:]))
    fused_meta = list(common)
    fused = np.asarray([late_fuse_class([m[k] for m in maps], rule) for k in common])
    return fused_meta, fused


def _fuse_window_values(metas, value_arrays):
    maps = []
    for meta, vals in zip(metas, value_arrays):
        maps.append({key: float(vals[i]) for i, key in enumerate(meta)})
    common = sorted(set(maps[0]).intersection(*maps[1:]))
    fused = np.asarray([late_fuse_reg([m[k] for m in maps]) for k in common])
    return list(common), fused


def _true_labels(dataset, video_ids):
    return [dataset.classes[v] for v in video_ids]


def _run_grid(
    config: RunConfig,
    train_data: PreparedDataset,
    folds: list[tuple[int, list[str], list[str]]],
    test_data_for_fold,
    kind: str,
    shared_flags: tuple[str, ...] = (),
    save_dir: Path | None = None,
) -> ResultTable:
    """Shared engine: ``folds`` yields (fold_id, train_video_ids, test_video_ids);
    ``test_data_for_fold(fold_id)`` names the dataset test videos come from.
    For same-dataset runs that is the training dataset itself; cross-dataset
    runs train on every fold with the identical full training set, so each
    model is fitted once and reused across folds. A failure inside one
    (task, scope, family) combination flags its cells and the run continues.
    """
    want_ff = FF in config.fusion
    late_rules = [r for r in config.fusion if r in LATE_RULES]
    single_sets = list(config.modalities)
    need_singles_for_lf = bool(late_rules) and len(single_sets) >= 2

    rows: list[CellResult] = []
    video_preds: list[PredictionRow] = []
    window_preds: list[WindowPredictionRow] = []

    for ti, task in enumerate(config.tasks):
        for si, scope in enumerate(config.scopes):
            for fi, family in enumerate(config.families):
                cells: dict[tuple, _CellAccumulator] = {}
                for m in single_sets:
                    cells[(m, "")] = _CellAccumulator(task, scope, m, family)
                if want_ff:
                    cells[(FUSED, FF)] = _CellAccumulator(task, scope, FUSED, family, FF)
                lf_rules_here = late_rules if task == "classification" else (
                    ["lf_median"] if "lf_median" in late_rules else []
                )
                if need_singles_for_lf:
                    for rule in lf_rules_here:
                        cells[(FUSED, rule)] = _CellAccumulator(task, scope, FUSED, family, rule)
                        cells[(FUSED, rule)].flags.add("reuses_single_modality_models")

                trained_cache: dict[str, model_zoo.TrainedModel] = {}
                failed: Exception | None = None
                for fold_id, train_vids, test_vids in folds:
                    test_data = test_data_for_fold(fold_id)
                    featuresets = list(single_sets)
                    if want_ff:
                        featuresets.append(FUSED)

                    per_set_pred = {}
                    for mi, featureset in enumerate(featuresets):
                        cache_key = featureset
                        if kind == "cross" and cache_key in trained_cache:
                            model = trained_cache[cache_key]
                        else:
                            X_tr, ysc_tr, ycl_tr, _ = _get_matrix(
                                train_data, train_vids, featureset, scope
                            )
                            spec = model_zoo.ModelSpec(
                                family=family,
                                task=task,
                                hyperparameters=config.model_hyperparameters(family),
                                seed=_model_seed(config.seed, ti, si, fi, mi, 0 if kind == "cross" else fold_id),
                            )
                            y_tr = ycl_tr if task == "classification" else ysc_tr
                            try:
                                model = model_zoo.train(spec, X_tr, y_tr)
                            except PresentEvalError as exc:
                                failed = exc
                                break
                            owner = (featureset, FF if featureset == FUSED else "")
                            if owner in cells:
                                cells[owner].train_calls += 1
                            if kind == "cross":
                                trained_cache[cache_key] = model
                            if save_dir is not None:
                                name = f"{task}_{scope}_{family}_{featureset}"
                                if kind != "cross":
                                    name += f"_fold{fold_id}"
                                model_zoo.save_model(model, save_dir / f"{name}.json")

                        X_te, _, _, meta_te = _get_matrix(
                            test_data, test_vids, featureset, scope
                        )
                        if task == "classification":
                            proba = model_zoo.predict_proba(model, X_te)
                            per_set_pred[featureset] = (meta_te, proba)
                        else:
                            vals = model_zoo.predict_value(model, X_te)
                            per_set_pred[featureset] = (meta_te, vals)
                    if failed is not None:
                        break

                    def record_cell(cell_key, meta, output):
                        acc = cells[cell_key]
                        if task == "classification":
                            agg, detail = _aggregate_video_class(meta, output, scope)
                            y_true = _true_labels(test_data, test_vids)
                            y_pred = [agg[v][0] for v in test_vids]
                            acc.add_fold_classification(fold_id, y_true, y_pred)
                        else:
                            agg, detail = _aggregate_video_reg(
                                meta, output, scope, config.clamp_range
                            )
                            y_true = [test_data.scores[v] for v in test_vids]
                            y_pred = [agg[v] for v in test_vids]
                            acc.add_fold_regression(fold_id, y_true, y_pred)
                        for v in test_vids:
                            pred = agg[v]
                            video_preds.append(PredictionRow(
                                task, scope, acc.features, family, acc.fusion_rule,
                                fold_id, v, test_data.scores[v], test_data.classes[v],
                                pred[0] if task == "classification" else repr(pred),
                            ))
                        if scope == "local":
                            for v in test_vids:
                                for item in detail[v]:
                                    if task == "classification":
                                        w, lab, p1 = item
                                        window_preds.append(WindowPredictionRow(
                                            task, scope, acc.features, family,
                                            acc.fusion_rule, fold_id, v, w,
                                            *test_data.videos[v].window_bounds[w],
                                            lab, p1,
                                        ))
                                    else:
                                        w, val = item
                                        window_preds.append(WindowPredictionRow(
                                            task, scope, acc.features, family,
                                            acc.fusion_rule, fold_id, v, w,
                                            *test_data.videos[v].window_bounds[w],
                                            repr(val), None,
                                        ))

                    for m in single_sets:
                        record_cell((m, ""), *per_set_pred[m])
                    if want_ff:
                        record_cell((FUSED, FF), *per_set_pred[FUSED])
                    if need_singles_for_lf and lf_rules_here:
                        metas = [per_set_pred[m][0] for m in single_sets]
                        outs = [per_set_pred[m][1] for m in single_sets]
                        for rule in lf_rules_here:
                            if task == "classification":
                                fmeta, fprob = _fuse_window_probs(metas, outs, rule)
                                record_cell((FUSED, rule), fmeta, fprob)
                            else:
                                fmeta, fvals = _fuse_window_values(metas, outs)
                                record_cell((FUSED, rule), fmeta, fvals)

                extra_flags = set(shared_flags)
                if failed is not None:
                    extra_flags.add(f"cell_failed:{failed}")
                ordered = [(m, "") for m in single_sets]
                if want_ff:
                    ordered.append((FUSED, FF))
                ordered.extend((FUSED, r) for r in lf_rules_here)
                for key in ordered:
                    if key in cells:
                        row = cells[key].finish()
                        row.flags = tuple(sorted(set(row.flags) | extra_flags))
                        rows.append(row)

    return ResultTable(
        kind=kind,
        rows=rows,
        fingerprint=config.fingerprint(),
        resolved_config=config.resolved(),
        video_predictions=video_preds,
        window_predictions=window_preds,
    )


def _save_dir(config: RunConfig) -> Path | None:
    if not config.save_models:
        return None
    path = Path(config.out_dir) / "models"
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_same_dataset(config: RunConfig, train_data: PreparedDataset | None = None) -> ResultTable:
    """Person-independent k-fold CV over the full grid."""
    if train_data is None:
        train_data = prepare_dataset(config.train_manifest, config.train_ratings, config)
    plan: FoldPlan = make_folds(
        [(v, train_data.persons[v], train_data.classes[v]) for v in train_data.video_ids],
        k=config.k_folds,
        seed=config.seed,
    )
    folds = [
        (f, plan.train_videos(f), plan.test_videos(f))
        for f in range(config.k_folds)
    ]
    return _run_grid(config, train_data, folds, lambda f: train_data, "same",
                     save_dir=_save_dir(config))


def run_cross_dataset(
    config: RunConfig,
    train_data: PreparedDataset | None = None,
    test_data: PreparedDataset | None = None,
) -> ResultTable:
    """Train once per cell on the full training set; evaluate on k test folds."""
    if not config.cross_dataset and test_data is None:
        raise EvalError("cross-dataset run needs test_manifest/test_ratings")
    if train_data is None:
        train_data = prepare_dataset(config.train_manifest, config.train_ratings, config)
    if test_data is None:
        test_data = prepare_dataset(
            config.test_manifest, config.test_ratings, config,
            threshold=train_data.threshold,
        )

    flags = []
    train_ids = set(train_data.video_ids)
    test_ids = set(test_data.video_ids)
    overlap = train_ids & test_ids
    if overlap:
        if train_ids == test_ids:
            flags.append("degenerate_overlap")
        else:
            raise EvalError(
                f"{len(overlap)} video_ids present in both datasets; "
                "cross-dataset sets must not share videos"
            )
    shared_persons = set(train_data.persons.values()) & set(test_data.persons.values())
    if shared_persons:
        flags.append(f"person_overlap_{len(shared_persons)}")

    plan = shuffle_split_folds(test_data.video_ids, config.k_folds, config.seed)
    all_train = train_data.video_ids
    folds = [(f, all_train, plan.test_videos(f)) for f in range(config.k_folds)]
    return _run_grid(
        config, train_data, folds, lambda f: test_data, "cross",
        shared_flags=tuple(flags), save_dir=_save_dir(config),
    )
