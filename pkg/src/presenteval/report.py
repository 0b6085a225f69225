"""Result persistence: per-fold CSV, summary CSV, and markdown tables.

All numeric text uses repr() so output bytes are a pure function of the
result values; rerunning an identical config reproduces identical files.
The markdown mirrors the familiar layout: one table per (task, scope) with
modality and fusion rows.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import EvalError
from .runner import CellResult, ResultTable

FOLDS_CSV = "results_folds.csv"
SUMMARY_CSV = "results_summary.csv"
MARKDOWN = "results.md"
VIDEO_PRED_CSV = "predictions_videos.csv"
WINDOW_PRED_CSV = "predictions_windows.csv"
CONFIG_JSON = "config.json"

_FOLD_COLUMNS = ("accuracy", "precision", "recall", "f1", "mse")
_SUMMARY_METRICS = ("accuracy", "precision", "recall", "f1", "mse")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_outputs(result: ResultTable, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / FOLDS_CSV, "w", encoding="utf-8") as fh:
        fh.write("kind,task,scope,features,family,fusion_rule,fold,"
                 + ",".join(_FOLD_COLUMNS)
                 + ",pearson_pooled,train_calls,flags,fingerprint\n")
        for row in result.rows:
            n_folds = max(len(v) for v in row.fold_metrics.values()) if row.fold_metrics else 0
            for fold in range(n_folds):
                vals = [
                    _fmt(row.fold_metrics.get(metric, [None] * n_folds)[fold])
                    for metric in _FOLD_COLUMNS
                ]
                fh.write(",".join([
                    result.kind, row.task, row.scope, row.features, row.family,
                    row.fusion_rule, str(fold), *vals,
                    _fmt(row.pooled_pearson), str(row.train_calls),
                    ";".join(row.flags), result.fingerprint,
                ]) + "\n")

    with open(out_dir / SUMMARY_CSV, "w", encoding="utf-8") as fh:
        header = ["kind", "task", "scope", "features", "family", "fusion_rule"]
        for m in _SUMMARY_METRICS:
            header += [f"{m}_mean", f"{m}_std"]
        header += ["pearson_pooled", "train_calls", "flags", "fingerprint"]
        fh.write(",".join(header) + "\n")
        for row in result.rows:
            cells = [result.kind, row.task, row.scope, row.features, row.family,
                     row.fusion_rule]
            for m in _SUMMARY_METRICS:
                cells.append(_fmt(row.summary.get(f"{m}_mean")))
                cells.append(_fmt(row.summary.get(f"{m}_std")))
            cells += [_fmt(row.pooled_pearson), str(row.train_calls),
                      ";".join(row.flags), result.fingerprint]
            fh.write(",".join(cells) + "\n")

    (out_dir / MARKDOWN).write_text(render_markdown(result), encoding="utf-8")

    with open(out_dir / VIDEO_PRED_CSV, "w", encoding="utf-8") as fh:
        fh.write("task,scope,features,family,fusion_rule,fold,video_id,"
                 "y_true_score,y_true_class,y_pred,fingerprint\n")
        for p in result.video_predictions:
            fh.write(",".join([
                p.task, p.scope, p.features, p.family, p.fusion_rule,
                str(p.fold), p.video_id, repr(p.y_true_score), p.y_true_class,
                p.y_pred, result.fingerprint,
            ]) + "\n")

    if result.window_predictions:
        with open(out_dir / WINDOW_PRED_CSV, "w", encoding="utf-8") as fh:
            fh.write("task,scope,features,family,fusion_rule,fold,video_id,"
                     "window_index,start_s,end_s,y_pred,prob_high,fingerprint\n")
            for p in result.window_predictions:
                fh.write(",".join([
                    p.task, p.scope, p.features, p.family, p.fusion_rule,
                    str(p.fold), p.video_id, str(p.window_index),
                    repr(p.start_s), repr(p.end_s), p.y_pred, _fmt(p.prob_high),
                    result.fingerprint,
                ]) + "\n")

    payload = {"fingerprint": result.fingerprint, "config": result.resolved_config}
    (out_dir / CONFIG_JSON).write_text(
        json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8"
    )
    return out_dir


def _pct(x) -> str:
    return "--" if x is None else f"{100.0 * x:.2f}"


def _num(x, digits=2) -> str:
    return "--" if x is None else f"{x:.{digits}f}"


def render_markdown(result: ResultTable) -> str:
    lines = [f"# Results ({result.kind}-dataset run)", "",
             f"Config fingerprint: `{result.fingerprint}`", ""]
    combos = sorted({(r.task, r.scope) for r in result.rows})
    for task, scope in combos:
        rows = [r for r in result.rows if r.task == task and r.scope == scope]
        lines.append(f"## {task.capitalize()}, {scope} features")
        lines.append("")
        if task == "classification":
            lines.append("| Features | Method | Accuracy | Precision | Recall | F1-score |")
            lines.append("|---|---|---|---|---|---|")
            for r in rows:
                label = r.features if not r.fusion_rule else f"fusion ({r.fusion_rule})"
                lines.append(
                    f"| {label} | {r.family.upper()} | "
                    f"{_pct(r.summary.get('accuracy_mean'))} ± {_pct(r.summary.get('accuracy_std'))} | "
                    f"{_pct(r.summary.get('precision_mean'))} | "
                    f"{_pct(r.summary.get('recall_mean'))} | "
                    f"{_pct(r.summary.get('f1_mean'))} |"
                )
        else:
            lines.append("| Features | Method | MSE | Pearson r |")
            lines.append("|---|---|---|---|")
            for r in rows:
                label = r.features if not r.fusion_rule else f"fusion ({r.fusion_rule})"
                lines.append(
                    f"| {label} | {r.family.upper()} | "
                    f"{_num(r.summary.get('mse_mean'))} ± {_num(r.summary.get('mse_std'))} | "
                    f"{_num(r.pooled_pearson)} |"
                )
        lines.append("")
    return "\n".join(lines)


def load_folds_csv(path: str | Path) -> ResultTable:
    """Rebuild a ResultTable (metrics only) from a stored per-fold CSV."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    header = lines[0].split(",")
    idx = {name: i for i, name in enumerate(header)}
    needed = ["kind", "task", "scope", "features", "family", "fusion_rule", "fold"]
    missing = [c for c in needed if c not in idx]
    if missing:
        raise EvalError(f"{path}: missing columns {missing}")

    cells: dict[tuple, dict] = {}
    kind = "same"
    fingerprint = ""
    for line in lines[1:]:
        parts = line.split(",")
        kind = parts[idx["kind"]]
        if "fingerprint" in idx:
            fingerprint = parts[idx["fingerprint"]]
        key = tuple(parts[idx[c]] for c in ("task", "scope", "features", "family", "fusion_rule"))
        cell = cells.setdefault(key, {
            "folds": {}, "pearson": None, "train_calls": 0, "flags": (),
        })
        fold = int(parts[idx["fold"]])
        for metric in _FOLD_COLUMNS:
            raw = parts[idx[metric]] if metric in idx else ""
            cell["folds"].setdefault(metric, {})[fold] = float(raw) if raw else None
        raw_r = parts[idx["pearson_pooled"]] if "pearson_pooled" in idx else ""
        cell["pearson"] = float(raw_r) if raw_r else None
        cell["train_calls"] = int(parts[idx["train_calls"]]) if "train_calls" in idx else 0
        cell["flags"] = tuple(f for f in parts[idx["flags"]].split(";") if f) \
            if "flags" in idx else ()

    rows = []
    for key, cell in cells.items():
        task, scope, features, family, fusion_rule = key
        fold_metrics = {}
        summary = {}
        for metric, per_fold in cell["folds"].items():
            ordered = [per_fold[f] for f in sorted(per_fold)]
            if all(v is None for v in ordered):
                continue
            fold_metrics[metric] = ordered
            present = [v for v in ordered if v is not None]
            summary[f"{metric}_mean"] = float(np.mean(present)) if present else None
            summary[f"{metric}_std"] = float(np.std(present)) if present else None
        rows.append(CellResult(
            task=task, scope=scope, features=features, family=family,
            fusion_rule=fusion_rule, fold_metrics=fold_metrics, summary=summary,
            pooled_pearson=cell["pearson"], flags=cell["flags"],
            train_calls=cell["train_calls"],
        ))
    rows.sort(key=lambda r: (r.task, r.scope, r.fusion_rule != "", r.features, r.fusion_rule, r.family))
    return ResultTable(kind=kind, rows=rows, fingerprint=fingerprint, resolved_config={})
