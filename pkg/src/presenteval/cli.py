"""Command-line entry point.

Subcommands: ``validate`` a dataset, ``synth`` a synthetic one, ``run`` the
evaluation grid, ``report`` to re-render tables from stored per-fold CSVs.
Exit codes: 0 success, 1 validation failure, 2 input error, 3 internal
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

from .config import RunConfig, config_from_dict, load_config, with_overrides
from .errors import PresentEvalError
from .ingest import load_manifest, load_ratings, validate_dataset
from .labels import CompetenceTarget, export_targets_csv, rating_matrix, icc_a_k
from .report import FOLDS_CSV, MARKDOWN, load_folds_csv, render_markdown, write_outputs
from .runner import prepare_dataset, run_cross_dataset, run_same_dataset
from .schemas import BODY_VOICE_ITEMS
from .synth import PairShift, SynthSpec, generate, generate_pair

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

OUT_ROOT_ENV = "PRESENTEVAL_OUT_ROOT"


def _out_path(raw: str | None, default_name: str) -> Path:
    root = Path(os.environ.get(OUT_ROOT_ENV, "runs"))
    return Path(raw) if raw else root / default_name


def cmd_validate(args) -> int:
    manifest = load_manifest(args.manifest)
    ratings = load_ratings(args.ratings)
    report = validate_dataset(manifest, ratings, args.confidence_threshold)
    text = report.to_text()

    icc_lines = []
    for item in BODY_VOICE_ITEMS:
        try:
            matrix = rating_matrix(ratings, item, manifest.video_ids)
            icc_lines.append(f"item {item}: ICC(A,k) = {icc_a_k(matrix):.4f}")
        except PresentEvalError as exc:
            icc_lines.append(f"item {item}: ICC unavailable ({exc})")
    text += "interrater reliability (items 10-15):\n  " + "\n  ".join(icc_lines) + "\n"

    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_synth(args) -> int:
    if args.spec:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    else:
        raw = {}
    if args.seed is not None:
        raw["seed"] = args.seed
    shift_raw = raw.pop("pair_shift", {})
    spec = SynthSpec.from_dict(raw)
    out_dir = _out_path(args.out, "synth")
    if args.pair:
        shift = PairShift(**shift_raw) if shift_raw else PairShift()
        t1, t2 = generate_pair(spec, shift, out_dir)
        sys.stdout.write(f"wrote {t1}\nwrote {t2}\n")
    else:
        manifest = generate(spec, out_dir)
        sys.stdout.write(f"wrote {manifest}\n")
    return EXIT_OK


def _build_run_config(args) -> RunConfig:
    if args.config:
        config = load_config(args.config)
    else:
        if not args.train_manifest or not args.train_ratings:
            raise PresentEvalError("run needs --config or --train-manifest/--train-ratings")
        config = config_from_dict({
            "train_manifest": args.train_manifest,
            "train_ratings": args.train_ratings,
        })
    overrides = {
        "train_manifest": args.train_manifest,
        "train_ratings": args.train_ratings,
        "test_manifest": args.test_manifest,
        "test_ratings": args.test_ratings,
        "modalities": args.modalities,
        "scopes": [args.scope] if args.scope else None,
        "tasks": [args.task] if args.task else None,
        "families": args.families,
        "fusion": args.fusion,
        "functionals": args.functionals,
        "window_s": args.window_s,
        "k_folds": args.k_folds,
        "seed": args.seed,
        "workers": args.workers,
        "save_models": True if args.save_models else None,
        "out_dir": args.out,
    }
    if args.threshold is not None:
        if args.threshold == "recompute":
            overrides["threshold_mode"] = "recompute"
        else:
            overrides["threshold_mode"] = "fixed"
            overrides["threshold_value"] = float(args.threshold)
    return with_overrides(config, **overrides)


def cmd_run(args) -> int:
    config = _build_run_config(args)
    out_dir = _out_path(config.out_dir, "latest")
    config = with_overrides(config, out_dir=str(out_dir))

    train_data = prepare_dataset(config.train_manifest, config.train_ratings, config)
    if config.cross_dataset:
        result = run_cross_dataset(config, train_data=train_data)
    else:
        result = run_same_dataset(config, train_data=train_data)
    write_outputs(result, out_dir)

    targets = [CompetenceTarget(v, train_data.scores[v], train_data.classes[v])
               for v in train_data.video_ids]
    export_targets_csv(targets, out_dir / "targets.csv", train_data.threshold)
    sys.stdout.write(f"{result.kind}-dataset results written to {out_dir} "
                     f"(fingerprint {result.fingerprint})\n")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    folds = run_dir / FOLDS_CSV
    if not folds.exists():
        raise PresentEvalError(f"no {FOLDS_CSV} under {run_dir}")
    result = load_folds_csv(folds)
    text = render_markdown(result)
    target = run_dir / (args.out or MARKDOWN)
    target.write_text(text, encoding="utf-8")
    sys.stdout.write(f"re-rendered {target}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="presenteval",
        description="Estimate presentation competence from multimodal nonverbal features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a dataset manifest + ratings")
    p.add_argument("manifest")
    p.add_argument("ratings")
    p.add_argument("--confidence-threshold", type=float, default=0.5)
    p.add_argument("--out", help="write the report to this file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", help="JSON synth-spec file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--pair", action="store_true",
                   help="generate a linked T1/T2 dataset pair")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run the evaluation grid")
    p.add_argument("--config", help="JSON run-config file")
    p.add_argument("--train-manifest")
    p.add_argument("--train-ratings")
    p.add_argument("--test-manifest")
    p.add_argument("--test-ratings")
    p.add_argument("--modalities", nargs="+")
    p.add_argument("--scope", choices=["global", "local"])
    p.add_argument("--task", choices=["classification", "regression"])
    p.add_argument("--families", nargs="+")
    p.add_argument("--fusion", nargs="*",
                   help="fusion rules (ff lf_median lf_product lf_sum); empty disables fusion rows")
    p.add_argument("--functionals", nargs="+",
                   help="per-column statistics for face/pose (mean std min max median range)")
    p.add_argument("--window-s", type=float, dest="window_s")
    p.add_argument("--k-folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threshold", help='"recompute" or a fixed numeric threshold')
    p.add_argument("--workers", type=int)
    p.add_argument("--save-models", action="store_true")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="re-render tables from stored per-fold CSVs")
    p.add_argument("run_dir")
    p.add_argument("--out", help="markdown filename (default results.md)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PresentEvalError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
