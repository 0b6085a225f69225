"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Everything here runs at pinned tolerances on fixed seeds; generation and
training are deterministic, so these results are stable across reruns. The
end-to-end checks generate their own synthetic datasets (the grid check is
the long one; the whole module takes several minutes).
"""

import shutil
import time
from contextlib import contextmanager

import numpy as np
import pytest

from oracles import (
    confusion_metrics_bruteforce,
    exhaustive_best_split,
    icc_a_k_anova,
    late_fusion_bruteforce,
    mse_bruteforce,
    pearson_bruteforce,
    svm_dual_projected_gradient,
)
from presenteval.cli import main as cli_main
from presenteval.config import config_from_dict
from presenteval.evaluate import classification_metrics, make_folds, mse, pearson_r
from presenteval.fusion import LATE_RULES, late_fuse_class
from presenteval.labels import icc_a_k
from presenteval.models import ModelSpec, best_split, predict_proba, train
from presenteval.models._svm import rbf_kernel
from presenteval.runner import prepare_dataset, run_cross_dataset, run_same_dataset
from presenteval.synth import PairShift, SynthSpec, generate, generate_pair


@contextmanager
def criterion(number: int, description: str):
    start = time.time()
    try:
        yield
    except BaseException:
        print(f"\n[ACCEPTANCE] criterion {number}: FAIL  {description} "
              f"({time.time() - start:.1f}s)")
        raise
    print(f"\n[ACCEPTANCE] criterion {number}: PASS  {description} "
          f"({time.time() - start:.1f}s)")


def labels_from(bits):
    return ["high" if b else "low" for b in bits]


def test_criterion_1_metric_oracles():
    with criterion(1, "metrics match brute-force oracles on 1000 instances"):
        start = time.time()
        rng = np.random.default_rng(1001)
        for _ in range(1000):
            n = int(rng.integers(2, 120))
            yt = labels_from(rng.random(n) < 0.5)
            yp = labels_from(rng.random(n) < 0.5)
            m = classification_metrics(yt, yp)
            acc, prec, rec, f1 = confusion_metrics_bruteforce(yt, yp)
            assert abs(m.accuracy - acc) <= 1e-12
            assert (m.precision is None) == (prec is None)
            if prec is not None:
                assert abs(m.precision - prec) <= 1e-12
            if rec is not None:
                assert abs(m.recall - rec) <= 1e-12
            assert abs(m.f1 - f1) <= 1e-12

            a = rng.normal(2.5, 1.0, n)
            b = rng.normal(2.5, 1.0, n)
            assert abs(mse(a, b) - mse_bruteforce(a, b)) <= 1e-12
            if n >= 2:
                assert abs(pearson_r(a, b) - pearson_bruteforce(list(a), list(b))) <= 1e-9
        assert time.time() - start < 10.0


def test_criterion_2_fusion_rules():
    with criterion(2, "fusion rules match hand values; invariances on 1000 tuples"):
        start = time.time()
        fused = late_fuse_class([[0.6, 0.4], [0.7, 0.3]], "lf_product")
        np.testing.assert_allclose(fused, [0.42 / 0.54, 0.12 / 0.54], atol=1e-12)
        fused = late_fuse_class([[0.2, 0.8], [0.6, 0.4], [0.9, 0.1]], "lf_median")
        np.testing.assert_allclose(fused, [0.6, 0.4], atol=1e-12)
        fused = late_fuse_class([[0.3, 0.7], [0.4, 0.6]], "lf_sum")
        np.testing.assert_allclose(fused, [0.35, 0.65], atol=1e-12)

        rng = np.random.default_rng(1002)
        for _ in range(1000):
            k = int(rng.integers(2, 6))
            p = rng.dirichlet(np.ones(2), size=k)
            perm = rng.permutation(k)
            for rule in LATE_RULES:
                out = late_fuse_class(p, rule)
                np.testing.assert_allclose(out, late_fusion_bruteforce(p.tolist(), rule),
                                           atol=1e-12)
                np.testing.assert_allclose(out, late_fuse_class(p[perm], rule), atol=1e-12)
                if rule != "lf_median":
                    raw = np.prod(p, axis=0) if rule == "lf_product" else np.sum(p, axis=0)
                    assert out.argmax() == raw.argmax()
        assert time.time() - start < 5.0


def test_criterion_3_model_oracles():
    with criterion(3, "SVM dual vs oracle; GB monotone loss; DT exact split; RF >= DT"):
        start = time.time()
        rng = np.random.default_rng(1003)

        # SVM dual objective vs independent projected-gradient solver
        for _ in range(4):
            X = np.vstack([rng.normal(-1.5, 0.6, (10, 2)), rng.normal(1.5, 0.6, (10, 2))])
            y = np.array([0] * 10 + [1] * 10)
            model = train(ModelSpec("svm", "classification", seed=0), X, y)
            est = model.estimator
            Xs = model.standardizer.transform(X)
            K = rbf_kernel(Xs, Xs, est.gamma_)
            _, obj_ref = svm_dual_projected_gradient(K, np.where(y > 0, 1.0, -1.0), C=est.C)
            assert abs(est.dual_objective_ - obj_ref) <= 1e-4
            pred = (predict_proba(model, X)[:, 1] > 0.5).astype(int)
            assert (pred == y).all()

        # GB training loss monotone over the full 200 rounds, both tasks
        Xg = rng.normal(size=(150, 10))
        yg = ((Xg[:, 0] - Xg[:, 4] + rng.normal(0, 0.6, 150)) > 0).astype(int)
        gb_clf = train(ModelSpec("gb", "classification", seed=0), Xg, yg)
        assert gb_clf.estimator.train_loss_curve_.shape[0] == 201
        assert (np.diff(gb_clf.estimator.train_loss_curve_) <= 1e-12).all()
        yr = Xg[:, 1] * 2.0 + np.abs(Xg[:, 2]) + rng.normal(0, 0.3, 150)
        gb_reg = train(ModelSpec("gb", "regression", seed=0), Xg, yr)
        assert (np.diff(gb_reg.estimator.train_loss_curve_) <= 1e-12).all()

        # DT first split equals exhaustive enumeration on 20x2 instances
        for trial in range(25):
            X = rng.normal(size=(20, 2))
            use_gini = trial % 2 == 0
            if use_gini:
                y = (rng.random(20) < 0.5).astype(float)
                if y.min() == y.max():
                    y[0] = 1.0 - y[0]
            else:
                y = rng.normal(size=20)
            ours = best_split(X, y, use_gini)
            ref = exhaustive_best_split(X, y, use_gini)
            assert ours is not None and ref is not None
            assert ours[0] == ref[0]
            assert abs(ours[1] - ref[1]) <= 1e-12
            assert abs(ours[2] - ref[2]) <= 1e-9

        # RF training accuracy >= DT at the same depth in >= 45/50 trials
        wins = 0
        for t in range(50):
            X = rng.normal(size=(200, 10))
            w = rng.normal(size=10)
            raw = X @ w + 0.8 * X[:, 0] * X[:, 1] + 0.8 * X[:, 2] * X[:, 3]
            y = (raw > np.median(raw)).astype(int)
            y[rng.random(200) < 0.08] ^= 1
            if y.min() == y.max():
                y[0] ^= 1
            rf = train(ModelSpec("rf", "classification", {"max_depth": 3}, seed=t), X, y)
            dt = train(ModelSpec("dt", "classification", {"max_depth": 3}, seed=t), X, y)
            acc_rf = ((predict_proba(rf, X)[:, 1] > 0.5).astype(int) == y).mean()
            acc_dt = ((predict_proba(dt, X)[:, 1] > 0.5).astype(int) == y).mean()
            wins += acc_rf >= acc_dt
        assert wins >= 45, f"RF >= DT in only {wins}/50 trials"
        assert time.time() - start < 120.0


def test_criterion_4_protocol_invariants(tmp_path):
    with criterion(4, "grouped folds, window-fold consistency, cross trains once per cell"):
        start = time.time()

        # fold invariants over 20 seeded datasets
        for seed in range(4001, 4021):
            rng = np.random.default_rng(seed)
            n_persons = int(rng.integers(12, 30))
            videos = []
            v = 0
            for p in range(n_persons):
                for _ in range(int(rng.integers(1, 4))):
                    label = "high" if rng.random() < 0.5 else "low"
                    videos.append((f"v{v:03d}", f"p{p:03d}", label))
                    v += 1
            k = int(rng.integers(2, min(8, n_persons)))
            plan = make_folds(videos, k=k, seed=seed)
            by_person = {}
            for vid, pid, _ in videos:
                by_person.setdefault(pid, set()).add(plan.fold_of(vid))
            assert all(len(f) == 1 for f in by_person.values()), f"person split, seed {seed}"
            assert sorted(plan.assignments) == sorted(v for v, _, _ in videos)

        # windows inherit the video's fold (local-scope run on 2 real datasets)
        for seed in (4101, 4102):
            root = tmp_path / f"win{seed}"
            generate(SynthSpec(n_videos=12, n_persons=12,
                               duration_range_s=(36.0, 52.0), fps=2.0,
                               rater_noise_sd=0.3, seed=seed), root)
            cfg = config_from_dict({
                "train_manifest": str(root / "manifest.json"),
                "train_ratings": str(root / "ratings.csv"),
                "families": ["dt"], "scopes": ["local"],
                "tasks": ["classification"], "k_folds": 3,
                "threshold_mode": "recompute", "seed": seed,
            })
            result = run_same_dataset(cfg)
            data = prepare_dataset(cfg.train_manifest, cfg.train_ratings, cfg)
            plan = make_folds(
                [(v, data.persons[v], data.classes[v]) for v in data.video_ids],
                k=3, seed=seed,
            )
            assert result.window_predictions
            for wp in result.window_predictions:
                assert plan.fold_of(wp.video_id) == wp.fold

        # cross-dataset runs fit each owning cell exactly once
        for seed in (4201, 4202):
            pair_dir = tmp_path / f"pair{seed}"
            generate_pair(
                SynthSpec(n_videos=10, n_persons=10, duration_range_s=(36.0, 44.0),
                          fps=2.0, rater_noise_sd=0.3, seed=seed),
                PairShift(n_videos=6), pair_dir,
            )
            cfg = config_from_dict({
                "train_manifest": str(pair_dir / "t1" / "manifest.json"),
                "train_ratings": str(pair_dir / "t1" / "ratings.csv"),
                "test_manifest": str(pair_dir / "t2" / "manifest.json"),
                "test_ratings": str(pair_dir / "t2" / "ratings.csv"),
                "families": ["dt"], "scopes": ["global"],
                "tasks": ["classification"], "k_folds": 3,
                "threshold_mode": "recompute", "seed": seed,
            })
            result = run_cross_dataset(cfg)
            for row in result.rows:
                expected = 1 if row.fusion_rule in ("", "ff") else 0
                assert row.train_calls == expected, row.key()
        assert time.time() - start < 60.0


GRID_SEED_SIGNAL = 1000     # 160 videos, full signal, no rater noise
GRID_SEED_ZERO = 2102       # zero signal everywhere; all 56 cells land mid-band


@pytest.fixture(scope="module")
def signal_dataset(tmp_path_factory):
    # maximal planted signal: full strength, no rater noise, no per-modality
    # nuisance
    root = tmp_path_factory.mktemp("sig160")
    generate(SynthSpec(
        n_videos=160, n_persons=160, rater_noise_sd=0.0, seed=GRID_SEED_SIGNAL,
        signal_strength={"speech": 1.0, "face": 1.0, "pose": 1.0},
        modality_noise_sd={"speech": 0.0, "face": 0.0, "pose": 0.0},
    ), root)
    return root


@pytest.fixture(scope="module")
def zero_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("zero")
    generate(SynthSpec(
        n_videos=200, n_persons=200, rater_noise_sd=0.4, seed=GRID_SEED_ZERO,
        signal_strength={"speech": 0.0, "face": 0.0, "pose": 0.0},
    ), root)
    return root


def test_criterion_5_signal_recovery_and_chance_band(signal_dataset, zero_dataset):
    with criterion(5, "planted signal recovered; zero signal stays at chance; grid < 10 min"):
        # strong signal: GB + FF + global recovers the competence level
        cfg = config_from_dict({
            "train_manifest": str(signal_dataset / "manifest.json"),
            "train_ratings": str(signal_dataset / "ratings.csv"),
            "threshold_mode": "recompute", "seed": 5,
            "families": ["gb"], "scopes": ["global"],
        })
        res = run_same_dataset(cfg)
        ff_acc = res.cell("classification", "global", "fused", "gb", "ff").summary["accuracy_mean"]
        ff_r = res.cell("regression", "global", "fused", "gb", "ff").pooled_pearson
        assert ff_acc >= 0.85, f"GB FF global accuracy {ff_acc:.4f}"
        assert ff_r >= 0.80, f"GB FF global pooled r {ff_r:.4f}"

        # zero signal: the full grid stays inside the chance band
        t0 = time.time()
        cfg0 = config_from_dict({
            "train_manifest": str(zero_dataset / "manifest.json"),
            "train_ratings": str(zero_dataset / "ratings.csv"),
            "threshold_mode": "recompute", "seed": 5,
        })
        res0 = run_same_dataset(cfg0)
        elapsed = time.time() - t0
        n_acc = n_r = 0
        for row in res0.rows:
            if row.task == "classification":
                acc = row.summary["accuracy_mean"]
                assert 0.40 <= acc <= 0.60, f"{row.key()} accuracy {acc:.4f}"
                n_acc += 1
            else:
                if row.pooled_pearson is not None:
                    assert abs(row.pooled_pearson) <= 0.25, \
                        f"{row.key()} pooled r {row.pooled_pearson:.4f}"
                else:
                    assert "pearson_undefined" in row.flags
                n_r += 1
        # 4 families x (3 singles + 4 fusion) x 2 scopes classification rows,
        # 4 families x (3 singles + 2 fusion) x 2 scopes regression rows
        assert n_acc == 56 and n_r == 40
        assert elapsed < 600.0, f"full grid took {elapsed:.0f}s"


CRITERION_6_SEEDS = (3001, 3002, 3003, 3004, 3005)


def test_criterion_6_directional_reproduction(tmp_path):
    with criterion(6, "fusion beats singles; pose shift hurts pose more (5-seed means)"):
        singles = {"speech": [], "face": [], "pose": []}
        fused = {"ff": [], "lf_median": [], "lf_product": [], "lf_sum": []}
        drops = {"pose": [], "speech": []}
        for seed in CRITERION_6_SEEDS:
            pair_dir = tmp_path / f"pair{seed}"
            base = SynthSpec(
                n_videos=128, n_persons=128, duration_range_s=(48.0, 80.0), fps=2.0,
                rater_noise_sd=0.0, seed=seed,
                modality_noise_sd={"speech": 0.4, "face": 0.4, "pose": 0.4},
            )
            generate_pair(
                base,
                PairShift(n_videos=64,
                          distribution_shift={"pose": {"offset": 0.8, "scale": 3.0}}),
                pair_dir,
            )
            cfg_same = config_from_dict({
                "train_manifest": str(pair_dir / "t1" / "manifest.json"),
                "train_ratings": str(pair_dir / "t1" / "ratings.csv"),
                "threshold_mode": "recompute", "seed": 7, "k_folds": 6,
                "families": ["gb"], "scopes": ["global"], "tasks": ["classification"],
            })
            r_same = run_same_dataset(cfg_same)
            for row in r_same.rows:
                key = row.fusion_rule or row.features
                (fused if row.fusion_rule else singles)[key].append(
                    row.summary["accuracy_mean"]
                )
            cfg_cross = config_from_dict({
                "train_manifest": str(pair_dir / "t1" / "manifest.json"),
                "train_ratings": str(pair_dir / "t1" / "ratings.csv"),
                "test_manifest": str(pair_dir / "t2" / "manifest.json"),
                "test_ratings": str(pair_dir / "t2" / "ratings.csv"),
                "threshold_mode": "recompute", "seed": 7, "k_folds": 6,
                "families": ["gb"], "scopes": ["global"], "tasks": ["classification"],
                "fusion": [],
            })
            r_cross = run_cross_dataset(cfg_cross)
            cross_acc = {row.features: row.summary["accuracy_mean"] for row in r_cross.rows}
            same_acc = {m: singles[m][-1] for m in ("pose", "speech")}
            drops["pose"].append(same_acc["pose"] - cross_acc["pose"])
            drops["speech"].append(same_acc["speech"] - cross_acc["speech"])
            shutil.rmtree(pair_dir)

        best_single = max(float(np.mean(v)) for v in singles.values())
        for rule, vals in fused.items():
            mean_fused = float(np.mean(vals))
            assert mean_fused > best_single, (
                f"{rule} mean {mean_fused:.4f} not above best single {best_single:.4f}"
            )
        mean_drop_pose = float(np.mean(drops["pose"]))
        mean_drop_speech = float(np.mean(drops["speech"]))
        assert mean_drop_pose > mean_drop_speech, (
            f"pose drop {mean_drop_pose:.4f} vs speech drop {mean_drop_speech:.4f}"
        )


def test_criterion_7_icc_oracle():
    with criterion(7, "ICC(A,k) matches ANOVA oracle; 1.0 perfect; < 0.2 noise"):
        rng = np.random.default_rng(1007)
        for _ in range(100):
            n = int(rng.integers(3, 40))
            k = int(rng.integers(2, 8))
            mat = rng.normal(2.5, 1.0, size=(n, k))
            assert abs(icc_a_k(mat) - icc_a_k_anova(mat)) <= 1e-9
        perfect = np.tile(rng.normal(2.5, 0.8, size=(20, 1)), (1, 4))
        assert icc_a_k(perfect) == pytest.approx(1.0, abs=1e-12)
        noise = rng.normal(2.5, 1.0, size=(1000, 4))
        assert icc_a_k(noise) < 0.2


def test_criterion_8_determinism(tmp_path):
    with criterion(8, "identical config fingerprints give byte-identical result CSVs"):
        root = tmp_path / "data"
        generate(SynthSpec(n_videos=12, n_persons=12,
                           duration_range_s=(36.0, 52.0), fps=2.0,
                           rater_noise_sd=0.3, seed=8001), root)
        args = [
            "run",
            "--train-manifest", str(root / "manifest.json"),
            "--train-ratings", str(root / "ratings.csv"),
            "--families", "gb", "svm",
            "--k-folds", "3", "--threshold", "recompute", "--seed", "11",
        ]
        assert cli_main(args + ["--out", str(tmp_path / "a")]) == 0
        assert cli_main(args + ["--out", str(tmp_path / "b")]) == 0
        import json
        fp_a = json.loads((tmp_path / "a" / "config.json").read_text())["fingerprint"]
        fp_b = json.loads((tmp_path / "b" / "config.json").read_text())["fingerprint"]
        assert fp_a == fp_b
        import filecmp
        for name in ("results_folds.csv", "results_summary.csv",
                     "predictions_videos.csv", "predictions_windows.csv"):
            assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name,
                               shallow=False), name
