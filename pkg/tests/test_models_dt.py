import numpy as np
import pytest

from oracles import exhaustive_best_split
from presenteval.models import ModelSpec, best_split, predict_proba, predict_value, train


class TestBestSplit:
    @pytest.mark.parametrize("seed", range(12))
    @pytest.mark.parametrize("use_gini", [True, False])
    def test_matches_exhaustive_enumeration(self, seed, use_gini):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(20, 2))
        if use_gini:
            y = (rng.random(20) < 0.5).astype(float)
            if y.min() == y.max():
                y[0] = 1.0 - y[0]
        else:
            y = rng.normal(size=20)
        ours = best_split(X, y, use_gini)
        ref = exhaustive_best_split(X, y, use_gini)
        assert (ours is None) == (ref is None)
        if ours is not None:
            j, thr, gain = ours
            jr, thr_r, gain_r = ref
            assert gain == pytest.approx(gain_r, abs=1e-9)
            assert j == jr
            assert thr == pytest.approx(thr_r, abs=1e-12)

    def test_constant_target_fits_single_leaf(self):
        X = np.random.default_rng(0).normal(size=(10, 3))
        y = np.full(10, 2.0)
        model = train(ModelSpec("dt", "regression", seed=0), X, y)
        assert model.estimator.arena_.feature.shape[0] == 1
        split = best_split(X, y, use_gini=False)
        assert split is not None and split[2] == pytest.approx(0.0, abs=1e-9)


class TestDecisionTree:
    def test_regressor_isolates_points_at_depth_4(self):
        X = np.arange(10, dtype=float)[:, None]
        y = X[:, 0].copy()
        model = train(
            ModelSpec("dt", "regression", {"max_depth": 4}, seed=0), X, y
        )
        pred = predict_value(model, X)
        assert float(np.mean((pred - y) ** 2)) < 0.05

    def test_single_split_leaf_frequencies(self):
        # 6 points, one informative feature; left leaf 2/3 class 1, right pure
        X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
        y = np.array([1, 0, 1, 0, 0, 0])
        model = train(ModelSpec("dt", "classification", {"max_depth": 1}, seed=0), X, y)
        proba = predict_proba(model, X)
        np.testing.assert_allclose(proba[:3, 1], 2.0 / 3.0)
        np.testing.assert_allclose(proba[3:, 1], 0.0)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(60, 5))
        y = (X[:, 0] + X[:, 2] > 0).astype(int)
        a = train(ModelSpec("dt", "classification", seed=0), X, y)
        b = train(ModelSpec("dt", "classification", seed=0), X, y)
        Xt = rng.normal(size=(40, 5))
        np.testing.assert_array_equal(predict_proba(a, Xt), predict_proba(b, Xt))

    def test_unlimited_depth_memorizes(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(50, 4))
        y = (rng.random(50) < 0.5).astype(int)
        if y.min() == y.max():
            y[0] ^= 1
        model = train(ModelSpec("dt", "classification", seed=0), X, y)
        pred = predict_proba(model, X)[:, 1] > 0.5
        assert (pred.astype(int) == y).all()
