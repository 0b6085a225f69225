import numpy as np

from presenteval.models import ModelSpec, predict_proba, predict_value, train


def xor_data():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    return X, y


class TestGBClassifier:
    def test_depth2_solves_xor(self):
        X, y = xor_data()
        model = train(ModelSpec("gb", "classification", {"max_depth": 2}, seed=0), X, y)
        pred = (predict_proba(model, X)[:, 1] > 0.5).astype(int)
        np.testing.assert_array_equal(pred, y)

    def test_depth1_cannot_solve_xor(self):
        X, y = xor_data()
        model = train(ModelSpec("gb", "classification", {"max_depth": 1}, seed=0), X, y)
        pred = (predict_proba(model, X)[:, 1] > 0.5).astype(int)
        assert (pred == y).mean() <= 0.5

    def test_logloss_curve_monotone_200_rounds(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(120, 8))
        y = ((X[:, 0] - 0.5 * X[:, 3] + rng.normal(0, 0.5, 120)) > 0).astype(int)
        model = train(ModelSpec("gb", "classification", seed=0), X, y)
        curve = model.estimator.train_loss_curve_
        assert curve.shape[0] == 201
        assert (np.diff(curve) <= 1e-12).all()

    def test_proba_normalized(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 3))
        y = (X[:, 0] > 0).astype(int)
        model = train(ModelSpec("gb", "classification", seed=0), X, y)
        proba = predict_proba(model, rng.normal(size=(25, 3)))
        assert (proba >= 0).all() and (proba <= 1).all()
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)


class TestGBRegressor:
    def test_constant_target(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 4))
        y = np.full(30, 2.5)
        model = train(ModelSpec("gb", "regression", seed=0), X, y)
        np.testing.assert_allclose(predict_value(model, X), 2.5, atol=1e-6)

    def test_zero_rounds_predicts_training_mean(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 4))
        y = rng.normal(2.0, 1.0, 30)
        model = train(
            ModelSpec("gb", "regression", {"n_estimators": 0}, seed=0), X, y
        )
        np.testing.assert_allclose(predict_value(model, X), y.mean(), atol=1e-12)

    def test_squared_loss_monotone(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(100, 6))
        y = X[:, 0] * 2.0 + np.sin(X[:, 1]) + rng.normal(0, 0.3, 100)
        model = train(ModelSpec("gb", "regression", seed=0), X, y)
        curve = model.estimator.train_loss_curve_
        assert (np.diff(curve) <= 1e-12).all()

    def test_fits_smooth_function(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(-2, 2, size=(200, 1))
        y = np.sin(X[:, 0] * 2)
        model = train(ModelSpec("gb", "regression", seed=0), X, y)
        pred = predict_value(model, X)
        assert float(np.mean((pred - y) ** 2)) < 0.01
