import json

import numpy as np
import pytest

from mpnet.errors import DegenerateLabelsError, ModelKindError, NumericalError, ShapeError
from mpnet.learners import (
    MODEL_KINDS,
    TrainedModel,
    load_model,
    save_model,
    train,
)
from mpnet.learners.mlp import MLP

RNG = np.random.default_rng(42)
X_REG = RNG.normal(size=(120, 5))
Y_REG = 2.0 * X_REG[:, 0] - X_REG[:, 1] ** 2 + 0.05 * RNG.normal(size=120)
Y_CLS = (
    (X_REG[:, 0] + X_REG[:, 1] > 0).astype(int)
    + 2 * (X_REG[:, 2] > 0.4).astype(int)
)

REGRESSION_KINDS = ["ridge", "lasso", "decision_tree", "random_forest", "gradient_boosting", "mlp", "gpr"]
CLASSIFICATION_KINDS = ["logistic", "decision_tree", "random_forest", "gradient_boosting", "mlp"]
FAST_HP = {
    "random_forest": {"n_estimators": 15},
    "gradient_boosting": {"n_estimators": 30},
    "mlp": {"hidden": (16, 16, 16), "max_iter": 600},
}


def hp_for(kind):
    return FAST_HP.get(kind)


class TestTaskCompatibility:
    def test_regression_only_kinds_reject_classification(self):
        for kind in ("ridge", "lasso", "gpr"):
            with pytest.raises(ModelKindError):
                train(kind, X_REG, Y_CLS, task="classification")

    def test_logistic_rejects_regression(self):
        with pytest.raises(ModelKindError):
            train("logistic", X_REG, Y_REG, task="regression")

    def test_unknown_kind(self):
        with pytest.raises(ModelKindError):
            train("xgboost", X_REG, Y_REG)


class TestSinglePointInterpolation:
    @pytest.mark.parametrize("kind", REGRESSION_KINDS)
    def test_single_training_point(self, kind):
        x = np.array([[0.3, -1.2, 0.5]])
        y = np.array([137.5])
        model = train(kind, x, y, hp_for(kind), seed=0)
        # gradient-descent kinds converge to, not exactly onto, the point
        tol = 1e-3 if kind == "mlp" else 1e-9
        assert model.predict(x)[0] == pytest.approx(137.5, rel=tol)


class TestRidge:
    def test_large_lambda_predicts_training_mean(self):
        model = train("ridge", X_REG, Y_REG, {"lam": 1e12})
        assert np.abs(model.model.coef_).max() < 1e-9
        assert model.predict(X_REG) == pytest.approx(np.full(len(Y_REG), Y_REG.mean()), rel=1e-6)

    def test_normal_equations_residual(self):
        x = (X_REG - X_REG.mean(axis=0)) / X_REG.std(axis=0)
        lam = 0.37
        model = train("ridge", x, Y_REG, {"lam": lam})
        beta = model.model.coef_
        resid = (x.T @ x + lam * np.eye(5)) @ beta - x.T @ (Y_REG - Y_REG.mean())
        assert np.abs(resid).max() < 1e-8

    def test_collinear_lambda_zero_raises(self):
        x = np.column_stack([X_REG[:, 0], X_REG[:, 0], X_REG[:, 1]])
        with pytest.raises(NumericalError):
            train("ridge", x, Y_REG, {"lam": 0.0})

    def test_exact_fit_on_linear_data(self):
        y = X_REG @ np.array([1.0, -2.0, 0.5, 0.0, 3.0]) + 4.0
        model = train("ridge", X_REG, y, {"lam": 1e-10})
        assert model.predict(X_REG) == pytest.approx(y, abs=1e-6)


class TestLasso:
    def test_kills_irrelevant_feature(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(300, 3))
        y = 3.0 * x[:, 0] + 0.01 * rng.normal(size=300)
        model = train("lasso", x, y, {"lam": 0.05})
        coef = model.model.coef_
        assert abs(coef[0]) > 1.0
        assert abs(coef[1]) < 1e-6 and abs(coef[2]) < 1e-6

    def test_zero_penalty_matches_least_squares(self):
        y = X_REG @ np.array([1.0, -2.0, 0.5, 0.0, 3.0]) + 4.0
        model = train("lasso", X_REG, y, {"lam": 0.0})
        assert model.predict(X_REG) == pytest.approx(y, abs=1e-6)


class TestLogistic:
    def test_separable_two_class_data_fits_perfectly(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(80, 2))
        y = (x[:, 0] + x[:, 1] > 0).astype(int)
        model = train("logistic", x, y, {"C": 1e4, "lr": 1.0, "max_iter": 3000})
        assert np.mean(model.predict(x) == y) == 1.0

    def test_degenerate_single_class(self):
        with pytest.raises(DegenerateLabelsError):
            train("logistic", X_REG, np.zeros(len(X_REG), dtype=int))

    def test_out_of_range_class_ids(self):
        with pytest.raises(ValueError):
            train("logistic", X_REG, np.array([0, 5] * 60))


class TestTrees:
    def test_unlimited_tree_shatters_consistent_data(self):
        model = train("decision_tree", X_REG, Y_CLS, task="classification")
        assert np.mean(model.predict(X_REG) == Y_CLS) == 1.0

    def test_regression_tree_interpolates(self):
        model = train("decision_tree", X_REG, Y_REG)
        assert model.predict(X_REG) == pytest.approx(Y_REG, rel=1e-12)

    def test_monotone_transform_invariance(self):
        # axis-aligned splits depend only on value order; apply exp to one
        # column at train and predict time
        x2 = X_REG.copy()
        x2[:, 2] = np.exp(x2[:, 2])
        for kind in ("decision_tree", "gradient_boosting"):
            a = train(kind, X_REG, Y_REG, hp_for(kind), seed=3)
            b = train(kind, x2, Y_REG, hp_for(kind), seed=3)
            # these kinds train every tree on all rows: predictions at the
            # training points are exactly invariant
            assert np.array_equal(a.predict(X_REG), b.predict(x2))
        # forest trees see bootstrap subsamples, so out-of-bag points may fall
        # differently between thresholds; the split structure is invariant
        a = train("random_forest", X_REG, Y_REG, {"n_estimators": 15}, seed=3)
        b = train("random_forest", x2, Y_REG, {"n_estimators": 15}, seed=3)
        for ta, tb in zip(a.model.trees_, b.model.trees_):
            assert np.array_equal(ta.feature_, tb.feature_)
            assert np.array_equal(ta.value_, tb.value_)

    def test_max_depth_zero_is_constant(self):
        model = train("decision_tree", X_REG, Y_REG, {"max_depth": 0})
        assert model.predict(X_REG) == pytest.approx(np.full(len(Y_REG), Y_REG.mean()))


class TestForest:
    def test_single_tree_pure_leaves_one_hot_proba(self):
        model = train(
            "random_forest", X_REG, Y_CLS, {"n_estimators": 1, "max_features": None},
            task="classification", seed=0,
        )
        proba = model.predict_proba(X_REG)
        assert set(np.unique(proba)) <= {0.0, 1.0}
        assert proba.sum(axis=1) == pytest.approx(np.ones(len(Y_CLS)))

    def test_proba_mean_of_tree_frequencies(self):
        model = train("random_forest", X_REG, Y_CLS, {"n_estimators": 7}, task="classification", seed=1)
        manual = np.mean([t.predict_proba(X_REG) for t in model.model.trees_], axis=0)
        assert model.predict_proba(X_REG) == pytest.approx(manual, rel=1e-15)


class TestBoosting:
    def test_training_loss_non_increasing_per_stage(self):
        model = train("gradient_boosting", X_REG, Y_REG, {"n_estimators": 60, "learning_rate": 0.2})
        losses = np.array(model.model.staged_train_loss_)
        assert np.all(np.diff(losses) <= 1e-15)

    def test_small_rate_needs_more_stages(self):
        few = train("gradient_boosting", X_REG, Y_REG, {"n_estimators": 5, "learning_rate": 0.05})
        many = train("gradient_boosting", X_REG, Y_REG, {"n_estimators": 200, "learning_rate": 0.05})
        assert many.model.staged_train_loss_[-1] < few.model.staged_train_loss_[-1]


class TestProbaContract:
    @pytest.mark.parametrize("kind", CLASSIFICATION_KINDS)
    def test_rows_on_simplex(self, kind):
        model = train(kind, X_REG, Y_CLS, hp_for(kind), task="classification", seed=2)
        proba = model.predict_proba(X_REG)
        assert proba.shape == (len(Y_CLS), 4)
        assert np.all(proba >= 0)
        assert proba.sum(axis=1) == pytest.approx(np.ones(len(Y_CLS)), abs=1e-9)

    @pytest.mark.parametrize("kind", CLASSIFICATION_KINDS)
    def test_predict_is_argmax_lowest_index(self, kind):
        model = train(kind, X_REG, Y_CLS, hp_for(kind), task="classification", seed=2)
        proba = model.predict_proba(X_REG)
        assert np.array_equal(model.predict(X_REG), np.argmax(proba, axis=1))

    def test_absent_class_has_zero_probability(self):
        y = (X_REG[:, 0] > 0).astype(int)  # classes {0, 1} only
        model = train("random_forest", X_REG, y, {"n_estimators": 5}, task="classification")
        proba = model.predict_proba(X_REG)
        assert np.all(proba[:, 2:] == 0.0)


class TestGPR:
    def test_noiseless_interpolation(self):
        x = RNG.normal(size=(40, 3))
        y = np.sin(x[:, 0]) + x[:, 1]
        model = train("gpr", x, y, {"noise": 0.0, "length_scale": 1.5})
        assert np.abs(model.predict(x) - y).max() < 1e-6

    def test_posterior_std_smaller_at_training_points(self):
        x = RNG.normal(size=(30, 2))
        y = x[:, 0] ** 2
        model = train("gpr", x, y, {"noise": 1e-8})
        at_train = model.model.predict_std(x)
        away = model.model.predict_std(x + 5.0)
        assert at_train.mean() < away.mean()


def relu_margins_ok(net, x, h=1e-5):
    """True when no hidden pre-activation sits within FD reach of the kink."""
    acts = [np.asarray(x, dtype=float)]
    for i, (w, b) in enumerate(zip(net.weights_, net.biases_)):
        z = acts[-1] @ w + b
        if i < len(net.weights_) - 1:
            if np.abs(z).min() < 100 * h:
                return False
            acts.append(np.maximum(z, 0.0))
        else:
            acts.append(z)
    return True


def central_differences(net, x, y, h=1e-5):
    flat = net.flat_params()
    fd = np.zeros_like(flat)
    for i in range(len(flat)):
        up, dn = flat.copy(), flat.copy()
        up[i] += h
        dn[i] -= h
        net.set_flat_params(up)
        f_up = net.loss(x, y)
        net.set_flat_params(dn)
        f_dn = net.loss(x, y)
        fd[i] = (f_up - f_dn) / (2 * h)
        net.set_flat_params(flat)
    return fd


class TestMLPGradient:
    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(0)
        checked = 0
        while checked < 5:
            net = MLP(task="regression", hidden=(4, 3), alpha=1e-3)
            x = rng.normal(size=(6, 2))
            y = rng.normal(size=6)
            net.init_params(2, 1, rng)
            if not relu_margins_ok(net, x):
                continue  # FD would cross a ReLU kink; resample
            analytic = net.loss_gradient(x, y)
            fd = central_differences(net, x, y)
            denom = max(np.linalg.norm(analytic), np.linalg.norm(fd), 1e-12)
            assert np.linalg.norm(analytic - fd) / denom < 1e-5
            checked += 1

    def test_penalty_gradient_is_two_alpha_w(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(5, 3))
        y = rng.normal(size=5)
        base = MLP(task="regression", hidden=(4,), alpha=0.0)
        base.init_params(3, 1, rng)
        pen = MLP(task="regression", hidden=(4,), alpha=0.25)
        pen.weights_ = [w.copy() for w in base.weights_]
        pen.biases_ = [b.copy() for b in base.biases_]
        g0 = base.loss_gradient(x, y)
        g1 = pen.loss_gradient(x, y)
        expected = np.concatenate(
            [2 * 0.25 * w.ravel() for w in base.weights_]
            + [np.zeros(b.size) for b in base.biases_]
        )
        assert g1 - g0 == pytest.approx(expected, abs=1e-12)

    def test_zero_weights_zero_targets_zero_penalty_gradient(self):
        net = MLP(task="regression", hidden=(3,), alpha=0.5)
        net.init_params(2, 1, np.random.default_rng(0))
        net.set_flat_params(np.zeros_like(net.flat_params()))
        grad = net.loss_gradient(np.zeros((4, 2)), np.zeros(4))
        assert np.all(grad == 0.0)

    def test_classification_gradient_matches_fd(self):
        rng = np.random.default_rng(2)
        checked = 0
        while checked < 3:
            net = MLP(task="classification", hidden=(5,), alpha=1e-4, n_classes=3)
            net.present_classes_ = [0, 1, 2]
            x = rng.normal(size=(8, 2))
            y = rng.integers(0, 3, 8)
            net.init_params(2, 3, rng)
            if not relu_margins_ok(net, x):
                continue
            analytic = net.loss_gradient(x, y)
            fd = central_differences(net, x, y)
            denom = max(np.linalg.norm(analytic), np.linalg.norm(fd), 1e-12)
            assert np.linalg.norm(analytic - fd) / denom < 1e-5
            checked += 1


class TestDeterminismAndSerialization:
    @pytest.mark.parametrize("kind", REGRESSION_KINDS)
    def test_same_seed_bit_identical_regression(self, kind):
        a = train(kind, X_REG, Y_REG, hp_for(kind), seed=11)
        b = train(kind, X_REG, Y_REG, hp_for(kind), seed=11)
        assert np.array_equal(a.predict(X_REG), b.predict(X_REG))

    @pytest.mark.parametrize("kind", CLASSIFICATION_KINDS)
    def test_same_seed_bit_identical_classification(self, kind):
        a = train(kind, X_REG, Y_CLS, hp_for(kind), task="classification", seed=11)
        b = train(kind, X_REG, Y_CLS, hp_for(kind), task="classification", seed=11)
        assert np.array_equal(a.predict_proba(X_REG), b.predict_proba(X_REG))

    @pytest.mark.parametrize("kind", REGRESSION_KINDS)
    def test_save_load_round_trip_regression(self, kind, tmp_path):
        model = train(kind, X_REG, Y_REG, hp_for(kind), seed=4, columns=[f"c{i}" for i in range(5)])
        path = tmp_path / f"{kind}.json"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(model.predict(X_REG), loaded.predict(X_REG))
        assert loaded.kind == kind and loaded.columns == model.columns

    @pytest.mark.parametrize("kind", CLASSIFICATION_KINDS)
    def test_save_load_round_trip_classification(self, kind, tmp_path):
        model = train(kind, X_REG, Y_CLS, hp_for(kind), task="classification", seed=4)
        path = tmp_path / f"{kind}.json"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(model.predict_proba(X_REG), loaded.predict_proba(X_REG))

    def test_model_document_is_versioned_json(self, tmp_path):
        model = train("ridge", X_REG, Y_REG)
        path = tmp_path / "m.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        assert doc["format"] == "mpnet-model/1"
        assert doc["kind"] == "ridge"


class TestColumnChecks:
    def test_mismatched_columns_rejected(self):
        model = train("ridge", X_REG, Y_REG, columns=["a", "b", "c", "d", "e"])
        with pytest.raises(ShapeError):
            model.predict(X_REG, columns=["a", "b", "c", "e", "d"])
        with pytest.raises(ShapeError):
            model.predict(X_REG[:, :4])

    def test_proba_on_regressor_rejected(self):
        model = train("ridge", X_REG, Y_REG)
        with pytest.raises(ModelKindError):
            model.predict_proba(X_REG)
