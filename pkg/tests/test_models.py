import json

import numpy as np
import pytest

from disagree import (
    Dataset,
    FeatureSchema,
    LinearModel,
    ModelError,
    PredictOnlyModel,
    TrainConfig,
    accuracy,
    input_gradient,
    load_model,
    predict_label,
    predict_proba,
    save_model,
    train_logistic,
    train_mlp,
)
from disagree.models import MlpModel, sigmoid

from conftest import random_mlp

XY_SCHEMA = FeatureSchema(("x1", "x2"), "y")


def separable_dataset(n=80, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = (X[:, 0] - X[:, 1] > 0).astype(int)
    return Dataset(XY_SCHEMA, X, y)


def xor_dataset(n=400, seed=2):
    """Noisy replication of the 4-corner XOR pattern."""
    rng = np.random.default_rng(seed)
    corners = np.array([[-1, -1], [-1, 1], [1, -1], [1, 1]], dtype=float)
    idx = rng.integers(0, 4, size=n)
    X = corners[idx] + rng.normal(0, 0.15, size=(n, 2))
    y = (corners[idx, 0] * corners[idx, 1] > 0).astype(int)
    return Dataset(XY_SCHEMA, X, y)


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert (cfg.learning_rate, cfg.epochs, cfg.batch_size) == (0.01, 200, 64)

    @pytest.mark.parametrize(
        "kwargs", [dict(learning_rate=0), dict(epochs=-1), dict(batch_size=0), dict(l2_penalty=-1e-3)]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ModelError):
            TrainConfig(**kwargs)


class TestPrediction:
    def test_hand_sigmoid(self):
        model = LinearModel(w=[1.0, -1.0], b=0.0)
        assert model.logits(np.array([2.0, 1.0])) == 1.0
        assert predict_proba(model, np.array([2.0, 1.0])) == pytest.approx(0.7310585786300049, abs=1e-15)

    def test_logit_zero_gives_half(self):
        model = LinearModel(w=[1.0, -1.0], b=0.0)
        assert predict_proba(model, np.array([1.0, 1.0])) == 0.5

    def test_tie_resolves_to_one(self):
        model = LinearModel(w=[1.0, -1.0], b=0.0)
        assert predict_label(model, np.array([1.0, 1.0])) == 1

    def test_thresholds(self):
        model = LinearModel(w=[1.0, -1.0], b=0.0)
        assert predict_label(model, np.array([2.0, 1.0])) == 1
        assert predict_label(model, np.array([1.0, 2.5])) == 0

    def test_binary_complement(self):
        model = LinearModel(w=[0.7, 0.3], b=-0.2)
        rng = np.random.default_rng(0)
        for x in rng.normal(size=(20, 2)):
            p1 = predict_proba(model, x)
            p0 = 1.0 - p1
            assert p0 + p1 == pytest.approx(1.0, abs=1e-15)

    def test_dimension_mismatch(self):
        model = LinearModel(w=[1.0, -1.0], b=0.0)
        with pytest.raises(ModelError):
            predict_proba(model, np.ones(3))


class TestInputGradient:
    def test_linear_logit_gradient_constant(self):
        model = LinearModel(w=[1.0, -1.0], b=0.0)
        rng = np.random.default_rng(1)
        for x in rng.normal(size=(10, 2)):
            np.testing.assert_array_equal(input_gradient(model, x, "logit"), [1.0, -1.0])

    def test_linear_probability_gradient_hand_value(self):
        model = LinearModel(w=[1.0, -1.0], b=0.0)
        g = input_gradient(model, np.array([2.0, 1.0]), "probability")
        p = 0.7310585786300049
        np.testing.assert_allclose(g, [p * (1 - p), -p * (1 - p)], atol=1e-12)

    def test_mlp_zero_weights_zero_input(self):
        weights = [np.zeros((3, 4)), np.zeros((4, 1))]
        biases = [np.zeros(4), np.array([0.37])]
        model = MlpModel(weights, biases)
        assert model.logits(np.zeros(3)) == 0.37

    @pytest.mark.parametrize("target", ["logit", "probability"])
    def test_matches_finite_differences(self, target):
        rng = np.random.default_rng(42)
        h = 1e-4
        for _ in range(20):
            model = random_mlp(rng, d=5)
            x = rng.normal(size=5)
            g = input_gradient(model, x, target)
            fd = np.empty(5)
            for i in range(5):
                e = np.zeros(5)
                e[i] = h
                if target == "logit":
                    fd[i] = (model.logits(x + e) - model.logits(x - e)) / (2 * h)
                else:
                    fd[i] = (model.predict_proba(x + e) - model.predict_proba(x - e)) / (2 * h)
            rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
            assert rel <= 1e-4

    def test_predict_only_model_rejected(self):
        model = PredictOnlyModel(lambda X: np.full(X.shape[0], 0.5), d=3)
        with pytest.raises(ModelError, match="input gradients"):
            input_gradient(model, np.zeros(3))

    def test_unknown_target_rejected(self):
        model = LinearModel(w=[1.0], b=0.0)
        with pytest.raises(ModelError):
            input_gradient(model, np.zeros(1), "odds")


class TestTraining:
    def test_separable_reaches_perfect_train_accuracy(self):
        ds = separable_dataset()
        model = train_logistic(ds, TrainConfig(learning_rate=0.5, epochs=300, seed=0))
        assert accuracy(model, ds) == 1.0

    def test_logistic_deterministic(self):
        ds = separable_dataset()
        cfg = TrainConfig(learning_rate=0.1, epochs=50, seed=3)
        a = train_logistic(ds, cfg)
        b = train_logistic(ds, cfg)
        assert np.array_equal(a.w, b.w) and a.b == b.b

    def test_mlp_deterministic(self):
        ds = xor_dataset()
        cfg = TrainConfig(learning_rate=0.1, epochs=20, seed=3)
        a = train_mlp(ds, [8], cfg)
        b = train_mlp(ds, [8], cfg)
        for Wa, Wb in zip(a.weights, b.weights):
            assert np.array_equal(Wa, Wb)
        preds_a = a.predict_proba(ds.X)
        preds_b = b.predict_proba(ds.X)
        assert np.array_equal(preds_a, preds_b)

    def test_xor_capacity(self):
        ds = xor_dataset()
        model = train_mlp(ds, [8], TrainConfig(learning_rate=0.2, epochs=400, seed=0))
        assert accuracy(model, ds) >= 0.95

    def test_zero_epochs_returns_initialized_model(self):
        ds = xor_dataset(n=50)
        cfg = TrainConfig(learning_rate=0.1, epochs=0, seed=9)
        model = train_mlp(ds, [4], cfg)
        # same seed, no training: weights equal the fresh Glorot draw
        rng = np.random.default_rng(9)
        r1 = np.sqrt(6.0 / (2 + 4))
        np.testing.assert_array_equal(model.weights[0], rng.uniform(-r1, r1, size=(2, 4)))
        assert np.all(model.biases[0] == 0.0)

    def test_divergence_raises(self):
        ds = separable_dataset()
        with pytest.raises(ModelError, match="diverged"), np.errstate(all="ignore"):
            train_mlp(ds, [8], TrainConfig(learning_rate=1e100, epochs=5, seed=0))

    def test_compas_logistic_accuracy(self, compas_split):
        train_std, test_std = compas_split
        model = train_logistic(train_std, TrainConfig(learning_rate=0.05, epochs=100, seed=0))
        assert accuracy(model, test_std) >= 0.80


class TestAccuracy:
    def test_all_correct(self):
        ds = Dataset(XY_SCHEMA, np.array([[1.0, 0.0], [-1.0, 0.0]]), [1, 0])
        assert accuracy(LinearModel(w=[5.0, 0.0], b=0.0), ds) == 1.0

    def test_all_wrong(self):
        ds = Dataset(XY_SCHEMA, np.array([[1.0, 0.0], [-1.0, 0.0]]), [0, 1])
        assert accuracy(LinearModel(w=[5.0, 0.0], b=0.0), ds) == 0.0


class TestSaveLoad:
    def test_linear_round_trip(self, tmp_path):
        model = LinearModel(w=[0.123456789012345, -2.5], b=0.875)
        path = tmp_path / "model.json"
        save_model(path, model, train_config=TrainConfig())
        loaded = load_model(path)
        assert np.array_equal(loaded.model.w, model.w)
        assert loaded.model.b == model.b
        assert loaded.train_config["epochs"] == 200

    def test_mlp_round_trip_bit_exact_predictions(self, tmp_path):
        rng = np.random.default_rng(0)
        model = random_mlp(rng, d=4)
        path = tmp_path / "model.json"
        save_model(path, model)
        loaded = load_model(path).model
        X = rng.normal(size=(50, 4))
        assert np.array_equal(model.logits(X), loaded.logits(X))

    def test_standardizer_round_trip(self, tmp_path, compas):
        from disagree import fit_standardizer

        std = fit_standardizer(compas)
        model = LinearModel(w=np.zeros(7), b=0.0)
        path = tmp_path / "model.json"
        save_model(path, model, standardizer=std)
        loaded = load_model(path)
        assert np.array_equal(loaded.standardizer.means, std.means)
        assert np.array_equal(loaded.standardizer.stds, std.stds)

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"kind": "forest", "layer_dims": [], "params": {}}))
        with pytest.raises(ModelError, match="unknown kind"):
            load_model(path)
