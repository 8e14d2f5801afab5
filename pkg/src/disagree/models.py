"""Differentiable tabular classifiers with exact input gradients.

Two model classes are trained here: a logistic-regression model and a
ReLU feed-forward network with a single sigmoid logit head. Training is
plain mini-batch gradient descent with a fixed learning rate, so a fixed
seed reproduces parameters bit for bit. Both classes expose logits,
class-1 probabilities, and reverse-mode gradients of the logit (or
probability) with respect to the input.

``PredictOnlyModel`` wraps an arbitrary probability function so externally
trained models (e.g. tree ensembles) can be plugged into the perturbation
explainers; gradient-based explainers reject it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .data import Dataset, Standardizer
from .errors import ModelError

__all__ = [
    "TrainConfig",
    "LinearModel",
    "MlpModel",
    "PredictOnlyModel",
    "SavedModel",
    "sigmoid",
    "train_logistic",
    "train_mlp",
    "predict_proba",
    "predict_label",
    "input_gradient",
    "accuracy",
    "save_model",
    "load_model",
]

GRADIENT_TARGETS = ("logit", "probability")


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for mini-batch gradient descent."""

    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 64
    l2_penalty: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ModelError(f"learning_rate must be positive, got {self.learning_rate}")
        # epochs == 0 is allowed: training becomes a no-op and returns the
        # freshly initialized model.
        if self.epochs < 0:
            raise ModelError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ModelError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.l2_penalty < 0:
            raise ModelError(f"l2_penalty must be >= 0, got {self.l2_penalty}")


def _check_input(X: np.ndarray, d: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise ModelError(f"expected input with {d} features, got shape {np.asarray(X).shape}")
    return X, single


class LinearModel:
    """Logistic regression: logit(x) = w . x + b."""

    kind = "logistic"

    def __init__(self, w: np.ndarray, b: float):
        self.w = np.asarray(w, dtype=float).copy()
        self.b = float(b)
        if self.w.ndim != 1:
            raise ModelError("w must be a 1-d weight vector")
        if not (np.isfinite(self.w).all() and math.isfinite(self.b)):
            raise ModelError("model parameters must be finite")

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def logits(self, X: np.ndarray) -> np.ndarray:
        X, single = _check_input(X, self.d)
        z = X @ self.w + self.b
        return z[0] if single else z

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.logits(X))

    def input_gradients(self, X: np.ndarray, target: str = "logit") -> np.ndarray:
        """Gradient of the class-1 logit (or probability) per row."""
        X, single = _check_input(X, self.d)
        grads = np.broadcast_to(self.w, X.shape).copy()
        if target == "probability":
            p = sigmoid(X @ self.w + self.b)
            grads *= (p * (1.0 - p))[:, None]
        elif target != "logit":
            raise ModelError(f"unknown gradient target {target!r}")
        return grads[0] if single else grads


class MlpModel:
    """Feed-forward ReLU network with a single sigmoid logit output."""

    kind = "mlp"

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ModelError("weights and biases must be non-empty and the same length")
        self.weights = [np.asarray(W, dtype=float).copy() for W in weights]
        self.biases = [np.asarray(b, dtype=float).copy() for b in biases]
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ModelError(f"layer {i}: weight/bias shapes {W.shape}/{b.shape} incompatible")
            if i > 0 and W.shape[0] != self.weights[i - 1].shape[1]:
                raise ModelError(f"layer {i}: input width {W.shape[0]} does not match previous layer")
        if self.weights[-1].shape[1] != 1:
            raise ModelError("output layer must produce a single logit")
        if not all(np.isfinite(W).all() for W in self.weights):
            raise ModelError("model parameters must be finite")

    @property
    def d(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden_dims(self) -> tuple[int, ...]:
        return tuple(W.shape[1] for W in self.weights[:-1])

    def _forward(self, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Returns pre-activations of the hidden layers and the logits."""
        zs = []
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ W + b
            zs.append(z)
            a = np.maximum(z, 0.0)
        logits = a @ self.weights[-1] + self.biases[-1]
        return zs, logits[:, 0]

    def logits(self, X: np.ndarray) -> np.ndarray:
        X, single = _check_input(X, self.d)
        z = self._forward(X)[1]
        return z[0] if single else z

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.logits(X))

    def input_gradients(self, X: np.ndarray, target: str = "logit") -> np.ndarray:
        """Reverse-mode gradient of the class-1 logit (or probability) per row.

        ReLU uses the subgradient 0 at exactly zero pre-activation.
        """
        X, single = _check_input(X, self.d)
        zs, logits = self._forward(X)
        g = np.broadcast_to(self.weights[-1][:, 0], (X.shape[0], self.weights[-1].shape[0])).copy()
        for W, z in zip(reversed(self.weights[:-1]), reversed(zs)):
            g *= z > 0
            g = g @ W.T
        if target == "probability":
            p = sigmoid(logits)
            g *= (p * (1.0 - p))[:, None]
        elif target != "logit":
            raise ModelError(f"unknown gradient target {target!r}")
        return g[0] if single else g


class PredictOnlyModel:
    """Black-box probability model without gradients.

    ``fn`` maps an (n, d) matrix to class-1 probabilities (n,).
    """

    kind = "predict_only"

    def __init__(self, fn, d: int):
        self.fn = fn
        self._d = int(d)

    @property
    def d(self) -> int:
        return self._d

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X, single = _check_input(X, self.d)
        p = np.asarray(self.fn(X), dtype=float)
        return p[0] if single else p


def _glorot_init(dims: list[int], rng: np.random.Generator) -> tuple[list, list]:
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        r = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _batch_loss(logits: np.ndarray, y: np.ndarray) -> float:
    # stable binary cross-entropy: log(1 + e^z) - y*z
    return float(np.sum(np.logaddexp(0.0, logits) - y * logits))


def _check_diverged(epoch_loss: float, arrays, epoch: int) -> None:
    finite = math.isfinite(epoch_loss) and all(np.isfinite(a).all() for a in arrays)
    if not finite:
        raise ModelError(
            f"training diverged: non-finite loss after epoch {epoch} "
            "(learning rate too high?)"
        )


def train_logistic(train: Dataset, cfg: TrainConfig) -> LinearModel:
    """Mini-batch gradient descent on L2-regularized cross-entropy.

    Expects standardized inputs. Parameters start at zero; the seed only
    drives the batch shuffling, so identical configs give identical models.
    """
    X, y = train.X, train.y.astype(float)
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(train.d)
    b = 0.0
    for epoch in range(cfg.epochs):
        order = rng.permutation(train.n)
        epoch_loss = 0.0
        for start in range(0, train.n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            Xb, yb = X[idx], y[idx]
            z = Xb @ w + b
            epoch_loss += _batch_loss(z, yb)
            err = (sigmoid(z) - yb) / idx.shape[0]
            w -= cfg.learning_rate * (Xb.T @ err + cfg.l2_penalty * w)
            b -= cfg.learning_rate * err.sum()
        _check_diverged(epoch_loss, [w], epoch)
    return LinearModel(w, b)


def train_mlp(train: Dataset, hidden: list[int], cfg: TrainConfig) -> MlpModel:
    """Train a ReLU network (hidden layer widths given) by mini-batch GD.

    Weights are initialized uniformly in [-r, r] with r = sqrt(6 / (fan_in
    + fan_out)) from the seeded generator; biases start at zero. The L2
    penalty applies to weights only.
    """
    if any(h < 1 for h in hidden):
        raise ModelError(f"hidden layer widths must be positive, got {hidden}")
    X, y = train.X, train.y.astype(float)
    rng = np.random.default_rng(cfg.seed)
    dims = [train.d] + list(hidden) + [1]
    weights, biases = _glorot_init(dims, rng)
    model = MlpModel(weights, biases)
    W, B = model.weights, model.biases
    n_layers = len(W)
    for epoch in range(cfg.epochs):
        order = rng.permutation(train.n)
        epoch_loss = 0.0
        for start in range(0, train.n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            Xb, yb = X[idx], y[idx]
            # forward with cached activations
            acts = [Xb]
            zs = []
            a = Xb
            for l in range(n_layers - 1):
                z = a @ W[l] + B[l]
                zs.append(z)
                a = np.maximum(z, 0.0)
                acts.append(a)
            logits = (a @ W[-1] + B[-1])[:, 0]
            epoch_loss += _batch_loss(logits, yb)
            # backward
            delta = ((sigmoid(logits) - yb) / idx.shape[0])[:, None]
            for l in range(n_layers - 1, -1, -1):
                gW = acts[l].T @ delta + cfg.l2_penalty * W[l]
                gB = delta.sum(axis=0)
                if l > 0:
                    delta = (delta @ W[l].T) * (zs[l - 1] > 0)
                W[l] -= cfg.learning_rate * gW
                B[l] -= cfg.learning_rate * gB
        _check_diverged(epoch_loss, W, epoch)
    return model


def predict_proba(model, x: np.ndarray) -> float | np.ndarray:
    """Class-1 probability; scalar for a single instance, array for a batch."""
    p = model.predict_proba(x)
    return float(p) if np.ndim(p) == 0 else p


def predict_label(model, x: np.ndarray) -> int | np.ndarray:
    """Threshold the probability at 0.5; an exact 0.5 resolves to class 1."""
    p = model.predict_proba(x)
    if np.ndim(p) == 0:
        return int(p >= 0.5)
    return (p >= 0.5).astype(int)


def input_gradient(model, x: np.ndarray, target: str = "logit") -> np.ndarray:
    """Gradient of the class-1 logit or probability w.r.t. the input."""
    if target not in GRADIENT_TARGETS:
        raise ModelError(f"gradient target must be one of {GRADIENT_TARGETS}, got {target!r}")
    if not hasattr(model, "input_gradients"):
        raise ModelError(
            f"model kind {getattr(model, 'kind', type(model).__name__)!r} "
            "does not expose input gradients"
        )
    return model.input_gradients(x, target)


def accuracy(model, ds: Dataset) -> float:
    """Fraction of correctly predicted labels."""
    return float(np.mean(predict_label(model, ds.X) == ds.y))


@dataclass
class SavedModel:
    """A model file's contents: the model plus its preprocessing context."""

    model: LinearModel | MlpModel
    standardizer: Standardizer | None
    train_config: dict | None


def save_model(
    path: str | Path,
    model: LinearModel | MlpModel,
    standardizer: Standardizer | None = None,
    train_config: TrainConfig | None = None,
) -> None:
    """Serialize a trained model to JSON (exact float round trip)."""
    if isinstance(model, LinearModel):
        doc = {
            "kind": model.kind,
            "layer_dims": [model.d, 1],
            "params": {"w": model.w.tolist(), "b": model.b},
        }
    elif isinstance(model, MlpModel):
        doc = {
            "kind": model.kind,
            "layer_dims": [model.d] + list(model.hidden_dims) + [1],
            "params": {
                "weights": [W.ravel().tolist() for W in model.weights],
                "biases": [b.tolist() for b in model.biases],
            },
        }
    else:
        raise ModelError(f"cannot serialize model of kind {getattr(model, 'kind', '?')!r}")
    doc["standardizer"] = (
        None
        if standardizer is None
        else {"means": standardizer.means.tolist(), "stds": standardizer.stds.tolist()}
    )
    doc["train_config"] = None if train_config is None else asdict(train_config)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> SavedModel:
    path = Path(path)
    if not path.exists():
        raise ModelError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelError(f"model file {path} is not valid JSON: {e}") from e
    kind = doc.get("kind")
    dims = doc.get("layer_dims")
    params = doc.get("params", {})
    if kind == "logistic":
        model = LinearModel(np.array(params["w"], dtype=float), params["b"])
    elif kind == "mlp":
        weights = [
            np.array(flat, dtype=float).reshape(fan_in, fan_out)
            for flat, fan_in, fan_out in zip(params["weights"], dims[:-1], dims[1:])
        ]
        biases = [np.array(b, dtype=float) for b in params["biases"]]
        model = MlpModel(weights, biases)
    else:
        raise ModelError(f"model file {path} has unknown kind {kind!r}")
    std = doc.get("standardizer")
    standardizer = (
        None
        if std is None
        else Standardizer(np.array(std["means"], dtype=float), np.array(std["stds"], dtype=float))
    )
    return SavedModel(model=model, standardizer=standardizer, train_config=doc.get("train_config"))
