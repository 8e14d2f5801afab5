"""Per-instance feature attributions behind a uniform interface.

Six methods: two perturbation-based (LIME, KernelSHAP) that accept any
black-box probability function, and four gradient-based (vanilla gradient,
gradient*input, integrated gradients, SmoothGrad) that need a
differentiable model. Every instance is explained for its predicted
class: gradient methods differentiate the predicted-class logit by
default (a config switch selects the probability instead), and
perturbation methods fit the predicted-class probability.

All stochastic methods are pure functions of (model, instance, config):
the config seed fully determines the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ExplainerError
from .models import predict_label

__all__ = [
    "METHOD_IDS",
    "GRADIENT_METHODS",
    "PERTURBATION_METHODS",
    "Attribution",
    "GradientConfig",
    "IntegratedGradientsConfig",
    "SmoothGradConfig",
    "LimeConfig",
    "KernelShapConfig",
    "ConvergenceResult",
    "class_probability_fn",
    "smoothgrad_sigma",
    "explain_gradient",
    "explain_grad_times_input",
    "explain_integrated_gradients",
    "explain_smoothgrad",
    "explain_lime",
    "exact_shapley",
    "explain_kernelshap",
    "explain",
    "make_config",
    "convergence_check",
]

LIME = "lime"
KERNEL_SHAP = "kernel_shap"
GRADIENT = "gradient"
GRAD_TIMES_INPUT = "grad_times_input"
INTEGRATED_GRADIENTS = "integrated_gradients"
SMOOTH_GRAD = "smooth_grad"

METHOD_IDS = (LIME, KERNEL_SHAP, GRADIENT, GRAD_TIMES_INPUT, INTEGRATED_GRADIENTS, SMOOTH_GRAD)
GRADIENT_METHODS = (GRADIENT, GRAD_TIMES_INPUT, INTEGRATED_GRADIENTS, SMOOTH_GRAD)
PERTURBATION_METHODS = (LIME, KERNEL_SHAP)

EXACT_SHAPLEY_MAX_D = 20


@dataclass(frozen=True)
class Attribution:
    """Signed per-feature importances for one instance and one method."""

    method: str
    instance_index: int
    target_class: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ExplainerError(f"attribution values must be 1-d, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ExplainerError(f"{self.method} produced non-finite attribution values")
        if self.target_class not in (0, 1):
            raise ExplainerError(f"target_class must be 0 or 1, got {self.target_class}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GradientConfig:
    target: str = "logit"  # or "probability"


@dataclass(frozen=True)
class IntegratedGradientsConfig:
    steps: int = 1500
    baseline: np.ndarray | None = None  # None -> zero vector (standardized mean)
    target: str = "logit"

    def __post_init__(self):
        if self.steps < 1:
            raise ExplainerError(f"integration steps must be >= 1, got {self.steps}")


@dataclass(frozen=True)
class SmoothGradConfig:
    n_samples: int = 1500
    sigma: float | None = None  # None -> resolve from data via smoothgrad_sigma
    seed: int = 0
    target: str = "logit"

    def __post_init__(self):
        if self.n_samples < 1:
            raise ExplainerError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.sigma is not None and self.sigma < 0:
            raise ExplainerError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class LimeConfig:
    n_samples: int = 3000
    kernel_width: float | None = None  # None -> 0.75 * sqrt(d)
    ridge_lambda: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ExplainerError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ExplainerError("kernel_width must be positive")
        if self.ridge_lambda < 0:
            raise ExplainerError("ridge_lambda must be >= 0")


@dataclass(frozen=True)
class KernelShapConfig:
    mode: str = "exact"  # "exact" | "sampled"
    n_samples: int = 3000
    baseline: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ExplainerError(f"KernelSHAP mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.n_samples < 1:
            raise ExplainerError(f"n_samples must be >= 1, got {self.n_samples}")


_CONFIG_TYPES = {
    GRADIENT: GradientConfig,
    GRAD_TIMES_INPUT: GradientConfig,
    INTEGRATED_GRADIENTS: IntegratedGradientsConfig,
    SMOOTH_GRAD: SmoothGradConfig,
    LIME: LimeConfig,
    KERNEL_SHAP: KernelShapConfig,
}


def make_config(method: str, **overrides):
    """Default config for a method id with field overrides applied."""
    if method not in _CONFIG_TYPES:
        raise ExplainerError(f"unknown method {method!r}; valid ids: {', '.join(METHOD_IDS)}")
    try:
        return _CONFIG_TYPES[method](**overrides)
    except TypeError as e:
        raise ExplainerError(f"bad config for {method}: {e}") from e


def class_probability_fn(model, target_class: int) -> Callable[[np.ndarray], np.ndarray]:
    """Probability function for one class, suitable for LIME/KernelSHAP."""
    if target_class == 1:
        return lambda X: np.asarray(model.predict_proba(X), dtype=float)
    return lambda X: 1.0 - np.asarray(model.predict_proba(X), dtype=float)


def smoothgrad_sigma(X_train: np.ndarray, scale: float = 0.1) -> float:
    """Default SmoothGrad noise level: scale times the mean per-feature range."""
    X_train = np.asarray(X_train, dtype=float)
    ranges = X_train.max(axis=0) - X_train.min(axis=0)
    return float(scale * ranges.mean())


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ExplainerError(f"instance must be a 1-d vector, got shape {x.shape}")
    return x


def _require_gradients(model, method: str):
    if not hasattr(model, "input_gradients"):
        raise ExplainerError(
            f"{method} requires a differentiable model, but model kind "
            f"{getattr(model, 'kind', type(model).__name__)!r} only exposes predictions; "
            f"use one of: {', '.join(PERTURBATION_METHODS)}"
        )


def _predicted_class_sign(label: int) -> float:
    # class-0 attributions are the negated class-1 logit/probability gradients
    return 1.0 if label == 1 else -1.0


def explain_gradient(model, x, config: GradientConfig | None = None, instance_index: int = 0) -> Attribution:
    """Raw input gradient of the predicted-class target."""
    config = config or GradientConfig()
    _require_gradients(model, GRADIENT)
    x = _as_vector(x)
    label = predict_label(model, x)
    g = model.input_gradients(x, config.target) * _predicted_class_sign(label)
    return Attribution(GRADIENT, instance_index, label, g)


def explain_grad_times_input(model, x, config: GradientConfig | None = None, instance_index: int = 0) -> Attribution:
    """Input gradient scaled elementwise by the input."""
    config = config or GradientConfig()
    _require_gradients(model, GRAD_TIMES_INPUT)
    x = _as_vector(x)
    label = predict_label(model, x)
    g = model.input_gradients(x, config.target) * _predicted_class_sign(label)
    return Attribution(GRAD_TIMES_INPUT, instance_index, label, g * x)


def explain_integrated_gradients(
    model, x, config: IntegratedGradientsConfig | None = None, instance_index: int = 0
) -> Attribution:
    """Midpoint-rule path integral of gradients from a baseline to x.

    values_i = (x_i - x0_i) * mean_j grad_i(x0 + t_j (x - x0)) with
    t_j = (j - 0.5) / steps, which makes the attributions sum to the
    target difference between x and the baseline (completeness) up to
    integration error.
    """
    config = config or IntegratedGradientsConfig()
    _require_gradients(model, INTEGRATED_GRADIENTS)
    x = _as_vector(x)
    x0 = np.zeros_like(x) if config.baseline is None else _as_vector(config.baseline)
    if x0.shape != x.shape:
        raise ExplainerError(f"baseline length {x0.shape[0]} != instance length {x.shape[0]}")
    label = predict_label(model, x)
    ts = (np.arange(config.steps) + 0.5) / config.steps
    path = x0 + ts[:, None] * (x - x0)
    grads = model.input_gradients(path, config.target)
    values = (x - x0) * grads.mean(axis=0) * _predicted_class_sign(label)
    return Attribution(INTEGRATED_GRADIENTS, instance_index, label, values)


def explain_smoothgrad(
    model, x, config: SmoothGradConfig | None = None, instance_index: int = 0
) -> Attribution:
    """Mean input gradient under isotropic Gaussian input noise.

    sigma = 0 short-circuits to the plain gradient, exactly.
    """
    config = config or SmoothGradConfig(sigma=0.0)
    _require_gradients(model, SMOOTH_GRAD)
    if config.sigma is None:
        raise ExplainerError(
            "SmoothGrad sigma is unset; pass an explicit value or derive one "
            "from training data with smoothgrad_sigma()"
        )
    x = _as_vector(x)
    label = predict_label(model, x)
    if config.sigma == 0.0:
        g = model.input_gradients(x, config.target)
    else:
        rng = np.random.default_rng(config.seed)
        noise = rng.normal(0.0, config.sigma, size=(config.n_samples, x.shape[0]))
        g = model.input_gradients(x + noise, config.target).mean(axis=0)
    return Attribution(SMOOTH_GRAD, instance_index, label, g * _predicted_class_sign(label))


def explain_lime(
    predict_fn: Callable[[np.ndarray], np.ndarray],
    x,
    config: LimeConfig | None = None,
    instance_index: int = 0,
    target_class: int = 1,
) -> Attribution:
    """Local weighted ridge surrogate around x in standardized space.

    Perturbations are z ~ N(x, I); each is weighted by
    exp(-||z - x||^2 / width^2) and a ridge-regularized weighted least
    squares of predict_fn(z) on z (plus intercept, which is unpenalized)
    yields the coefficients used as attributions.
    """
    config = config or LimeConfig()
    x = _as_vector(x)
    d = x.shape[0]
    if config.n_samples < d + 2:
        raise ExplainerError(f"LIME needs at least d+2={d + 2} samples, got {config.n_samples}")
    width = config.kernel_width if config.kernel_width is not None else 0.75 * math.sqrt(d)
    rng = np.random.default_rng(config.seed)
    Z = x + rng.standard_normal((config.n_samples, d))
    y = np.asarray(predict_fn(Z), dtype=float)
    if y.shape != (config.n_samples,):
        raise ExplainerError(f"predict_fn must return ({config.n_samples},) values, got {y.shape}")
    wts = np.exp(-((Z - x) ** 2).sum(axis=1) / width**2)
    A = np.column_stack([Z, np.ones(config.n_samples)])
    G = A.T @ (A * wts[:, None])
    G[np.arange(d), np.arange(d)] += config.ridge_lambda
    rhs = A.T @ (wts * y)
    try:
        beta = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as e:
        raise ExplainerError(f"degenerate LIME sampling: weighted system is singular ({e})") from e
    if not np.isfinite(beta).all():
        raise ExplainerError("degenerate LIME sampling: non-finite surrogate coefficients")
    return Attribution(LIME, instance_index, target_class, beta[:d])


def _coalition_masks(d: int) -> np.ndarray:
    """All 2^d on/off vectors; row index read as a big-endian bit mask."""
    idx = np.arange(2**d, dtype=np.int64)
    shifts = np.arange(d - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)


def exact_shapley(
    predict_fn: Callable[[np.ndarray], np.ndarray],
    x,
    baseline,
    instance_index: int = 0,
    target_class: int = 1,
) -> Attribution:
    """Shapley values by full coalition enumeration (d <= 20).

    Absent features are replaced by the baseline value (single-reference
    masking); phi_i averages the marginal contribution of feature i over
    all subsets with the exact combinatorial weights, so the attributions
    sum to predict_fn(x) - predict_fn(baseline).
    """
    x = _as_vector(x)
    x0 = _as_vector(baseline)
    d = x.shape[0]
    if x0.shape != x.shape:
        raise ExplainerError(f"baseline length {x0.shape[0]} != instance length {d}")
    if d > EXACT_SHAPLEY_MAX_D:
        raise ExplainerError(
            f"exact Shapley enumeration is capped at d <= {EXACT_SHAPLEY_MAX_D}, got d = {d}"
        )
    masks = _coalition_masks(d)
    vals = np.asarray(predict_fn(np.where(masks, x, x0)), dtype=float)
    sizes = masks.sum(axis=1)
    fact = [math.factorial(s) for s in range(d + 1)]
    weights = np.array([fact[s] * fact[d - 1 - s] / fact[d] for s in range(d)])
    idx = np.arange(2**d)
    phi = np.empty(d)
    for j in range(d):
        bit = 1 << (d - 1 - j)
        without = idx[(idx & bit) == 0]
        phi[j] = np.sum(weights[sizes[without]] * (vals[without + bit] - vals[without]))
    return Attribution(KERNEL_SHAP, instance_index, target_class, phi)


def _sampled_coalitions(
    d: int, n_samples: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Non-trivial coalition masks plus regression weights.

    When the budget covers the whole space, enumerate every non-trivial
    coalition with its exact Shapley-kernel weight; otherwise sample
    coalition sizes proportional to the kernel mass per size and weight
    each distinct coalition by its draw count.
    """
    total = 2**d - 2
    if n_samples >= total:
        masks = _coalition_masks(d)[1:-1]
        sizes = masks.sum(axis=1)
        weights = (d - 1) / (
            np.array([math.comb(d, s) for s in sizes]) * sizes * (d - sizes)
        )
        return masks, weights
    size_mass = np.array([(d - 1) / (s * (d - s)) for s in range(1, d)])
    size_mass /= size_mass.sum()
    counts: dict[tuple[int, ...], int] = {}
    for _ in range(n_samples):
        s = int(rng.choice(np.arange(1, d), p=size_mass))
        members = rng.choice(d, size=s, replace=False)
        key = tuple(sorted(int(m) for m in members))
        counts[key] = counts.get(key, 0) + 1
    masks = np.zeros((len(counts), d), dtype=bool)
    weights = np.empty(len(counts))
    for row, (key, cnt) in enumerate(counts.items()):
        masks[row, list(key)] = True
        weights[row] = cnt
    return masks, weights


def explain_kernelshap(
    predict_fn: Callable[[np.ndarray], np.ndarray],
    x,
    config: KernelShapConfig | None = None,
    instance_index: int = 0,
    target_class: int = 1,
) -> Attribution:
    """KernelSHAP: exact enumeration or kernel-weighted least squares.

    Exact mode delegates to exact_shapley. Sampled mode solves the
    Shapley-kernel weighted regression over sampled coalitions with the
    efficiency constraint (attributions sum to f(x) - f(baseline))
    enforced by variable elimination; a budget covering the entire
    coalition space therefore reproduces exact Shapley values.
    """
    config = config or KernelShapConfig()
    x = _as_vector(x)
    d = x.shape[0]
    x0 = np.zeros_like(x) if config.baseline is None else _as_vector(config.baseline)
    if x0.shape != x.shape:
        raise ExplainerError(f"baseline length {x0.shape[0]} != instance length {d}")
    if config.mode == "exact":
        attr = exact_shapley(predict_fn, x, x0, instance_index, target_class)
        return attr
    f0 = float(np.asarray(predict_fn(x0[None, :]), dtype=float)[0])
    f1 = float(np.asarray(predict_fn(x[None, :]), dtype=float)[0])
    delta = f1 - f0
    if d == 1:
        return Attribution(KERNEL_SHAP, instance_index, target_class, np.array([delta]))
    rng = np.random.default_rng(config.seed)
    masks, weights = _sampled_coalitions(d, config.n_samples, rng)
    vals = np.asarray(predict_fn(np.where(masks, x, x0)), dtype=float)
    y = vals - f0
    Z = masks.astype(float)
    # eliminate the last coefficient to pin sum(phi) = delta
    B = Z[:, :-1] - Z[:, -1:]
    t = y - Z[:, -1] * delta
    sw = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(B * sw[:, None], t * sw, rcond=None)
    phi = np.append(coef, delta - coef.sum())
    return Attribution(KERNEL_SHAP, instance_index, target_class, phi)


def explain(method: str, model, x, config=None, instance_index: int = 0) -> Attribution:
    """Uniform dispatch: explain one instance for its predicted class."""
    if method not in METHOD_IDS:
        raise ExplainerError(f"unknown method {method!r}; valid ids: {', '.join(METHOD_IDS)}")
    if method in GRADIENT_METHODS:
        _require_gradients(model, method)
        fn = {
            GRADIENT: explain_gradient,
            GRAD_TIMES_INPUT: explain_grad_times_input,
            INTEGRATED_GRADIENTS: explain_integrated_gradients,
            SMOOTH_GRAD: explain_smoothgrad,
        }[method]
        return fn(model, x, config, instance_index)
    x = _as_vector(x)
    label = predict_label(model, x)
    predict = class_probability_fn(model, label)
    if method == LIME:
        return explain_lime(predict, x, config, instance_index, target_class=label)
    return explain_kernelshap(predict, x, config, instance_index, target_class=label)


@dataclass(frozen=True)
class ConvergenceResult:
    """Chosen sample size plus the L2 distances between schedule steps."""

    sample_size: int
    distances: tuple[float, ...]
    converged: bool


def convergence_check(
    explain_at: Callable[[int], object], schedule, eps: float
) -> ConvergenceResult:
    """Pick the first sample size whose attribution moved < eps in L2.

    ``explain_at(n)`` must return the attribution (an Attribution or a
    plain vector) computed with n samples. Each schedule entry is compared
    to the previous one; if no step falls below eps the last entry is
    returned flagged as not converged.
    """
    schedule = [int(s) for s in schedule]
    if len(schedule) < 2:
        raise ExplainerError("convergence schedule needs at least 2 sample sizes")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ExplainerError(f"convergence schedule must be strictly increasing, got {schedule}")
    if not eps > 0:
        raise ExplainerError(f"eps must be positive, got {eps}")

    def vals(n: int) -> np.ndarray:
        out = explain_at(n)
        return np.asarray(getattr(out, "values", out), dtype=float)

    prev = vals(schedule[0])
    distances: list[float] = []
    for n in schedule[1:]:
        cur = vals(n)
        dist = float(np.linalg.norm(cur - prev))
        distances.append(dist)
        if dist < eps:
            return ConvergenceResult(sample_size=n, distances=tuple(distances), converged=True)
        prev = cur
    return ConvergenceResult(sample_size=schedule[-1], distances=tuple(distances), converged=False)
