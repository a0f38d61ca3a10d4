"""Feed-forward binary classifier with hand-rolled backpropagation.

The network is a small dense net (default 15-64-32-1, ReLU hidden layers,
sigmoid output) trained with binary cross-entropy. Parameters live in a
single flat float64 vector so that clipping, noising and aggregation can
treat the model as one point in R^P. Everything here is a pure function of
its inputs; nothing is mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# Predictions are clamped into [PROB_FLOOR, 1 - PROB_FLOOR] before the log
# in the loss value; gradients use the exact sigmoid-BCE form, which stays
# finite everywhere (see bce_loss).
PROB_FLOOR = 1e-7

DEFAULT_WIDTHS = (15, 64, 32, 1)
DEFAULT_ACTIVATIONS = ("relu", "relu", "sigmoid")

_VALID_ACTIVATIONS = frozenset({"relu", "sigmoid"})


@dataclass(frozen=True)
class ModelArchitecture:
    """Layer widths plus per-layer activation tags."""

    layer_widths: tuple[int, ...] = DEFAULT_WIDTHS
    activations: tuple[str, ...] = DEFAULT_ACTIVATIONS

    def __post_init__(self) -> None:
        widths = tuple(int(w) for w in self.layer_widths)
        acts = tuple(self.activations)
        object.__setattr__(self, "layer_widths", widths)
        object.__setattr__(self, "activations", acts)
        if len(widths) < 2:
            raise ValueError("architecture needs at least input and output widths")
        if any(w < 1 for w in widths):
            raise ValueError("layer widths must be positive")
        if len(acts) != len(widths) - 1:
            raise ValueError("need one activation per weight layer")
        unknown = set(acts) - _VALID_ACTIVATIONS
        if unknown:
            raise ValueError(f"unknown activations: {sorted(unknown)}")
        if widths[-1] != 1 or acts[-1] != "sigmoid":
            raise ValueError("output layer must be a single sigmoid unit")

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def layer_shapes(self) -> tuple[tuple[int, int, int], ...]:
        """Per-layer (rows, cols, bias length) of the dense weight blocks."""
        widths = self.layer_widths
        return tuple(
            (widths[i], widths[i + 1], widths[i + 1]) for i in range(len(widths) - 1)
        )


def param_count(arch: ModelArchitecture) -> int:
    """Total number of trainable parameters: sum of in*out + out per layer."""
    return sum(rows * cols + bias for rows, cols, bias in arch.layer_shapes)


def layer_param_counts(arch: ModelArchitecture) -> tuple[int, ...]:
    return tuple(rows * cols + bias for rows, cols, bias in arch.layer_shapes)


@dataclass
class ModelParams:
    """All network weights as one flat float64 vector.

    The layout is, layer by layer, the row-major weight matrix followed by
    the bias vector. Shape metadata comes from the attached architecture.
    """

    weights: np.ndarray
    arch: ModelArchitecture

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        self.weights = w
        expected = param_count(self.arch)
        if w.shape[0] != expected:
            raise ValueError(
                f"weight vector has {w.shape[0]} entries, architecture needs {expected}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weight vector contains non-finite entries")

    @property
    def shapes(self) -> tuple[tuple[int, int, int], ...]:
        return self.arch.layer_shapes

    def unpack(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Views of the flat vector as per-layer (weight matrix, bias)."""
        out = []
        offset = 0
        for rows, cols, bias in self.arch.layer_shapes:
            w = self.weights[offset : offset + rows * cols].reshape(rows, cols)
            offset += rows * cols
            b = self.weights[offset : offset + bias]
            offset += bias
            out.append((w, b))
        return out

    def with_weights(self, weights: np.ndarray) -> "ModelParams":
        return ModelParams(weights=weights, arch=self.arch)


@dataclass
class AdamState:
    """Adam moment estimates for one flat parameter vector."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.001
    batch_size: int = 32
    local_epochs: int = 5

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.local_epochs < 1:
            raise ValueError("local_epochs must be at least 1")


def init_model(arch: ModelArchitecture, seed: int) -> ModelParams:
    """Seeded initialization: weights uniform in +-sqrt(6/fan_in), biases zero."""
    rng = np.random.default_rng(seed)
    chunks = []
    for rows, cols, bias in arch.layer_shapes:
        limit = np.sqrt(6.0 / rows)
        chunks.append(rng.uniform(-limit, limit, size=rows * cols))
        chunks.append(np.zeros(bias))
    return ModelParams(weights=np.concatenate(chunks), arch=arch)


def init_adam_state(
    arch: ModelArchitecture,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps_hat: float = 1e-8,
) -> AdamState:
    n = param_count(arch)
    return AdamState(
        first_moment=np.zeros(n),
        second_moment=np.zeros(n),
        step_count=0,
        beta1=beta1,
        beta2=beta2,
        eps_hat=eps_hat,
    )


def _forward_trace(
    params: ModelParams, features: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Forward pass keeping pre- and post-activation values for backprop."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != params.arch.input_width:
        raise ValueError(
            f"feature width {x.shape[1]} does not match input layer "
            f"{params.arch.input_width}"
        )
    layers = params.unpack()
    acts = params.arch.activations
    pre: list[np.ndarray] = []
    post: list[np.ndarray] = [x]
    h = x
    for (w, b), act in zip(layers, acts):
        z = h @ w + b
        pre.append(z)
        if act == "relu":
            h = np.maximum(z, 0.0)
        else:
            h = 1.0 / (1.0 + np.exp(-z))
        post.append(h)
    return h[:, 0], pre, post


def forward(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Predicted probabilities for a batch, one value per row, each in (0, 1)."""
    probs, _, _ = _forward_trace(params, features)
    return probs


def bce_loss(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy, with predictions clamped away from {0, 1}.

    The clamp only guards the reported value against infinite logs; gradient
    computation elsewhere uses the exact sigmoid-composite form.
    """
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if p.shape[0] != y.shape[0]:
        raise ValueError(f"{p.shape[0]} predictions vs {y.shape[0]} labels")
    p = np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def per_sample_gradients(
    params: ModelParams, features: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    """Gradient of each sample's own BCE loss w.r.t. the flat weights.

    Returns a |B| x P matrix whose row i is the exact backpropagated gradient
    for sample i alone. The backward pass is written out explicitly and
    vectorized over the batch; no reduction mixes samples, so row i equals
    what a one-sample backprop would produce.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    y = np.asarray(labels, dtype=np.float64).ravel()
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"{x.shape[0]} feature rows vs {y.shape[0]} labels")

    probs, pre, post = _forward_trace(params, x)
    layers = params.unpack()
    acts = params.arch.activations
    n_layers = len(layers)
    batch = x.shape[0]

    # dL/dz at the sigmoid output is (p - y); for hidden layers propagate
    # through the ReLU mask.
    grads = [None] * n_layers
    delta = (probs - y)[:, None]
    for li in range(n_layers - 1, -1, -1):
        w, _ = layers[li]
        inp = post[li]
        g_w = np.einsum("bi,bj->bij", inp, delta)
        g_b = delta
        grads[li] = (g_w, g_b)
        if li > 0:
            delta = delta @ w.T
            if acts[li - 1] == "relu":
                delta = delta * (pre[li - 1] > 0.0)
            else:
                s = post[li]
                delta = delta * s * (1.0 - s)

    flat = np.empty((batch, param_count(params.arch)))
    offset = 0
    for g_w, g_b in grads:
        size = g_w.shape[1] * g_w.shape[2]
        flat[:, offset : offset + size] = g_w.reshape(batch, size)
        offset += size
        flat[:, offset : offset + g_b.shape[1]] = g_b
        offset += g_b.shape[1]
    return flat


def adam_step(
    params: ModelParams, state: AdamState, gradient: np.ndarray, lr: float
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    g = np.asarray(gradient, dtype=np.float64).ravel()
    if g.shape[0] != params.weights.shape[0]:
        raise ValueError(
            f"gradient length {g.shape[0]} vs parameter length {params.weights.shape[0]}"
        )
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * g
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_w = params.weights - lr * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    new_state = replace(state, first_moment=m, second_moment=v, step_count=t)
    return params.with_weights(new_w), new_state
