"""Minimal dense MLP stack in float64 numpy.

Hand-rolled forward/backward passes with tanh-approximation GELU hidden
activations and identity outputs (logits), a numerically stable softmax with
natural-log entropy, and bias-corrected Adam.  Analytic gradients are checked
against central finite differences in the test suite; everything here is a
deterministic pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UpdateError

GELU_C = np.sqrt(2.0 / np.pi)
GELU_A = 0.044715
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _gelu_tanh(x: np.ndarray) -> np.ndarray:
    # x + GELU_A*x^3 via explicit products; the pow ufunc is far slower
    return np.tanh((GELU_C * x) * (1.0 + GELU_A * (x * x)))


def gelu(x):
    """tanh-approximation GELU: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))."""
    x = np.asarray(x, dtype=float)
    return 0.5 * x * (1.0 + _gelu_tanh(x))


def _gelu_grad_from(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """GELU derivative given precomputed t = tanh(...(x)); tanh dominates the
    cost, so backward reuses the value cached by forward."""
    sech2 = 1.0 - t * t
    return 0.5 * (1.0 + t) + (0.5 * GELU_C) * x * sech2 * (1.0 + (3.0 * GELU_A) * (x * x))


def gelu_grad(x):
    """Closed-form derivative of the tanh-approximation GELU."""
    x = np.asarray(x, dtype=float)
    return _gelu_grad_from(x, _gelu_tanh(x))


@dataclass
class MlpModel:
    """Dense MLP: weights[i] has shape (fan_in, fan_out); GELU on hidden
    layers, identity on the output layer."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def init(cls, layer_dims: list[int], rng: np.random.Generator) -> "MlpModel":
        """Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases."""
        if len(layer_dims) < 2:
            raise ValueError("need at least input and output dims")
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims, layer_dims[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(layer_dims=list(layer_dims), weights=weights, biases=biases)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class ForwardCache:
    """Per-layer values kept for backward: layer inputs, hidden
    pre-activations, and the tanh values of each hidden activation."""

    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    tanh_values: list[np.ndarray]
    squeezed: bool


@dataclass
class GradientBundle:
    """Gradients shaped exactly like the model parameters."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "GradientBundle":
        return cls(
            weights=[np.zeros_like(w) for w in model.weights],
            biases=[np.zeros_like(b) for b in model.biases],
        )

    def scaled(self, factor: float) -> "GradientBundle":
        return GradientBundle(
            weights=[factor * w for w in self.weights],
            biases=[factor * b for b in self.biases],
        )

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.weights + self.biases)


def forward(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run the MLP on a single state (in_dim,) or a batch (B, in_dim).

    Returns logits with the same leading shape plus the cache backward needs.
    """
    x = np.asarray(x, dtype=float)
    squeezed = x.ndim == 1
    if squeezed:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise DimensionError(f"input shape {x.shape} does not match input dim {model.input_dim}")
    inputs, pre_acts, tanhs = [], [], []
    a = x
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(a)
        z = a @ w + b
        if i < model.n_layers - 1:
            t = _gelu_tanh(z)
            pre_acts.append(z)
            tanhs.append(t)
            a = 0.5 * z * (1.0 + t)
        else:
            a = z
    logits = a[0] if squeezed else a
    return logits, ForwardCache(inputs=inputs, pre_activations=pre_acts, tanh_values=tanhs, squeezed=squeezed)


def backward(model: MlpModel, cache: ForwardCache, loss_grad_at_logits: np.ndarray) -> GradientBundle:
    """Backpropagate d(loss)/d(logits) through the cached forward pass.

    For batched caches the result sums per-sample gradients, i.e. it is the
    exact gradient of sum_b loss_b when loss_grad_at_logits[b] holds each
    sample's logit gradient; callers wanting a mean pass gradients already
    divided by the batch size.
    """
    g = np.asarray(loss_grad_at_logits, dtype=float)
    if cache.squeezed:
        g = g[None, :]
    if g.shape != (cache.inputs[0].shape[0], model.output_dim):
        raise DimensionError(
            f"logit-gradient shape {loss_grad_at_logits.shape} does not match "
            f"batch {cache.inputs[0].shape[0]} x output dim {model.output_dim}"
        )
    grads = GradientBundle.zeros_like(model)
    delta = g
    for i in reversed(range(model.n_layers)):
        grads.weights[i][...] = cache.inputs[i].T @ delta
        grads.biases[i][...] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * _gelu_grad_from(
                cache.pre_activations[i - 1], cache.tanh_values[i - 1]
            )
    return grads


def softmax_entropy(logits: np.ndarray) -> tuple[np.ndarray, float | np.ndarray]:
    """Max-subtracted softmax and its natural-log entropy (0*log 0 := 0).

    Accepts a vector or a batch; entropy is a scalar or per-row vector.
    """
    z = np.asarray(logits, dtype=float)
    squeezed = z.ndim == 1
    if squeezed:
        z = z[None, :]
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    plogp = np.where(probs > 0.0, probs * np.log(np.where(probs > 0.0, probs, 1.0)), 0.0)
    entropy = -plogp.sum(axis=1)
    if squeezed:
        return probs[0], float(entropy[0])
    return probs, entropy


@dataclass
class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    m_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]
    step: int = 0

    @classmethod
    def init(cls, model: MlpModel) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(w) for w in model.weights],
            m_biases=[np.zeros_like(b) for b in model.biases],
            v_weights=[np.zeros_like(w) for w in model.weights],
            v_biases=[np.zeros_like(b) for b in model.biases],
        )


def adam_step(model: MlpModel, grads: GradientBundle, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam descent step, applied in place.

    To ascend an objective pass the negated gradient.  Non-finite gradients
    abort with UpdateError before any parameter is touched.
    """
    if lr <= 0:
        raise ValueError("learning rate must be > 0")
    if not grads.all_finite():
        raise UpdateError("non-finite gradient; refusing to update parameters")
    state.step += 1
    t = state.step
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t
    for params, gs, ms, vs in (
        (model.weights, grads.weights, state.m_weights, state.v_weights),
        (model.biases, grads.biases, state.m_biases, state.v_biases),
    ):
        for p, g, m, v in zip(params, gs, ms, vs):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
