"""Disease-diagnosing classifier: state -> disease distribution.

Prediction exposes the full distribution, its entropy (natural log) and the
argmax disease with deterministic lowest-id tie-breaking.  Training is plain
supervised cross-entropy on (state, true disease) pairs collected during
episodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UpdateError
from .net import AdamState, GradientBundle, MlpModel, adam_step, backward, forward, softmax_entropy


@dataclass(frozen=True)
class DiagnosisPrediction:
    probs: np.ndarray
    entropy: float
    top_disease: int


@dataclass(frozen=True)
class ClassifierSample:
    state: np.ndarray
    label: int


def predict(model: MlpModel, state: np.ndarray) -> DiagnosisPrediction:
    logits, _ = forward(model, state)
    probs, entropy = softmax_entropy(logits)
    return DiagnosisPrediction(probs=probs, entropy=float(entropy), top_disease=int(np.argmax(probs)))


def predict_batch(model: MlpModel, states: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized predict: returns (probs (B, M), entropies (B,), tops (B,))."""
    logits, _ = forward(model, states)
    probs, entropies = softmax_entropy(logits)
    return probs, entropies, np.argmax(probs, axis=1)


def loss_and_gradients(
    model: MlpModel, states: np.ndarray, labels: np.ndarray
) -> tuple[float, GradientBundle]:
    """Mean cross-entropy -log p(label|state) over the batch and its exact
    parameter gradient (softmax-CE logit gradient (p - onehot)/B)."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    labels = np.asarray(labels, dtype=int)
    logits, cache = forward(model, states)
    probs, _ = softmax_entropy(logits)
    batch = len(labels)
    picked = probs[np.arange(batch), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch
    return loss, backward(model, cache, dlogits)


def fit_batch(
    model: MlpModel,
    adam: AdamState,
    samples: Sequence[ClassifierSample],
    lr: float,
) -> float:
    """One Adam step on the mean cross-entropy of the batch; returns the
    pre-step loss."""
    if not samples:
        raise ValueError("fit_batch requires a nonempty batch")
    states = np.stack([np.asarray(s.state, dtype=float) for s in samples])
    labels = np.array([s.label for s in samples], dtype=int)
    loss, grads = loss_and_gradients(model, states, labels)
    if not np.isfinite(loss):
        raise UpdateError(f"non-finite classifier loss {loss}")
    adam_step(model, grads, adam, lr)
    return loss
