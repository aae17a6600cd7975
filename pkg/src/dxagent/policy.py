"""Symptom-inquiring policy: masked action distribution and REINFORCE.

Actions are finding indices.  Findings whose status is already known (and
anything a caller chooses to exclude) are masked: they get exactly zero
probability and the softmax renormalizes over the rest.  The update ascends
mean[R * log pi(a|s) + beta * H(pi(.|s))] with one Adam step, H taken over
the masked distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ExhaustionError, UpdateError
from .net import AdamState, GradientBundle, MlpModel, adam_step, backward, forward


@dataclass(frozen=True)
class ActionDistribution:
    probs: np.ndarray
    mask: np.ndarray  # bool, True = inquirable


@dataclass(frozen=True)
class TransitionSample:
    state_before: np.ndarray
    action: int
    reward: float
    return_: float
    mask_before: np.ndarray


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax over unmasked entries; masked entries are exactly zero.

    Works on (N,) vectors and (B, N) batches; every row needs at least one
    unmasked entry.
    """
    z = np.asarray(logits, dtype=float)
    m = np.asarray(mask, dtype=bool)
    squeezed = z.ndim == 1
    if squeezed:
        z, m = z[None, :], m[None, :]
    if not m.any(axis=1).all():
        raise ExhaustionError("no inquirable finding left")
    neg = np.where(m, z, -np.inf)
    neg = neg - neg.max(axis=1, keepdims=True)
    e = np.where(m, np.exp(neg), 0.0)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs[0] if squeezed else probs


def masked_entropy(probs: np.ndarray) -> np.ndarray | float:
    """Natural-log entropy of a (possibly batched) masked distribution."""
    p = np.asarray(probs, dtype=float)
    squeezed = p.ndim == 1
    if squeezed:
        p = p[None, :]
    plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    h = -plogp.sum(axis=1)
    return float(h[0]) if squeezed else h


def action_distribution(model: MlpModel, state: np.ndarray, mask: np.ndarray) -> ActionDistribution:
    logits, _ = forward(model, state)
    return ActionDistribution(probs=masked_softmax(logits, mask), mask=np.asarray(mask, dtype=bool))


def sample_action(dist: ActionDistribution, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over the masked probabilities; one uniform consumed."""
    cdf = np.cumsum(dist.probs)
    u = rng.random() * cdf[-1]
    return int(np.searchsorted(cdf, u, side="right").clip(0, len(cdf) - 1))


def greedy_action(dist: ActionDistribution) -> int:
    return int(np.argmax(dist.probs))


def objective_and_gradients(
    model: MlpModel,
    batch: Sequence[TransitionSample],
    entropy_weight: float,
) -> tuple[float, GradientBundle, dict]:
    """Objective J = mean_i[R_i * log pi(a_i|s_i) + beta * H(pi(.|s_i))] and
    its exact ascent gradient.

    Per-sample logit gradient: R*(onehot_a - p) for the score term plus
    -beta * p * (log p + H) for the entropy term, both restricted to unmasked
    entries. Returned diagnostics carry the mean return and mean policy
    entropy of the batch.
    """
    states = np.stack([np.asarray(t.state_before, dtype=float) for t in batch])
    masks = np.stack([np.asarray(t.mask_before, dtype=bool) for t in batch])
    actions = np.array([t.action for t in batch], dtype=int)
    returns = np.array([t.return_ for t in batch], dtype=float)

    logits, cache = forward(model, states)
    probs = masked_softmax(logits, masks)
    n = len(batch)
    rows = np.arange(n)

    logp_a = np.log(np.maximum(probs[rows, actions], 1e-300))
    entropies = masked_entropy(probs)
    objective = float(np.mean(returns * logp_a + entropy_weight * entropies))

    dlogits = -probs.copy()
    dlogits[rows, actions] += 1.0
    dlogits *= returns[:, None]
    if entropy_weight != 0.0:
        logp = np.where(probs > 0.0, np.log(np.where(probs > 0.0, probs, 1.0)), 0.0)
        dlogits += entropy_weight * (-probs * (logp + entropies[:, None]))
    dlogits = np.where(masks, dlogits, 0.0) / n

    grads = backward(model, cache, dlogits)
    diagnostics = {
        "mean_return": float(np.mean(returns)),
        "policy_entropy": float(np.mean(entropies)),
    }
    return objective, grads, diagnostics


def reinforce_update(
    model: MlpModel,
    adam: AdamState,
    batch: Sequence[TransitionSample],
    lr: float,
    entropy_weight: float,
) -> dict:
    """One Adam ascent step on the REINFORCE objective; returns diagnostics."""
    if not batch:
        raise ValueError("reinforce_update requires a nonempty batch")
    if entropy_weight < 0:
        raise ValueError("entropy weight must be >= 0")
    objective, grads, diagnostics = objective_and_gradients(model, batch, entropy_weight)
    if not np.isfinite(objective):
        raise UpdateError(f"non-finite policy objective {objective}")
    adam_step(model, grads.scaled(-1.0), adam, lr)
    diagnostics["objective"] = objective
    return diagnostics
