"""Per-disease adaptive entropy thresholds.

Inquiry stops when the disease-distribution entropy falls strictly below the
threshold of the currently predicted disease.  On correct diagnoses the
predicted disease's threshold moves toward the final entropy by a Polyak
average, gated so tiny differences leave it untouched.  A fixed mode (one
shared constant, never updated) supports ablations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class ThresholdMode(Enum):
    ADAPTIVE = "adaptive"
    FIXED = "fixed"


@dataclass(frozen=True)
class ThresholdInit:
    """How to seed the table: the same value everywhere, an explicit
    per-disease vector, or uniform random draws from a range."""

    kind: str = "uniform"  # uniform | per_disease | random
    value: float = 1.0
    values: tuple[float, ...] | None = None
    low: float = 0.0
    high: float = 1.0
    seed: int = 0

    def build(self, n_diseases: int) -> np.ndarray:
        if self.kind == "uniform":
            return np.full(n_diseases, float(self.value))
        if self.kind == "per_disease":
            if self.values is None or len(self.values) != n_diseases:
                raise ValueError("per_disease init needs one value per disease")
            return np.array(self.values, dtype=float)
        if self.kind == "random":
            rng = np.random.default_rng(self.seed)
            return rng.uniform(self.low, self.high, size=n_diseases)
        raise ValueError(f"unknown threshold init kind {self.kind!r}")


@dataclass
class ThresholdTable:
    values: np.ndarray
    lambda_: float = 0.99
    epsilon: float = 0.01
    mode: ThresholdMode = ThresholdMode.ADAPTIVE
    fixed_value: float = 0.0

    @classmethod
    def from_init(
        cls,
        init: ThresholdInit,
        n_diseases: int,
        lambda_: float = 0.99,
        epsilon: float = 0.01,
        mode: ThresholdMode = ThresholdMode.ADAPTIVE,
        fixed_value: float = 0.0,
    ) -> "ThresholdTable":
        if not (0.0 <= lambda_ <= 1.0):
            raise ValueError("lambda must lie in [0, 1]")
        if epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")
        return cls(values=init.build(n_diseases), lambda_=lambda_, epsilon=epsilon,
                   mode=mode, fixed_value=fixed_value)

    def copy(self) -> "ThresholdTable":
        return ThresholdTable(values=self.values.copy(), lambda_=self.lambda_,
                              epsilon=self.epsilon, mode=self.mode, fixed_value=self.fixed_value)


def should_stop(entropy: float, predicted_disease: int, table: ThresholdTable) -> bool:
    """Strict comparison: stop iff entropy < threshold of the predicted disease."""
    if table.mode is ThresholdMode.FIXED:
        return entropy < table.fixed_value
    return entropy < float(table.values[predicted_disease])


def update_threshold(table: ThresholdTable, disease: int, mean_final_entropy: float) -> bool:
    """Polyak update K_d <- lambda*K_d + (1-lambda)*H gated on
    |K_d - H| > epsilon; returns whether the update was applied."""
    if table.mode is not ThresholdMode.ADAPTIVE:
        raise ValueError("update_threshold requires adaptive mode")
    if mean_final_entropy < 0.0:
        raise ValueError("final entropy must be >= 0")
    k = float(table.values[disease])
    if abs(k - mean_final_entropy) <= table.epsilon:
        return False
    table.values[disease] = table.lambda_ * k + (1.0 - table.lambda_) * mean_final_entropy
    return True


@dataclass(frozen=True)
class ThresholdUpdateEvent:
    disease: int
    value_before: float
    value_after: float
    group_mean_entropy: float
    group_size: int
    group_all_entropy_terminated: bool
    applied: bool


def batch_update(
    table: ThresholdTable,
    correct_episodes: Iterable[tuple[int, float]],
    entropy_terminated: Sequence[bool] | None = None,
) -> list[ThresholdUpdateEvent]:
    """Group correct episodes by diagnosed disease and apply one Polyak update
    per disease using the group's mean final entropy.

    ``entropy_terminated`` optionally flags, per episode, whether the stop was
    entropy-triggered (as opposed to a forced timeout diagnosis); the flag is
    only recorded in the returned events for monotonicity auditing.
    """
    episodes = list(correct_episodes)
    flags = list(entropy_terminated) if entropy_terminated is not None else [True] * len(episodes)
    if len(flags) != len(episodes):
        raise ValueError("entropy_terminated must align with correct_episodes")
    groups: dict[int, list[int]] = {}
    for i, (disease, _) in enumerate(episodes):
        groups.setdefault(disease, []).append(i)
    events = []
    for disease in sorted(groups):
        idx = groups[disease]
        mean_h = float(np.mean([episodes[i][1] for i in idx]))
        before = float(table.values[disease])
        applied = update_threshold(table, disease, mean_h)
        events.append(ThresholdUpdateEvent(
            disease=disease,
            value_before=before,
            value_after=float(table.values[disease]),
            group_mean_entropy=mean_h,
            group_size=len(idx),
            group_all_entropy_terminated=all(flags[i] for i in idx),
            applied=applied,
        ))
    return events
