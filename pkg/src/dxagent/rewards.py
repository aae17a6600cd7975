"""Composite reward r = mu*r_p + nu*r_H.

r_p charges each query and pays discovery and diagnosis bonuses; r_H pays the
normalized, non-negative drop in disease-distribution entropy between
consecutive states.  All functions are pure and stateless.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .patients import Feedback


class Outcome(Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class RewardConfig:
    query_cost: float = -1.0
    negative_discovery_bonus: float = 0.7
    positive_discovery_bonus: float = 1.7
    correct_diagnosis: float = 1.0
    incorrect_or_timeout: float = -1.0
    mu: float = 1.0
    nu: float = 2.5


def step_reward_rp(feedback: Feedback, cfg: RewardConfig) -> float:
    """Per-query part of r_p: query cost plus the discovery bonus matching the
    patient's answer (the inquiry always targets an unknown finding)."""
    bonus = cfg.positive_discovery_bonus if feedback is Feedback.POSITIVE else cfg.negative_discovery_bonus
    return cfg.query_cost + bonus


def terminal_reward_rp(outcome: Outcome, cfg: RewardConfig) -> float:
    """Diagnosis part of r_p; timeouts count as failures even when the forced
    diagnosis happens to be right."""
    return cfg.correct_diagnosis if outcome is Outcome.CORRECT else cfg.incorrect_or_timeout


def entropy_reward(h_prev: float, h_next: float, h0: float) -> float:
    """max((h_prev - h_next)/h0, 0); zero when the initial entropy is zero
    (nothing left to learn, and it avoids dividing by zero)."""
    if h0 <= 0.0:
        return 0.0
    return max((h_prev - h_next) / h0, 0.0)


def combine(rp: float, rh: float, cfg: RewardConfig) -> float:
    return cfg.mu * rp + cfg.nu * rh
