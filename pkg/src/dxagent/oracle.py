"""Brute-force greedy information-gain reference agent.

An exact Bayesian player for probabilistic KBs: it maintains the true
posterior over diseases given the self-report and every answer so far, and
greedily asks the finding whose answer minimizes the expected posterior
entropy.  It is implemented straight from the generative model (independent
Bernoulli findings per disease, one self-report drawn uniformly from the
positives, rejection of all-negative draws) and shares no code with the
learned policy or classifier, so it serves as an independent ceiling for toy
tasks.

The self-report couples evidence across findings: observing that finding c
was volunteered weighs each disease by E[1 / |positives|].  With a answered
positives and the unresolved linked findings K ~ Poisson-binomial(p_rest),

    P(self-report = c, answers | d)
      = p_dc * prod_ans(p or 1-p) * E[1/(1 + a + K)] / P(any positive | d)

E[...] is computed by exact dynamic programming over the count distribution
of K, vectorized across diseases.  Candidate queries reuse the full-rest
count DP through a deconvolution of one Bernoulli factor instead of
recomputing it, which keeps the greedy step O(N^2) per turn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kb import Flavor, KnowledgeBase
from .patients import Patient, respond, simulate_probabilistic, Feedback
from .trainer import episode_rng

STREAM_ORACLE_EPISODE = 5
ENTROPY_CERTAIN = 1e-12


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0.0]
    return float(-(nz * np.log(nz)).sum())


@dataclass
class OracleReport:
    accuracy: float
    mean_turns: float
    n_patients: int
    max_turns: int


class GreedyInfoGainOracle:
    """Exact-posterior greedy player over one probabilistic KB."""

    def __init__(self, kb: KnowledgeBase):
        if kb.flavor is not Flavor.PROBABILISTIC:
            raise ValueError("the information-gain oracle requires a probabilistic KB")
        self.kb = kb
        m, n = kb.n_diseases, kb.n_findings
        self.p = np.zeros((m, n))
        for d in kb.diseases:
            for link in d.findings:
                self.p[d.id, link.finding_id] = link.probability
        # P(at least one positive | d): the simulator rejects all-negative draws.
        self.p_any = 1.0 - np.prod(1.0 - self.p, axis=1)

    def _count_distribution(self, rest_mask: np.ndarray) -> np.ndarray:
        """Poisson-binomial count distribution of positives among ``rest_mask``
        findings, one row per disease: dist[d, k] = P(K_d = k)."""
        m = self.p.shape[0]
        cols = np.flatnonzero(rest_mask)
        dist = np.zeros((m, len(cols) + 1))
        dist[:, 0] = 1.0
        for j, col in enumerate(cols):
            pj = self.p[:, col][:, None]
            upper = j + 2
            new = dist[:, :upper].copy()
            new[:, 1:upper] = new[:, 1:upper] * (1.0 - pj) + dist[:, : upper - 1] * pj
            new[:, 0] = dist[:, 0] * (1.0 - pj[:, 0])
            dist[:, :upper] = new
        return dist

    @staticmethod
    def _deconvolve(dist: np.ndarray, pj: np.ndarray) -> np.ndarray:
        """Remove one Bernoulli(pj) factor from a count distribution.

        Inverse of dist_new = dist*(1-p) + shift(dist)*p, handled exactly for
        p = 0 and p = 1 and by forward substitution otherwise.
        """
        m, width = dist.shape
        out = np.zeros((m, width - 1))
        ones = pj >= 1.0
        zeros = pj <= 0.0
        mid = ~(ones | zeros)
        if ones.any():
            out[ones] = dist[ones][:, 1:]
        if zeros.any():
            out[zeros] = dist[zeros][:, :-1]
        if mid.any():
            p = pj[mid][:, None]
            sub = dist[mid]
            w = np.zeros((mid.sum(), width - 1))
            w[:, 0] = sub[:, 0] / (1.0 - p[:, 0])
            for k in range(1, width - 1):
                w[:, k] = (sub[:, k] - w[:, k - 1] * p[:, 0]) / (1.0 - p[:, 0])
            out[mid] = w
        return np.maximum(out, 0.0)

    @staticmethod
    def _expected_inverse(dist: np.ndarray, offset: int) -> np.ndarray:
        """E[1/(offset + K)] per disease for K distributed per ``dist`` rows."""
        ks = np.arange(dist.shape[1])
        return dist @ (1.0 / (offset + ks))

    def posterior(self, self_report: int, answers: dict[int, bool]) -> np.ndarray:
        """Exact posterior over diseases given the evidence so far."""
        rest = np.ones(self.kb.n_findings, dtype=bool)
        rest[self_report] = False
        for q in answers:
            rest[q] = False
        a = sum(answers.values())
        like = self.p[:, self_report].copy()
        for q, v in answers.items():
            like *= self.p[:, q] if v else (1.0 - self.p[:, q])
        dist = self._count_distribution(rest)
        like *= self._expected_inverse(dist, 1 + a)
        like /= np.maximum(self.p_any, 1e-300)
        total = like.sum()
        if total <= 0.0:
            raise ValueError("evidence has zero probability under every disease")
        return like / total

    def choose_query(self, self_report: int, answers: dict[int, bool]) -> int | None:
        """Greedy step: unasked finding minimizing expected posterior entropy,
        ties broken toward the lowest id; None when nothing is left."""
        n = self.kb.n_findings
        asked = set(answers) | {self_report}
        candidates = [q for q in range(n) if q not in asked]
        if not candidates:
            return None
        rest = np.ones(n, dtype=bool)
        for q in asked:
            rest[q] = False
        a = sum(answers.values())
        base_like = self.p[:, self_report].copy()
        for q, v in answers.items():
            base_like *= self.p[:, q] if v else (1.0 - self.p[:, q])
        base_like /= np.maximum(self.p_any, 1e-300)
        dist_full = self._count_distribution(rest)

        best_q, best_h = None, np.inf
        for q in candidates:
            dist_wo = self._deconvolve(dist_full, self.p[:, q])
            like_pos = base_like * self.p[:, q] * self._expected_inverse(dist_wo, 2 + a)
            like_neg = base_like * (1.0 - self.p[:, q]) * self._expected_inverse(dist_wo, 1 + a)
            w_pos, w_neg = like_pos.sum(), like_neg.sum()
            total = w_pos + w_neg
            if total <= 0.0:
                continue
            h = 0.0
            if w_pos > 0.0:
                h += w_pos / total * _entropy(like_pos / w_pos)
            if w_neg > 0.0:
                h += w_neg / total * _entropy(like_neg / w_neg)
            if h < best_h - 1e-15:
                best_q, best_h = q, h
        return best_q

    def run_episode(self, patient: Patient, max_turns: int | None = None) -> tuple[int, int]:
        """Play one patient; returns (diagnosis, turns).

        Stops when the posterior is certain, when ``max_turns`` inquiries have
        been made, or when no finding is left to ask.
        """
        (self_report,) = patient.self_reports
        answers: dict[int, bool] = {}
        limit = max_turns if max_turns is not None else self.kb.n_findings
        turns = 0
        post = self.posterior(self_report, answers)
        while turns < limit and _entropy(post) > ENTROPY_CERTAIN:
            q = self.choose_query(self_report, answers)
            if q is None:
                break
            answers[q] = respond(patient, q) is Feedback.POSITIVE
            turns += 1
            post = self.posterior(self_report, answers)
        return int(np.argmax(post)), turns


def oracle_evaluate(
    kb: KnowledgeBase,
    n_patients: int,
    seed: int,
    max_turns: int | None = None,
) -> OracleReport:
    """Accuracy and mean turns of the greedy oracle over simulated patients."""
    oracle = GreedyInfoGainOracle(kb)
    correct = 0
    turns_total = 0
    for i in range(n_patients):
        rng = episode_rng(seed, STREAM_ORACLE_EPISODE, i)
        patient = simulate_probabilistic(kb, rng)
        diagnosis, turns = oracle.run_episode(patient, max_turns=max_turns)
        correct += diagnosis == patient.true_disease
        turns_total += turns
    return OracleReport(
        accuracy=correct / n_patients,
        mean_turns=turns_total / n_patients,
        n_patients=n_patients,
        max_turns=max_turns if max_turns is not None else kb.n_findings,
    )
