"""Synthetic patients and the ternary state encoding.

Patients are sampled from a knowledge base and answer finding inquiries
truthfully: a finding is positive iff it belongs to the patient's positive
set.  States encode finding statuses as +1 (positive), -1 (negative) and 0
(unknown), optionally followed by fixed demographic context bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionError, SimulationError
from .kb import FindingKind, Flavor, KnowledgeBase


class Feedback(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class PatientContext:
    sex_bit: int
    age_range_index: int

    def bits(self, n_age_ranges: int) -> np.ndarray:
        out = np.zeros(1 + n_age_ranges)
        out[0] = self.sex_bit
        out[1 + self.age_range_index] = 1.0
        return out


@dataclass(frozen=True)
class Patient:
    true_disease: int
    positives: frozenset[int]
    self_reports: frozenset[int]
    context: PatientContext | None = None


@dataclass(frozen=True)
class SetValuedSimConfig:
    """Poisson means for set-valued sampling: how many symptoms and
    examinations a patient exhibits and how many symptoms they volunteer."""

    symptom_poisson_mean: float = 6.5
    exam_poisson_mean: float = 5.3
    self_report_poisson_mean: float = 2.9


def truncated_poisson(rng: np.random.Generator, mean: float, lo: int, hi: int) -> int:
    """Draw from Poisson(mean) conditioned on lo <= k <= hi by inverse CDF.

    Exact (no rejection loop), so it consumes exactly one uniform draw.
    """
    if hi < lo:
        raise ValueError(f"empty truncation range [{lo}, {hi}]")
    if mean <= 0:
        raise ValueError("Poisson mean must be > 0")
    ks = np.arange(lo, hi + 1)
    logpmf = ks * math.log(mean) - mean - np.array([math.lgamma(k + 1) for k in ks])
    pmf = np.exp(logpmf - logpmf.max())
    cdf = np.cumsum(pmf)
    u = rng.random() * cdf[-1]
    return int(lo + np.searchsorted(cdf, u, side="right").clip(0, len(ks) - 1))


def truncated_poisson_pmf(mean: float, lo: int, hi: int) -> np.ndarray:
    """Exact probability mass of the truncated Poisson over [lo, hi]."""
    ks = np.arange(lo, hi + 1)
    logpmf = ks * math.log(mean) - mean - np.array([math.lgamma(k + 1) for k in ks])
    pmf = np.exp(logpmf)
    return pmf / pmf.sum()


def _sample_context(kb: KnowledgeBase, disease_id: int, rng: np.random.Generator) -> PatientContext | None:
    prior = kb.diseases[disease_id].context_prior
    if prior is None or not kb.has_context:
        return None
    sex = int(rng.random() < prior.sex_probability)
    age_idx = int(rng.choice(len(kb.age_ranges), p=np.asarray(prior.age_range_probabilities)))
    return PatientContext(sex_bit=sex, age_range_index=age_idx)


class ProbabilisticSampler:
    """Per-KB sampler with link arrays cached; draw-for-draw identical to
    simulate_probabilistic, just without rebuilding arrays per patient."""

    def __init__(self, kb: KnowledgeBase):
        if kb.flavor is not Flavor.PROBABILISTIC:
            raise SimulationError("ProbabilisticSampler requires a probabilistic KB")
        self.kb = kb
        self.link_ids = [np.array([l.finding_id for l in d.findings]) for d in kb.diseases]
        self.link_probs = [np.array([l.probability for l in d.findings]) for d in kb.diseases]

    def sample(self, rng: np.random.Generator) -> Patient:
        kb = self.kb
        disease = int(rng.integers(kb.n_diseases))
        ids, probs = self.link_ids[disease], self.link_probs[disease]
        while True:
            mask = rng.random(len(ids)) < probs
            if mask.any():
                break
        positive_ids = np.sort(ids[mask])
        self_report = int(positive_ids[rng.integers(len(positive_ids))])
        context = _sample_context(kb, disease, rng)
        return Patient(
            true_disease=disease,
            positives=frozenset(int(i) for i in positive_ids),
            self_reports=frozenset({self_report}),
            context=context,
        )


def simulate_probabilistic(kb: KnowledgeBase, rng: np.random.Generator) -> Patient:
    """Sample one patient: uniform disease, an independent Bernoulli trial per
    linked finding, resampled until at least one finding is positive, and one
    positive chosen uniformly as the self-report."""
    return ProbabilisticSampler(kb).sample(rng)


def simulate_setvalued(
    kb: KnowledgeBase,
    rng: np.random.Generator,
    cfg: SetValuedSimConfig = SetValuedSimConfig(),
) -> Patient:
    """Sample one patient from a set-valued KB.

    Symptom and examination counts follow truncated Poisson draws over the
    disease's links (symptoms truncated to [1, available], examinations to
    [0, available]); sampled without replacement.  Self-report count is
    Poisson truncated to [1, #positive symptoms] and drawn from positive
    symptoms only: examinations are never volunteered.
    """
    if kb.flavor is not Flavor.SET_VALUED:
        raise SimulationError("simulate_setvalued requires a set-valued KB")
    for mean in (cfg.symptom_poisson_mean, cfg.exam_poisson_mean, cfg.self_report_poisson_mean):
        if mean <= 0:
            raise SimulationError("Poisson means must be > 0")
    disease = int(rng.integers(kb.n_diseases))
    entry = kb.diseases[disease]
    symptom_ids = sorted(
        l.finding_id for l in entry.findings if kb.findings[l.finding_id].kind is FindingKind.SYMPTOM
    )
    exam_ids = sorted(
        l.finding_id for l in entry.findings if kb.findings[l.finding_id].kind is FindingKind.EXAMINATION
    )
    if not symptom_ids:
        raise SimulationError(f"disease {disease} ({entry.name!r}) links no symptoms; cannot simulate")

    n_sym = truncated_poisson(rng, cfg.symptom_poisson_mean, 1, len(symptom_ids))
    symptoms = rng.choice(np.array(symptom_ids), size=n_sym, replace=False)
    exams = np.array([], dtype=int)
    if exam_ids:
        n_exam = truncated_poisson(rng, cfg.exam_poisson_mean, 0, len(exam_ids))
        if n_exam:
            exams = rng.choice(np.array(exam_ids), size=n_exam, replace=False)

    n_report = truncated_poisson(rng, cfg.self_report_poisson_mean, 1, n_sym)
    reports = rng.choice(np.sort(symptoms), size=n_report, replace=False)

    context = _sample_context(kb, disease, rng)
    return Patient(
        true_disease=disease,
        positives=frozenset(int(i) for i in symptoms) | frozenset(int(i) for i in exams),
        self_reports=frozenset(int(i) for i in reports),
        context=context,
    )


def simulate(kb: KnowledgeBase, rng: np.random.Generator,
             setvalued_cfg: SetValuedSimConfig = SetValuedSimConfig()) -> Patient:
    """Dispatch on KB flavor."""
    if kb.flavor is Flavor.PROBABILISTIC:
        return simulate_probabilistic(kb, rng)
    return simulate_setvalued(kb, rng, setvalued_cfg)


def make_sampler(kb: KnowledgeBase, setvalued_cfg: SetValuedSimConfig = SetValuedSimConfig()):
    """Flavor-dispatched sampling closure with per-KB arrays prepared once."""
    if kb.flavor is Flavor.PROBABILISTIC:
        return ProbabilisticSampler(kb).sample
    return lambda rng: simulate_setvalued(kb, rng, setvalued_cfg)


def respond(patient: Patient, finding_id: int) -> Feedback:
    """Truthful answer to an inquiry; pure function of the patient."""
    return Feedback.POSITIVE if finding_id in patient.positives else Feedback.NEGATIVE


def encode_state(
    known: Mapping[int, Feedback],
    context_bits: np.ndarray | None,
    n_findings: int,
) -> np.ndarray:
    """Ternary encoding: +1 positive, -1 negative, 0 unknown, context bits
    appended verbatim."""
    state = np.zeros(n_findings)
    for fid, fb in known.items():
        if not (0 <= fid < n_findings):
            raise DimensionError(f"finding id {fid} out of range for N={n_findings}")
        state[fid] = 1.0 if fb is Feedback.POSITIVE else -1.0
    if context_bits is not None:
        state = np.concatenate([state, np.asarray(context_bits, dtype=float)])
    return state


def initial_state(patient: Patient, kb: KnowledgeBase) -> np.ndarray:
    """State before any inquiry: self-reports positive, everything else
    unknown, plus the patient's context block when the KB carries one."""
    known = {fid: Feedback.POSITIVE for fid in patient.self_reports}
    bits = patient.context.bits(len(kb.age_ranges)) if (kb.has_context and patient.context) else None
    return encode_state(known, bits, kb.n_findings)


# ---------------------------------------------------------------------------
# JSONL patient dumps (one patient per line).
# ---------------------------------------------------------------------------

def patient_to_obj(patient: Patient) -> dict:
    obj = {
        "disease": patient.true_disease,
        "positives": sorted(patient.positives),
        "self_reports": sorted(patient.self_reports),
        "context": None,
    }
    if patient.context is not None:
        obj["context"] = {"sex": patient.context.sex_bit, "age_range": patient.context.age_range_index}
    return obj


def patient_from_obj(obj: dict) -> Patient:
    context = None
    if obj.get("context") is not None:
        context = PatientContext(sex_bit=int(obj["context"]["sex"]), age_range_index=int(obj["context"]["age_range"]))
    return Patient(
        true_disease=int(obj["disease"]),
        positives=frozenset(int(i) for i in obj["positives"]),
        self_reports=frozenset(int(i) for i in obj["self_reports"]),
        context=context,
    )


def dump_patients(patients: Iterable[Patient], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in patients:
            fh.write(json.dumps(patient_to_obj(p)) + "\n")


def load_patients(path: str | Path) -> list[Patient]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(patient_from_obj(json.loads(line)))
    return out
