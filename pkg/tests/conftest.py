import numpy as np
import pytest

from dxagent.kb import (
    ContextPrior,
    DiseaseEntry,
    Finding,
    FindingKind,
    FindingLink,
    Flavor,
    KnowledgeBase,
    ToyKbSpec,
    gen_toy_kb,
)


@pytest.fixture(scope="session")
def toy_kb():
    """The 20-disease separable toy KB used across the suite."""
    return gen_toy_kb(ToyKbSpec(20, 10, 1.0, 0.3), seed=7)


@pytest.fixture(scope="session")
def toy_kb_setvalued():
    return gen_toy_kb(ToyKbSpec(6, 8, flavor=Flavor.SET_VALUED), seed=7)


@pytest.fixture()
def tiny_kb():
    """Two diseases, two findings; the smallest interesting probabilistic KB."""
    return KnowledgeBase(
        flavor=Flavor.PROBABILISTIC,
        findings=(
            Finding(0, "fever", FindingKind.SYMPTOM),
            Finding(1, "cough", FindingKind.SYMPTOM),
        ),
        diseases=(
            DiseaseEntry(0, "alpha", (FindingLink(0, 1.0), FindingLink(1, 0.5))),
            DiseaseEntry(1, "beta", (FindingLink(1, 1.0),)),
        ),
        age_ranges=((0, 39), (40, 120)),
    )


@pytest.fixture()
def context_kb():
    """Probabilistic KB where every disease carries a demographic prior."""
    prior_a = ContextPrior(sex_probability=0.25, age_range_probabilities=(0.5, 0.5))
    prior_b = ContextPrior(sex_probability=0.75, age_range_probabilities=(0.1, 0.9))
    return KnowledgeBase(
        flavor=Flavor.PROBABILISTIC,
        findings=(
            Finding(0, "fever", FindingKind.SYMPTOM),
            Finding(1, "cough", FindingKind.SYMPTOM),
            Finding(2, "x-ray", FindingKind.EXAMINATION),
        ),
        diseases=(
            DiseaseEntry(0, "alpha", (FindingLink(0, 0.9), FindingLink(2, 0.4)), prior_a),
            DiseaseEntry(1, "beta", (FindingLink(1, 0.8),), prior_b),
        ),
        age_ranges=((0, 39), (40, 120)),
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
