import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dxagent.errors import DimensionError, SimulationError
from dxagent.kb import (
    DiseaseEntry,
    Finding,
    FindingKind,
    FindingLink,
    Flavor,
    KnowledgeBase,
)
from dxagent.patients import (
    Feedback,
    Patient,
    PatientContext,
    ProbabilisticSampler,
    SetValuedSimConfig,
    dump_patients,
    encode_state,
    initial_state,
    load_patients,
    patient_from_obj,
    patient_to_obj,
    respond,
    simulate_probabilistic,
    simulate_setvalued,
    truncated_poisson,
    truncated_poisson_pmf,
)


def single_disease_kb(links):
    """KB with one disease and the given (finding_id, probability) links."""
    n = max(fid for fid, _ in links) + 1
    return KnowledgeBase(
        flavor=Flavor.PROBABILISTIC,
        findings=tuple(Finding(i, f"f{i}", FindingKind.SYMPTOM) for i in range(n)),
        diseases=(DiseaseEntry(0, "only", tuple(FindingLink(f, p) for f, p in links)),),
        age_ranges=((0, 120),),
    )


def enumerate_conditional_marginals(links):
    """Brute-force oracle: enumerate every outcome of independent Bernoulli
    links, drop the all-negative outcome (the simulator rejects it), and
    return finding marginals plus self-report marginals under a uniform pick
    among positives."""
    fids = [f for f, _ in links]
    probs = [p for _, p in links]
    total = 0.0
    marginal = dict.fromkeys(fids, 0.0)
    self_report = dict.fromkeys(fids, 0.0)
    for outcome in itertools.product([0, 1], repeat=len(links)):
        if not any(outcome):
            continue
        w = 1.0
        for bit, p in zip(outcome, probs):
            w *= p if bit else (1.0 - p)
        total += w
        positives = [f for f, bit in zip(fids, outcome) if bit]
        for f in positives:
            marginal[f] += w
            self_report[f] += w / len(positives)
    return (
        {f: m / total for f, m in marginal.items()},
        {f: s / total for f, s in self_report.items()},
    )


class TestProbabilisticSimulation:
    def test_certain_single_finding(self):
        kb = single_disease_kb([(0, 1.0)])
        rng = np.random.default_rng(0)
        for _ in range(50):
            p = simulate_probabilistic(kb, rng)
            assert p.positives == frozenset({0})
            assert p.self_reports == frozenset({0})

    def test_rejection_corrected_marginals_match_enumeration_oracle(self):
        """Two 0.5 findings: conditioned on a nonempty draw each appears with
        probability 2/3, not 1/2; the simulator must match the enumeration."""
        links = [(0, 0.5), (1, 0.5)]
        kb = single_disease_kb(links)
        expected, _ = enumerate_conditional_marginals(links)
        assert expected[0] == pytest.approx(2.0 / 3.0)
        rng = np.random.default_rng(42)
        n = 100_000
        counts = np.zeros(2)
        for _ in range(n):
            p = simulate_probabilistic(kb, rng)
            for f in p.positives:
                counts[f] += 1
        np.testing.assert_allclose(counts / n, [expected[0], expected[1]], atol=0.01)

    def test_half_probability_finding_with_anchor(self):
        """With a certain anchor finding there is no rejection, so a 0.5 link
        appears in half the patients."""
        links = [(0, 1.0), (1, 0.5)]
        kb = single_disease_kb(links)
        rng = np.random.default_rng(7)
        n = 100_000
        hits = sum(1 in simulate_probabilistic(kb, rng).positives for _ in range(n))
        assert hits / n == pytest.approx(0.5, abs=0.01)

    def test_self_report_distribution_matches_enumeration_oracle(self):
        links = [(0, 1.0), (1, 0.5)]
        kb = single_disease_kb(links)
        _, expected = enumerate_conditional_marginals(links)
        assert expected[0] == pytest.approx(0.75)
        rng = np.random.default_rng(11)
        n = 100_000
        zero = sum(simulate_probabilistic(kb, rng).self_reports == frozenset({0}) for _ in range(n))
        assert zero / n == pytest.approx(expected[0], abs=0.01)

    def test_invariants_over_many_draws(self, toy_kb):
        rng = np.random.default_rng(3)
        for _ in range(10_000):
            p = simulate_probabilistic(toy_kb, rng)
            assert p.positives
            assert p.self_reports
            assert p.self_reports <= p.positives
            assert len(p.self_reports) == 1

    def test_determinism(self, toy_kb):
        a = [simulate_probabilistic(toy_kb, np.random.default_rng(9)) for _ in range(20)]
        b = [simulate_probabilistic(toy_kb, np.random.default_rng(9)) for _ in range(20)]
        assert a == b

    def test_sampler_matches_plain_function(self, toy_kb):
        sampler = ProbabilisticSampler(toy_kb)
        a = [sampler.sample(np.random.default_rng(5)) for _ in range(25)]
        b = [simulate_probabilistic(toy_kb, np.random.default_rng(5)) for _ in range(25)]
        assert a == b

    def test_wrong_flavor_rejected(self, toy_kb_setvalued):
        with pytest.raises(SimulationError):
            simulate_probabilistic(toy_kb_setvalued, np.random.default_rng(0))

    def test_context_sampled_from_prior(self, context_kb):
        rng = np.random.default_rng(17)
        sexes, ages = [], []
        for _ in range(20_000):
            p = simulate_probabilistic(context_kb, rng)
            assert p.context is not None
            if p.true_disease == 0:
                sexes.append(p.context.sex_bit)
                ages.append(p.context.age_range_index)
        assert np.mean(sexes) == pytest.approx(0.25, abs=0.02)
        assert np.mean(np.array(ages) == 0) == pytest.approx(0.5, abs=0.02)


class TestTruncatedPoisson:
    def test_pmf_sums_to_one(self):
        pmf = truncated_poisson_pmf(2.5, 1, 10)
        assert pmf.sum() == pytest.approx(1.0)

    def test_pmf_matches_direct_ratio(self):
        """Oracle: lemma-level check of the truncated mass at mean 1 over
        [0, 1]: both outcomes carry e^-1, so the split is exactly 1/2."""
        pmf = truncated_poisson_pmf(1.0, 0, 1)
        np.testing.assert_allclose(pmf, [0.5, 0.5])

    def test_sampler_matches_pmf(self):
        rng = np.random.default_rng(0)
        draws = np.array([truncated_poisson(rng, 3.0, 1, 6) for _ in range(50_000)])
        pmf = truncated_poisson_pmf(3.0, 1, 6)
        for k in range(1, 7):
            assert np.mean(draws == k) == pytest.approx(pmf[k - 1], abs=0.01)

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            truncated_poisson(np.random.default_rng(0), 1.0, 3, 2)


class TestSetValuedSimulation:
    def test_one_symptom_one_exam(self):
        """Disease with one symptom and one exam at means (1,1,1): the symptom
        is forced (count truncated to [1,1]) and doubles as the self-report;
        the exam appears with the truncated-Poisson mass at 1, here 0.5."""
        kb = KnowledgeBase(
            flavor=Flavor.SET_VALUED,
            findings=(Finding(0, "s", FindingKind.SYMPTOM), Finding(1, "e", FindingKind.EXAMINATION)),
            diseases=(DiseaseEntry(0, "d", (FindingLink(0), FindingLink(1))),),
            age_ranges=((0, 120),),
        )
        cfg = SetValuedSimConfig(1.0, 1.0, 1.0)
        expected_exam = truncated_poisson_pmf(1.0, 0, 1)[1]
        assert expected_exam == pytest.approx(0.5)
        rng = np.random.default_rng(1)
        n = 20_000
        exam_hits = 0
        for _ in range(n):
            p = simulate_setvalued(kb, rng, cfg)
            assert p.self_reports == frozenset({0})
            exam_hits += 1 in p.positives
        assert exam_hits / n == pytest.approx(expected_exam, abs=0.015)

    def test_self_reports_are_symptoms_only(self, toy_kb_setvalued):
        exam_ids = {f.id for f in toy_kb_setvalued.findings if f.kind is FindingKind.EXAMINATION}
        rng = np.random.default_rng(2)
        for _ in range(10_000):
            p = simulate_setvalued(toy_kb_setvalued, rng)
            assert p.self_reports
            assert p.self_reports <= p.positives
            assert not (p.self_reports & exam_ids)

    def test_zero_symptom_disease_is_an_error(self):
        kb = KnowledgeBase(
            flavor=Flavor.SET_VALUED,
            findings=(Finding(0, "e", FindingKind.EXAMINATION),),
            diseases=(DiseaseEntry(0, "d", (FindingLink(0),)),),
            age_ranges=((0, 120),),
        )
        with pytest.raises(SimulationError, match="d"):
            simulate_setvalued(kb, np.random.default_rng(0))

    def test_counts_follow_truncated_means(self, toy_kb_setvalued):
        """Empirical symptom/exam counts match the analytic truncated-Poisson
        means computed from the KB's per-disease link counts."""
        cfg = SetValuedSimConfig(4.0, 3.0, 2.0)
        sym_avail = exam_avail = None
        for d in toy_kb_setvalued.diseases:
            kinds = [toy_kb_setvalued.findings[l.finding_id].kind for l in d.findings]
            sym_avail = sum(k is FindingKind.SYMPTOM for k in kinds)
            exam_avail = sum(k is FindingKind.EXAMINATION for k in kinds)
        ks_sym = np.arange(1, sym_avail + 1)
        expected_sym = float(ks_sym @ truncated_poisson_pmf(4.0, 1, sym_avail))
        ks_exam = np.arange(0, exam_avail + 1)
        expected_exam = float(ks_exam @ truncated_poisson_pmf(3.0, 0, exam_avail))
        rng = np.random.default_rng(3)
        n = 30_000
        sym_counts, exam_counts = [], []
        exam_ids = {f.id for f in toy_kb_setvalued.findings if f.kind is FindingKind.EXAMINATION}
        for _ in range(n):
            p = simulate_setvalued(toy_kb_setvalued, rng, cfg)
            exam_counts.append(len(p.positives & exam_ids))
            sym_counts.append(len(p.positives) - exam_counts[-1])
        assert np.mean(sym_counts) == pytest.approx(expected_sym, rel=0.03)
        assert np.mean(exam_counts) == pytest.approx(expected_exam, rel=0.03)


class TestEncodeState:
    def test_empty(self):
        np.testing.assert_array_equal(encode_state({}, None, 4), [0, 0, 0, 0])

    def test_mixed(self):
        state = encode_state({2: Feedback.POSITIVE, 0: Feedback.NEGATIVE}, None, 4)
        np.testing.assert_array_equal(state, [-1, 0, 1, 0])

    def test_context_appended_verbatim(self):
        state = encode_state({2: Feedback.POSITIVE, 0: Feedback.NEGATIVE}, np.array([1.0, 0.0, 0.0]), 4)
        np.testing.assert_array_equal(state, [-1, 0, 1, 0, 1, 0, 0])

    def test_out_of_range_rejected(self):
        with pytest.raises(DimensionError):
            encode_state({4: Feedback.POSITIVE}, None, 4)

    @given(st.dictionaries(st.integers(0, 9), st.sampled_from(list(Feedback)), max_size=10))
    @settings(max_examples=200, deadline=None)
    def test_entries_are_ternary(self, known):
        state = encode_state(known, None, 10)
        assert set(np.unique(state)) <= {-1.0, 0.0, 1.0}
        for fid, fb in known.items():
            assert state[fid] == (1.0 if fb is Feedback.POSITIVE else -1.0)

    def test_initial_state_has_no_negatives(self, toy_kb):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = simulate_probabilistic(toy_kb, rng)
            s = initial_state(p, toy_kb)
            assert set(np.unique(s)) <= {0.0, 1.0}
            assert s.sum() == len(p.self_reports)

    def test_initial_state_includes_context(self, context_kb):
        p = Patient(0, frozenset({0}), frozenset({0}), PatientContext(1, 1))
        s = initial_state(p, context_kb)
        assert len(s) == context_kb.state_dim
        np.testing.assert_array_equal(s[3:], [1.0, 0.0, 1.0])


class TestRespond:
    def test_positive_negative_and_purity(self):
        p = Patient(0, frozenset({1, 3}), frozenset({1}))
        assert respond(p, 1) is Feedback.POSITIVE
        assert respond(p, 2) is Feedback.NEGATIVE
        assert all(respond(p, 3) is Feedback.POSITIVE for _ in range(5))


def test_patient_jsonl_roundtrip(tmp_path, toy_kb):
    rng = np.random.default_rng(0)
    patients = [simulate_probabilistic(toy_kb, rng) for _ in range(25)]
    path = tmp_path / "patients.jsonl"
    dump_patients(patients, path)
    assert load_patients(path) == patients
    first = json.loads(path.read_text().splitlines()[0])
    assert set(first) == {"disease", "positives", "self_reports", "context"}
    assert patient_from_obj(patient_to_obj(patients[0])) == patients[0]
