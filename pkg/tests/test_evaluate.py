import numpy as np
import pytest

from dxagent.checkpoint import CheckpointBundle
from dxagent.config import TrainConfig
from dxagent.errors import CheckpointError
from dxagent.evaluate import (
    evaluate,
    match_rate,
    sweep_table_csv,
    thresholds_csv,
)
from dxagent.kb import ToyKbSpec, gen_toy_kb, kb_hash
from dxagent.net import AdamState, MlpModel
from dxagent.thresholds import ThresholdInit, ThresholdTable
from dxagent.trainer import EpisodeRecord, Termination, train


def untrained_bundle(kb, seed=0, **cfg_kw):
    cfg = TrainConfig(policy_hidden=(16,), classifier_hidden=(16,), **cfg_kw)
    rng = np.random.default_rng(seed)
    policy = MlpModel.init([kb.state_dim, *cfg.policy_hidden, kb.n_findings], rng)
    classifier = MlpModel.init([kb.state_dim, *cfg.classifier_hidden, kb.n_diseases], rng)
    return CheckpointBundle(
        kb_hash=kb_hash(kb),
        policy=policy,
        classifier=classifier,
        policy_adam=AdamState.init(policy),
        classifier_adam=AdamState.init(classifier),
        thresholds=ThresholdTable.from_init(ThresholdInit(), kb.n_diseases),
        train_config=cfg,
    )


def fake_episode(turns, positives_found, correct=True):
    return EpisodeRecord(
        true_disease=0,
        transitions=[],
        visited_states=[],
        final_state=np.zeros(1),
        initial_entropy=1.0,
        final_entropy=0.1,
        diagnosis=0 if correct else 1,
        termination=Termination.ENTROPY_STOP,
        turns=turns,
        positives_found=positives_found,
        policy_entropies=[],
    )


class TestMatchRate:
    def test_single_episode_ratio(self):
        assert match_rate([fake_episode(6, 3)]) == pytest.approx(0.5)

    def test_all_negative_episode(self):
        assert match_rate([fake_episode(5, 0)]) == 0.0

    def test_empty_list_defined_zero(self):
        assert match_rate([]) == 0.0

    def test_mean_over_episodes(self):
        eps = [fake_episode(4, 2), fake_episode(10, 0)]
        assert match_rate(eps) == pytest.approx(0.25)


class TestEvaluate:
    def test_untrained_checkpoint_is_chance_level(self, toy_kb):
        metrics = evaluate(untrained_bundle(toy_kb), toy_kb, 4000, seed=9)
        assert metrics.accuracy == pytest.approx(1.0 / 20.0, abs=0.02)
        assert 1.0 <= metrics.mean_turns <= 15.0
        assert 0.0 <= metrics.match_rate <= 1.0
        assert metrics.n_patients == 4000

    def test_deterministic_given_seed(self, toy_kb):
        bundle = untrained_bundle(toy_kb)
        a = evaluate(bundle, toy_kb, 500, seed=9)
        b = evaluate(bundle, toy_kb, 500, seed=9)
        assert a == b
        assert a.to_json() == b.to_json()

    def test_accuracy_times_n_is_integer(self, toy_kb):
        metrics = evaluate(untrained_bundle(toy_kb), toy_kb, 700, seed=1)
        assert round(metrics.accuracy * metrics.n_patients, 6) == int(
            round(metrics.accuracy * metrics.n_patients)
        )

    def test_hash_mismatch_requires_override(self, toy_kb):
        other = gen_toy_kb(ToyKbSpec(20, 10, 1.0, 0.5), seed=1)
        bundle = untrained_bundle(toy_kb)
        with pytest.raises(CheckpointError):
            evaluate(bundle, other, 10, seed=0)
        metrics = evaluate(bundle, other, 10, seed=0, override_kb_hash=True)
        assert metrics.n_patients == 10

    def test_sampled_inference_flag(self, toy_kb):
        bundle = untrained_bundle(toy_kb)
        greedy = evaluate(bundle, toy_kb, 300, seed=3, greedy=True)
        sampled = evaluate(bundle, toy_kb, 300, seed=3, greedy=False)
        assert greedy != sampled

    def test_single_disease_kb_is_perfect(self):
        kb = gen_toy_kb(ToyKbSpec(1, 2, 1.0, 0.5), seed=0)
        metrics = evaluate(untrained_bundle(kb), kb, 200, seed=0)
        assert metrics.accuracy == 1.0
        assert metrics.mean_turns == 1.0


class TestThresholdExports:
    def test_csv_recomputes_summary(self, toy_kb):
        bundle = untrained_bundle(toy_kb)
        metrics = evaluate(bundle, toy_kb, 50, seed=0)
        text = thresholds_csv(toy_kb, metrics.per_disease_thresholds)
        lines = text.strip().splitlines()
        assert lines[0] == "disease_id,name,threshold"
        values = np.array([float(line.split(",")[2]) for line in lines[1:]])
        assert float(np.mean(values)) == pytest.approx(metrics.threshold_mean, abs=1e-12)
        assert float(np.std(values)) == pytest.approx(metrics.threshold_std, abs=1e-12)
        assert float(np.median(values)) == pytest.approx(metrics.threshold_median, abs=1e-12)

    def test_metrics_json_shape(self, toy_kb):
        metrics = evaluate(untrained_bundle(toy_kb), toy_kb, 20, seed=0)
        obj = metrics.to_dict()
        assert set(obj) == {"accuracy", "mean_turns", "match_rate", "n_patients", "threshold_summary"}
        assert len(obj["threshold_summary"]["per_disease"]) == 20


class TestSweepShapes:
    """Small-budget smoke runs of the two experiment protocols; the full
    protocol sizes live in the acceptance suite."""

    @pytest.fixture()
    def small_cfg(self):
        # max_steps < N - 1 so never-stopping runs cannot exhaust the findings
        return TrainConfig(
            total_episodes=1000,
            max_steps=8,
            policy_hidden=(16,),
            classifier_hidden=(16,),
            master_seed=5,
        )

    def test_fixed_sweep_sentinels(self, small_cfg):
        from dxagent.evaluate import fixed_threshold_sweep

        kb = gen_toy_kb(ToyKbSpec(6, 4, 1.0, 0.3), seed=1)
        rows = fixed_threshold_sweep(kb, small_cfg, [99.0, -1.0], n_eval=300, eval_seed=42)
        by_label = {r.label: r for r in rows}
        assert set(by_label) == {"adaptive", "fixed_99", "fixed_-1"}
        # stop check happens after the first inquiry, so an always-true
        # threshold still costs exactly one turn
        assert by_label["fixed_99"].metrics.mean_turns == 1.0
        # unreachable threshold forces the full step budget every episode
        assert by_label["fixed_-1"].metrics.mean_turns == small_cfg.max_steps

    def test_adaptive_row_matches_standalone_run(self, small_cfg):
        from dxagent.evaluate import evaluate as ev, fixed_threshold_sweep

        kb = gen_toy_kb(ToyKbSpec(6, 4, 1.0, 0.3), seed=1)
        rows = fixed_threshold_sweep(kb, small_cfg, [1.0], n_eval=300, eval_seed=42)
        adaptive = next(r for r in rows if r.label == "adaptive")
        standalone = train(kb, small_cfg.with_overrides(threshold_mode="adaptive"))
        metrics = ev(standalone.to_checkpoint(), kb, 300, 42)
        assert adaptive.metrics == metrics

    def test_init_robustness_lambda_one_keeps_init(self, small_cfg):
        from dxagent.evaluate import init_robustness

        kb = gen_toy_kb(ToyKbSpec(6, 4, 1.0, 0.3), seed=1)
        rows = init_robustness(
            kb,
            small_cfg.with_overrides(threshold_lambda=1.0),
            [("uniform_2", ThresholdInit(kind="uniform", value=2.0))],
            n_eval=200,
            eval_seed=42,
        )
        [row] = rows
        assert row.metrics.threshold_mean == 2.0
        assert row.metrics.threshold_std == 0.0

    def test_sweep_csv_format(self, small_cfg):
        from dxagent.evaluate import fixed_threshold_sweep

        kb = gen_toy_kb(ToyKbSpec(6, 4, 1.0, 0.3), seed=1)
        rows = fixed_threshold_sweep(kb, small_cfg, [1.0], n_eval=100, eval_seed=7)
        text = sweep_table_csv(rows)
        header, *body = text.strip().splitlines()
        assert header == "label,accuracy,mean_turns,match_rate,threshold_mean,threshold_std"
        assert len(body) == 2
