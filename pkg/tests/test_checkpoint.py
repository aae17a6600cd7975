import json

import numpy as np
import pytest

from dxagent.checkpoint import (
    CheckpointBundle,
    check_kb_compatibility,
    load_checkpoint,
    save_checkpoint,
)
from dxagent.config import TrainConfig
from dxagent.errors import CheckpointError
from dxagent.kb import ToyKbSpec, gen_toy_kb, kb_hash
from dxagent.net import AdamState, MlpModel, forward
from dxagent.thresholds import ThresholdInit, ThresholdTable


@pytest.fixture()
def bundle(toy_kb, rng):
    policy = MlpModel.init([30, 16, 30], rng)
    classifier = MlpModel.init([30, 16, 20], rng)
    return CheckpointBundle(
        kb_hash=kb_hash(toy_kb),
        policy=policy,
        classifier=classifier,
        policy_adam=AdamState.init(policy),
        classifier_adam=AdamState.init(classifier),
        thresholds=ThresholdTable.from_init(ThresholdInit(), 20),
        train_config=TrainConfig(),
    )


def test_roundtrip_bit_identical(tmp_path, bundle, rng):
    path = tmp_path / "ckpt.json"
    save_checkpoint(bundle, path)
    loaded = load_checkpoint(path)

    x = rng.normal(size=30)
    a, _ = forward(bundle.policy, x)
    b, _ = forward(loaded.policy, x)
    np.testing.assert_array_equal(a, b)
    for wa, wb in zip(bundle.classifier.weights, loaded.classifier.weights):
        np.testing.assert_array_equal(wa, wb)
    np.testing.assert_array_equal(bundle.thresholds.values, loaded.thresholds.values)
    assert loaded.train_config == bundle.train_config
    assert loaded.kb_hash == bundle.kb_hash

    path2 = tmp_path / "ckpt2.json"
    save_checkpoint(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_adam_state_roundtrips(tmp_path, bundle):
    bundle.policy_adam.step = 17
    bundle.policy_adam.m_weights[0][0, 0] = 0.123456789
    path = tmp_path / "ckpt.json"
    save_checkpoint(bundle, path)
    loaded = load_checkpoint(path)
    assert loaded.policy_adam.step == 17
    assert loaded.policy_adam.m_weights[0][0, 0] == 0.123456789


def test_corrupt_file_is_checkpoint_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{oops")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    path.write_text(json.dumps({"format_version": 1}))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_version_mismatch_rejected(tmp_path, bundle):
    path = tmp_path / "ckpt.json"
    save_checkpoint(bundle, path)
    obj = json.loads(path.read_text())
    obj["format_version"] = 99
    path.write_text(json.dumps(obj))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_kb_hash_mismatch(bundle, caplog):
    other = gen_toy_kb(ToyKbSpec(5, 3, 1.0, 0.5), seed=0)
    with pytest.raises(CheckpointError, match="hash"):
        check_kb_compatibility(bundle, other)
    with caplog.at_level("WARNING"):
        check_kb_compatibility(bundle, other, override=True)
    assert any("does not match" in rec.message for rec in caplog.records)


def test_kb_hash_match_passes(bundle, toy_kb):
    check_kb_compatibility(bundle, toy_kb)
