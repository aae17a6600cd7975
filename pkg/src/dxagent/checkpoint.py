"""Versioned checkpoint container.

A checkpoint is a single JSON file holding both networks, their Adam states,
the threshold table, the train config and the hash of the KB it was trained
on.  Arrays are stored as base64 little-endian float64 so save -> load is
bit-identical.
"""

from __future__ import annotations

import base64
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .config import TrainConfig
from .errors import CheckpointError
from .kb import KnowledgeBase, kb_hash
from .net import AdamState, MlpModel
from .thresholds import ThresholdMode, ThresholdTable

FORMAT_VERSION = 1

log = logging.getLogger(__name__)


def _encode_array(arr: np.ndarray) -> dict[str, Any]:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def _decode_array(obj: dict[str, Any]) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(obj["shape"]).copy()


def _encode_model(model: MlpModel) -> dict[str, Any]:
    return {
        "layer_dims": list(model.layer_dims),
        "weights": [_encode_array(w) for w in model.weights],
        "biases": [_encode_array(b) for b in model.biases],
    }


def _decode_model(obj: dict[str, Any]) -> MlpModel:
    return MlpModel(
        layer_dims=[int(x) for x in obj["layer_dims"]],
        weights=[_decode_array(w) for w in obj["weights"]],
        biases=[_decode_array(b) for b in obj["biases"]],
    )


def _encode_adam(state: AdamState) -> dict[str, Any]:
    return {
        "step": state.step,
        "m_weights": [_encode_array(a) for a in state.m_weights],
        "m_biases": [_encode_array(a) for a in state.m_biases],
        "v_weights": [_encode_array(a) for a in state.v_weights],
        "v_biases": [_encode_array(a) for a in state.v_biases],
    }


def _decode_adam(obj: dict[str, Any]) -> AdamState:
    return AdamState(
        m_weights=[_decode_array(a) for a in obj["m_weights"]],
        m_biases=[_decode_array(a) for a in obj["m_biases"]],
        v_weights=[_decode_array(a) for a in obj["v_weights"]],
        v_biases=[_decode_array(a) for a in obj["v_biases"]],
        step=int(obj["step"]),
    )


@dataclass
class CheckpointBundle:
    kb_hash: str
    policy: MlpModel
    classifier: MlpModel
    policy_adam: AdamState
    classifier_adam: AdamState
    thresholds: ThresholdTable
    train_config: TrainConfig


def save_checkpoint(bundle: CheckpointBundle, path: str | Path) -> None:
    obj = {
        "format_version": FORMAT_VERSION,
        "kb_hash": bundle.kb_hash,
        "policy": _encode_model(bundle.policy),
        "classifier": _encode_model(bundle.classifier),
        "policy_adam": _encode_adam(bundle.policy_adam),
        "classifier_adam": _encode_adam(bundle.classifier_adam),
        "thresholds": {
            "values": _encode_array(bundle.thresholds.values),
            "lambda": bundle.thresholds.lambda_,
            "epsilon": bundle.thresholds.epsilon,
            "mode": bundle.thresholds.mode.value,
            "fixed_value": bundle.thresholds.fixed_value,
        },
        "train_config": bundle.train_config.to_dict(),
    }
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> CheckpointBundle:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    try:
        version = obj["format_version"]
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format version {version}")
        thresholds = ThresholdTable(
            values=_decode_array(obj["thresholds"]["values"]),
            lambda_=float(obj["thresholds"]["lambda"]),
            epsilon=float(obj["thresholds"]["epsilon"]),
            mode=ThresholdMode(obj["thresholds"]["mode"]),
            fixed_value=float(obj["thresholds"]["fixed_value"]),
        )
        return CheckpointBundle(
            kb_hash=str(obj["kb_hash"]),
            policy=_decode_model(obj["policy"]),
            classifier=_decode_model(obj["classifier"]),
            policy_adam=_decode_adam(obj["policy_adam"]),
            classifier_adam=_decode_adam(obj["classifier_adam"]),
            thresholds=thresholds,
            train_config=TrainConfig.from_dict(obj["train_config"]),
        )
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc


def check_kb_compatibility(bundle: CheckpointBundle, kb: KnowledgeBase, override: bool = False) -> None:
    """Refuse (or warn, with override) when the checkpoint was trained on a
    different KB than the one supplied."""
    actual = kb_hash(kb)
    if actual != bundle.kb_hash:
        message = f"checkpoint KB hash {bundle.kb_hash[:12]}... does not match supplied KB {actual[:12]}..."
        if not override:
            raise CheckpointError(message + " (pass override to proceed)")
        log.warning("%s; proceeding because override was requested", message)
