"""Held-out evaluation and the threshold experiment protocols.

Inference is greedy by default: argmax policy actions, frozen thresholds,
forced diagnosis at the step limit.  Metrics cover diagnosis accuracy, mean
inquiring turns, match rate (positive answers per inquiry turn) and a summary
of the per-disease threshold table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .checkpoint import CheckpointBundle, check_kb_compatibility, load_checkpoint
from .config import TrainConfig
from .kb import KnowledgeBase
from .patients import make_sampler
from .thresholds import ThresholdInit
from .trainer import (
    STREAM_EVAL_EPISODE,
    EpisodeRecord,
    TrainResult,
    episode_rng,
    format_float,
    run_episodes_batch,
    train,
)

EVAL_BATCH = 512


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    mean_turns: float
    match_rate: float
    n_patients: int
    threshold_mean: float
    threshold_std: float
    threshold_median: float
    per_disease_thresholds: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "mean_turns": self.mean_turns,
            "match_rate": self.match_rate,
            "n_patients": self.n_patients,
            "threshold_summary": {
                "mean": self.threshold_mean,
                "std": self.threshold_std,
                "median": self.threshold_median,
                "per_disease": list(self.per_disease_thresholds),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def match_rate(episodes: Sequence[EpisodeRecord]) -> float:
    """Mean over episodes of positive answers per inquiry turn; 0 when empty."""
    if not episodes:
        return 0.0
    return float(np.mean([ep.positives_found / ep.turns for ep in episodes if ep.turns > 0] or [0.0]))


def evaluate(
    bundle: CheckpointBundle | str | Path,
    kb: KnowledgeBase,
    n_patients: int,
    seed: int,
    greedy: bool = True,
    override_kb_hash: bool = False,
) -> Metrics:
    """Run held-out inference episodes and aggregate metrics.

    Deterministic given (checkpoint, kb, seed); patients come from
    per-episode streams derived from the seed.
    """
    if not isinstance(bundle, CheckpointBundle):
        bundle = load_checkpoint(bundle)
    check_kb_compatibility(bundle, kb, override=override_kb_hash)
    cfg = bundle.train_config
    sampler = make_sampler(kb, cfg.setvalued_sim_config())
    episodes: list[EpisodeRecord] = []
    done = 0
    while done < n_patients:
        b = min(EVAL_BATCH, n_patients - done)
        rngs = [episode_rng(seed, STREAM_EVAL_EPISODE, done + i) for i in range(b)]
        patients = [sampler(rng) for rng in rngs]
        episodes.extend(
            run_episodes_batch(
                kb, patients, bundle.policy, bundle.classifier, bundle.thresholds, cfg,
                rngs=None if greedy else rngs,
                greedy=greedy,
                collect_transitions=False,
            )
        )
        done += b
    values = np.asarray(bundle.thresholds.values, dtype=float)
    return Metrics(
        accuracy=float(np.mean([ep.correct for ep in episodes])),
        mean_turns=float(np.mean([ep.turns for ep in episodes])),
        match_rate=match_rate(episodes),
        n_patients=n_patients,
        threshold_mean=float(np.mean(values)),
        threshold_std=float(np.std(values)),
        threshold_median=float(np.median(values)),
        per_disease_thresholds=tuple(float(v) for v in values),
    )


def repeat_evaluate(
    bundle: CheckpointBundle | str | Path,
    kb: KnowledgeBase,
    n_patients: int,
    seed: int,
    repeats: int,
    greedy: bool = True,
    override_kb_hash: bool = False,
) -> dict:
    """Evaluate over ``repeats`` independent held-out draws (seeds seed,
    seed+1, ...) and report per-run rows plus mean and standard deviation."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    runs = [
        evaluate(bundle, kb, n_patients, seed + i, greedy=greedy, override_kb_hash=override_kb_hash)
        for i in range(repeats)
    ]
    def stats(values):
        arr = np.asarray(values, dtype=float)
        return {"mean": float(arr.mean()), "std": float(arr.std())}
    return {
        "repeats": repeats,
        "runs": [
            {"seed": seed + i, "accuracy": m.accuracy, "mean_turns": m.mean_turns, "match_rate": m.match_rate}
            for i, m in enumerate(runs)
        ],
        "accuracy": stats([m.accuracy for m in runs]),
        "mean_turns": stats([m.mean_turns for m in runs]),
        "match_rate": stats([m.match_rate for m in runs]),
    }


def write_metrics(metrics: Metrics, path: str | Path) -> None:
    Path(path).write_text(metrics.to_json(), encoding="utf-8")


def thresholds_csv(kb: KnowledgeBase, values: Sequence[float]) -> str:
    lines = ["disease_id,name,threshold"]
    for d, v in enumerate(values):
        lines.append(f"{d},{kb.disease_name(d)},{format_float(v)}")
    return "\n".join(lines) + "\n"


def write_thresholds_csv(kb: KnowledgeBase, values: Sequence[float], path: str | Path) -> None:
    Path(path).write_text(thresholds_csv(kb, values), encoding="utf-8")


# ---------------------------------------------------------------------------
# Experiment protocols: fixed-threshold sweep and init robustness.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    label: str
    metrics: Metrics
    result: TrainResult

    def summary(self) -> dict:
        return {
            "label": self.label,
            "accuracy": self.metrics.accuracy,
            "mean_turns": self.metrics.mean_turns,
            "match_rate": self.metrics.match_rate,
            "threshold_mean": self.metrics.threshold_mean,
            "threshold_std": self.metrics.threshold_std,
        }


def fixed_threshold_sweep(
    kb: KnowledgeBase,
    cfg: TrainConfig,
    values: Sequence[float],
    n_eval: int = 2000,
    eval_seed: int = 10_000,
) -> list[SweepRow]:
    """Train once per fixed threshold plus once adaptive, all on the same
    seeds, and evaluate each run identically."""
    rows: list[SweepRow] = []
    adaptive_cfg = cfg.with_overrides(threshold_mode="adaptive")
    result = train(kb, adaptive_cfg)
    rows.append(SweepRow("adaptive", evaluate(result.to_checkpoint(), kb, n_eval, eval_seed), result))
    for v in values:
        fixed_cfg = cfg.with_overrides(threshold_mode="fixed", fixed_threshold=float(v))
        result = train(kb, fixed_cfg)
        rows.append(SweepRow(f"fixed_{v:g}", evaluate(result.to_checkpoint(), kb, n_eval, eval_seed), result))
    return rows


def init_robustness(
    kb: KnowledgeBase,
    cfg: TrainConfig,
    inits: Sequence[tuple[str, ThresholdInit]],
    n_eval: int = 2000,
    eval_seed: int = 10_000,
) -> list[SweepRow]:
    """Train once per threshold initialization, same data seeds, and report
    final threshold statistics alongside held-out metrics."""
    rows: list[SweepRow] = []
    for label, init in inits:
        run_cfg = cfg.with_overrides(threshold_mode="adaptive", threshold_init=init)
        result = train(kb, run_cfg)
        rows.append(SweepRow(label, evaluate(result.to_checkpoint(), kb, n_eval, eval_seed), result))
    return rows


def sweep_table_csv(rows: Sequence[SweepRow]) -> str:
    cols = ["label", "accuracy", "mean_turns", "match_rate", "threshold_mean", "threshold_std"]
    lines = [",".join(cols)]
    for row in rows:
        s = row.summary()
        cells = [s["label"]] + [format_float(s[c]) for c in cols[1:]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
