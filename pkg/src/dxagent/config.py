"""Training configuration: defaults, named presets, file loading.

Desk-scale defaults are sized so a full train/eval cycle on toy KBs runs in
seconds to minutes on a laptop.  The publication-scale network shapes and
learning rates are available as named presets but are not defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from .patients import SetValuedSimConfig
from .rewards import RewardConfig
from .thresholds import ThresholdInit

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib


@dataclass(frozen=True)
class TrainConfig:
    max_steps: int = 15
    gamma: float = 0.99
    beta_init: float = 0.01
    beta_final: float = 0.0
    beta_decay_windows: int | None = None  # None: decay over the whole run
    update_interval_episodes: int = 200
    policy_lr: float = 5e-3
    classifier_lr: float = 1e-2
    total_episodes: int = 100_000
    master_seed: int = 0
    policy_hidden: tuple[int, ...] = (32, 32, 32)
    classifier_hidden: tuple[int, ...] = (32, 32)
    reward: RewardConfig = field(default_factory=RewardConfig)
    threshold_init: ThresholdInit = field(default_factory=ThresholdInit)
    threshold_lambda: float = 0.99
    threshold_epsilon: float = 0.01
    threshold_mode: str = "adaptive"  # adaptive | fixed
    fixed_threshold: float = 0.0
    threshold_update_per_episode: bool = False
    use_return_baseline: bool = False
    baseline_decay: float = 0.9
    stop_check_before_first_inquiry: bool = False
    setvalued_symptom_mean: float = 6.5
    setvalued_exam_mean: float = 5.3
    setvalued_self_report_mean: float = 2.9

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if self.update_interval_episodes < 1:
            raise ValueError("update_interval_episodes must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["policy_hidden"] = list(self.policy_hidden)
        d["classifier_hidden"] = list(self.classifier_hidden)
        ti = d["threshold_init"]
        if ti["values"] is not None:
            ti["values"] = list(ti["values"])
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TrainConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        if "reward" in d and isinstance(d["reward"], dict):
            d["reward"] = RewardConfig(**d["reward"])
        if "threshold_init" in d and isinstance(d["threshold_init"], dict):
            ti = dict(d["threshold_init"])
            if ti.get("values") is not None:
                ti["values"] = tuple(ti["values"])
            d["threshold_init"] = ThresholdInit(**ti)
        for key in ("policy_hidden", "classifier_hidden"):
            if key in d:
                d[key] = tuple(int(x) for x in d[key])
        return cls(**d)

    def with_overrides(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)

    def setvalued_sim_config(self) -> SetValuedSimConfig:
        return SetValuedSimConfig(
            symptom_poisson_mean=self.setvalued_symptom_mean,
            exam_poisson_mean=self.setvalued_exam_mean,
            self_report_poisson_mean=self.setvalued_self_report_mean,
        )


# Publication-scale shapes and learning rates, kept as opt-in presets.
PRESETS: dict[str, dict[str, Any]] = {
    "desk": {},
    "large-kb": {
        "policy_hidden": (5120, 10240, 5120),
        "classifier_hidden": (5120, 5120),
        "policy_lr": 2e-5,
        "classifier_lr": 1e-4,
    },
    "medium-kb": {
        "policy_hidden": (2048, 2048, 2048),
        "classifier_hidden": (2048, 2048),
        "policy_lr": 2e-5,
        "classifier_lr": 1e-4,
    },
}


def apply_preset(cfg: TrainConfig, name: str) -> TrainConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return cfg.with_overrides(**PRESETS[name])


def load_train_config(path: str | Path) -> TrainConfig:
    """Read a TrainConfig from a .json or .toml file; keys mirror the
    dataclass fields and absent keys keep their defaults."""
    path = Path(path)
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    else:
        raw = json.loads(path.read_text(encoding="utf-8"))
    return TrainConfig.from_dict(raw)


def save_train_config(cfg: TrainConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
