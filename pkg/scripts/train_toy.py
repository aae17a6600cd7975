#!/usr/bin/env python3
"""Train on the 20-disease separable toy KB with the default config and print
held-out metrics; a minimal end-to-end experiment run.

Usage: python scripts/train_toy.py [--episodes N] [--seed S] [--out DIR]
"""

import argparse
import sys
import time
from pathlib import Path

from dxagent.checkpoint import save_checkpoint
from dxagent.config import TrainConfig
from dxagent.evaluate import evaluate, write_metrics, write_thresholds_csv
from dxagent.kb import ToyKbSpec, gen_toy_kb
from dxagent.trainer import curves_to_csv, train


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--eval-patients", type=int, default=10_000)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    kb = gen_toy_kb(ToyKbSpec(20, 10, 1.0, 0.3), seed=7)
    cfg = TrainConfig(master_seed=args.seed)
    if args.episodes:
        cfg = cfg.with_overrides(total_episodes=args.episodes)

    def progress(window, total, row):
        if window % 50 == 0 or window == total - 1:
            print(f"window {window + 1}/{total}: acc={row['accuracy']:.3f} "
                  f"turns={row['mean_turns']:.2f} K={row['threshold_mean']:.3f}", file=sys.stderr)

    start = time.monotonic()
    result = train(kb, cfg, progress=progress)
    print(f"trained {cfg.total_episodes} episodes in {time.monotonic() - start:.0f}s", file=sys.stderr)

    metrics = evaluate(result.to_checkpoint(), kb, args.eval_patients, seed=424_242)
    print(metrics.to_json(), end="")

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(result.to_checkpoint(), args.out / "checkpoint.json")
        (args.out / "curves.csv").write_text(curves_to_csv(result.curves))
        write_metrics(metrics, args.out / "metrics.json")
        write_thresholds_csv(kb, metrics.per_disease_thresholds, args.out / "thresholds.csv")
        print(f"artifacts in {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
