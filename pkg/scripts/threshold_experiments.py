#!/usr/bin/env python3
"""Run both threshold experiment protocols on the toy KB and print the
comparison tables: fixed thresholds {2, 1, 0.1, 0.01} vs adaptive, and the
starting-value robustness sweep.

Usage: python scripts/threshold_experiments.py [--episodes N] [--which fixed|init|both]
"""

import argparse
import sys

from dxagent.config import TrainConfig
from dxagent.evaluate import fixed_threshold_sweep, init_robustness, sweep_table_csv
from dxagent.kb import ToyKbSpec, gen_toy_kb
from dxagent.thresholds import ThresholdInit


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-eval", type=int, default=10_000)
    parser.add_argument("--which", choices=["fixed", "init", "both"], default="both")
    args = parser.parse_args()

    kb = gen_toy_kb(ToyKbSpec(20, 10, 1.0, 0.3), seed=7)
    cfg = TrainConfig(total_episodes=args.episodes, master_seed=args.seed)

    if args.which in ("fixed", "both"):
        print("# fixed vs adaptive thresholds", file=sys.stderr)
        rows = fixed_threshold_sweep(kb, cfg, [2.0, 1.0, 0.1, 0.01],
                                     n_eval=args.n_eval, eval_seed=515_151)
        print(sweep_table_csv(rows), end="")

    if args.which in ("init", "both"):
        print("# threshold starting-value robustness", file=sys.stderr)
        inits = [
            ("uniform_0.1", ThresholdInit(kind="uniform", value=0.1)),
            ("uniform_1", ThresholdInit(kind="uniform", value=1.0)),
            ("uniform_2", ThresholdInit(kind="uniform", value=2.0)),
            ("uniform_4", ThresholdInit(kind="uniform", value=4.0)),
            ("random_5", ThresholdInit(kind="random", low=0.0, high=1.0, seed=5)),
        ]
        rows = init_robustness(kb, cfg, inits, n_eval=args.n_eval, eval_seed=515_151)
        print(sweep_table_csv(rows), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
