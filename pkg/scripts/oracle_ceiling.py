#!/usr/bin/env python3
"""Measure the exact-posterior greedy reference on the toy KB, both with the
episode step cap and unlimited, to establish the attainable accuracy ceiling.

Usage: python scripts/oracle_ceiling.py [--patients N] [--max-turns T]
"""

import argparse
import math
import sys

from dxagent.kb import ToyKbSpec, gen_toy_kb
from dxagent.oracle import oracle_evaluate


def closed_form_t15(n_noise: int = 10, p: float = 0.3, m: int = 20, t: int = 15) -> float:
    """Best possible accuracy at step cap t when noise findings are iid across
    diseases: scan signatures, guess uniformly among survivors at timeout."""
    p_sig = sum(
        math.comb(n_noise, k) * p**k * (1 - p) ** (n_noise - k) / (1 + k)
        for k in range(n_noise + 1)
    )
    leftover = m - t
    scan = t / m + (leftover / m) * (1 / leftover)
    return p_sig + (1 - p_sig) * scan


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--patients", type=int, default=800)
    parser.add_argument("--max-turns", type=int, default=15)
    parser.add_argument("--seed", type=int, default=99)
    args = parser.parse_args()

    kb = gen_toy_kb(ToyKbSpec(20, 10, 1.0, 0.3), seed=7)
    print(f"closed-form ceiling at T={args.max_turns}: {closed_form_t15(t=args.max_turns):.4f}")
    capped = oracle_evaluate(kb, args.patients, seed=args.seed, max_turns=args.max_turns)
    print(f"measured reference at T={args.max_turns}: accuracy={capped.accuracy:.4f} "
          f"mean_turns={capped.mean_turns:.2f} (n={capped.n_patients})")
    unlimited = oracle_evaluate(kb, args.patients, seed=args.seed, max_turns=None)
    print(f"measured reference unlimited: accuracy={unlimited.accuracy:.4f} "
          f"mean_turns={unlimited.mean_turns:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
