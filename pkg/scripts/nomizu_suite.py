"""Random trace-free cubic forms against the Nomizu-type lower bound, n = 2..8."""

import argparse

from statlab.inequalities import nomizu_sweep

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--samples", type=int, default=10_000)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--max-n", type=int, default=8)
args = ap.parse_args()

for n in range(2, args.max_n + 1):
    s = nomizu_sweep(n, args.samples, seed=args.seed).summary
    print(f"n={n}: violations {s['violations']}, min gap {s['min_gap']:.4g}, min rel gap {s['min_rel_gap']:.3e}")
