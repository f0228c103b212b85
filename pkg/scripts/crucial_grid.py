"""Sweep the spectral contraction inequality over the standard (n, H3, eps) grid."""

import argparse
import itertools
import time

from statlab.inequalities import crucial_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()

    print(f"{'n':>2} {'H3':>5} {'eps':>4} {'viol':>5} {'min rel slack':>14}")
    t0 = time.perf_counter()
    total = 0
    for n, h3, eps in itertools.product((2, 3, 4, 5), (0.0, -0.5, -2.0), (0.0, 0.3, 1.0)):
        rep = crucial_sweep(n, h3, eps, args.samples, seed=args.seed, threads=args.threads)
        s = rep.summary
        total += s["violations"]
        print(f"{n:>2} {h3:>5} {eps:>4} {s['violations']:>5} {s['min_rel_slack']:>14.3e}")
    print(f"total violations {total} in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
