"""Maximize A(U,U,U) on the unit sphere and check the maximizer relations."""

import argparse

import numpy as np

from statlab.inequalities import cubic_sup_bound, delta_phi_check, max_cubic_direction, maximizer_checks
from statlab.specfile import resolve

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("spec", nargs="?", default="constant_distinct:n=3,c=1")
ap.add_argument("--N", type=float, default=None, help="sectional lower bound; defaults to the sampled minimum")
args = ap.parse_args()

s = resolve(args.spec)
for p in s.chart.grid_points()[:5]:
    m = max_cubic_direction(s, p)
    chk = maximizer_checks(s, p, m.V)
    print(f"x={np.round(p, 3)} phi={m.value:.10f} eigvec={chk['eigvec_residual']:.2e} "
          f"min gap={min(chk['lambda_gaps']):.4g} K-id={chk['identity_K_residual']:.2e}")
    if args.N is not None:
        d = delta_phi_check(s, p, m.V, args.N)
        print(f"   delta phi slack {d['slack']:.4g}, sup bound {cubic_sup_bound(s.n, args.N):.4g}")
