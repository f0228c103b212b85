"""Distinct-index curvature components for the constant family over several c."""

from statlab.curvature import projective_witness_at
from statlab.gallery import FixtureSpec, build

import numpy as np

for n in (3, 4, 5):
    for c in (0.5, 1.0, 2.0):
        s = build(FixtureSpec("constant_distinct", n, {"c": c}))
        w = projective_witness_at(s, np.zeros(n))["witness_components"]
        nz = {k: round(v, 12) for k, v in w.items() if abs(v) > 1e-12}
        print(f"n={n} c={c:<4} nonzero: {len(nz):3d}  sample: {dict(list(nz.items())[:3])}")
