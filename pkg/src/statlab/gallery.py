"""Built-in fixture structures and the alpha-deformation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import exprlang as el
from .chart import Chart, StatStructure
from .connection import structure_residuals
from .curvature import conjugate_symmetry_report, projective_witness_at
from .report import Check, VerificationReport

__all__ = [
    "FIXTURES",
    "FixtureSpec",
    "InvalidSpec",
    "build",
    "alpha_transform",
    "witness_report",
    "harmonic_cubic_structure",
]

FIXTURES = ("trivial", "constant_distinct", "linear_distinct", "hyperbolic_plane")

DEFAULT_BOX = {
    "trivial": (-1.0, 1.0),
    "constant_distinct": (-1.0, 1.0),
    "linear_distinct": (1.0, 2.0),
}


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    n: int
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in FIXTURES:
            raise InvalidSpec(f"unknown fixture {self.name!r}; choose from {', '.join(FIXTURES)}")
        if self.name in ("constant_distinct", "linear_distinct") and self.n < 3:
            raise InvalidSpec(f"{self.name} needs n >= 3")
        if self.name == "hyperbolic_plane" and self.n != 2:
            raise InvalidSpec("hyperbolic_plane is two-dimensional")
        if self.n < 2:
            raise InvalidSpec("dimension must be >= 2")


def _chart(spec: FixtureSpec) -> Chart:
    grid = spec.params.get("grid", 3)
    grid = (grid,) * spec.n if isinstance(grid, int) else tuple(grid)
    box = spec.params.get("box")
    if box is not None:
        return Chart(spec.n, tuple(tuple(b) for b in box), grid)
    if spec.name == "hyperbolic_plane":
        return Chart(2, ((-1.0, 1.0), (1.0, 3.0)), grid)
    lo, hi = DEFAULT_BOX[spec.name]
    if spec.name == "linear_distinct" and lo <= 0:
        raise InvalidSpec("linear_distinct needs a box inside the positive orthant")
    return Chart(spec.n, ((lo, hi),) * spec.n, grid)


def build(spec: FixtureSpec) -> StatStructure:
    chart = _chart(spec)
    n = spec.n
    label = f"{spec.name}(n={n})"
    if spec.name == "trivial":
        return StatStructure(chart, name=label)
    if spec.name == "hyperbolic_plane":
        if chart.domain[1][0] <= 0:
            raise InvalidSpec("hyperbolic_plane needs x2 > 0 on the whole box")
        h = el.parse("1/x2^2", 2)
        return StatStructure(chart, {(0, 0): h, (1, 1): h}, name=label)
    if spec.name == "constant_distinct":
        c = float(spec.params.get("c", 1.0))
        if not c > 0:
            raise InvalidSpec("constant_distinct needs c > 0")
        A = {t: el.num(c) for t in itertools.combinations(range(n), 3)}
        return StatStructure(chart, A_exprs=A, name=f"constant_distinct(n={n}, c={c:g})")
    # linear_distinct: A_ijk = sum of the coordinates outside {i, j, k}
    if any(a <= 0 for a, _ in chart.domain):
        raise InvalidSpec("linear_distinct needs a box inside the positive orthant")
    A = {}
    for t in itertools.combinations(range(n), 3):
        e: el.Expr = el.num(0.0)
        for l in range(n):
            if l not in t:
                e = el.add(e, el.Var(l))
        A[t] = e
    return StatStructure(chart, A_exprs=A, name=label)


def alpha_transform(s: StatStructure, alpha: float) -> StatStructure:
    """The structure (g, alpha A), i.e. the connection nabla_hat + alpha K."""
    a = el.num(alpha)
    A = {k: el.mul(a, e) for k, e in s.A_exprs.items()}
    return s.replace(A_exprs=A, name=f"{s.name or 'structure'}[alpha={alpha:g}]")


def harmonic_cubic_structure(chart: Chart, f: str | el.Expr, name: str = "") -> StatStructure:
    """Flat metric with A = third derivatives of ``f``.

    The covariant derivative of A is then the (symmetric) fourth derivative
    of ``f``, so the structure is conjugate symmetric.  The trace of A is
    the gradient of the flat Laplacian of ``f``, so harmonic ``f`` gives a
    trace-free structure.
    """
    n = chart.n
    if isinstance(f, str):
        f = el.parse(f, n)
    A = {}
    for t in itertools.combinations_with_replacement(range(n), 3):
        e = f
        for axis in t:
            e = el.differentiate(e, axis)
        A[t] = e
    return StatStructure(chart, A_exprs=A, name=name or "harmonic_cubic")


def witness_report(
    s: StatStructure,
    residual_tol: float = 1e-8,
    witness_min: float = 1e-4,
    points: np.ndarray | None = None,
) -> VerificationReport:
    """Conjugate symmetry and non-projective-flatness over the sample grid."""
    if s.n < 3:
        raise ValueError("witness report needs n >= 3")
    pts = s.chart.grid_points() if points is None else np.asarray(points)
    worst = {"r_minus_rbar": 0.0, "nabla_hat_A_asym": 0.0, "zw_skew": 0.0}
    min_witness = np.inf
    max_witness = 0.0
    worst_structure = 0.0
    for p in pts:
        rep = conjugate_symmetry_report(s, p)
        for k in worst:
            worst[k] = max(worst[k], rep[k])
        w = projective_witness_at(s, p)["max_abs"]
        min_witness = min(min_witness, w)
        max_witness = max(max_witness, w)
        res = structure_residuals(s, p)
        worst_structure = max(worst_structure, res["codazzi"], res["trace_free"])
    conj = max(worst.values()) <= residual_tol
    not_flat = min_witness >= witness_min
    report = VerificationReport(command="witness", subject=s.name)
    report.add(Check("structure_residuals", worst_structure, residual_tol, len(pts)))
    for k, v in worst.items():
        report.add(Check(f"conjugate_symmetry.{k}", v, residual_tol, len(pts), kind="property"))
    report.add(
        Check(
            "projective_witness.min_over_points",
            float(min_witness),
            witness_min,
            len(pts),
            kind="property",
            comparison="ge",
            extra={"max_over_points": float(max_witness)},
        )
    )
    if conj and not_flat:
        verdict = "conjugate symmetric, not projectively flat"
    elif conj:
        verdict = "conjugate symmetric, witnesses vanish"
    else:
        verdict = "not conjugate symmetric"
    report.summary["verdict"] = verdict
    report.summary["witness_max_abs"] = float(max_witness)
    return report
