"""Command-line front end.

Every command prints a JSON report (schema in :mod:`statlab.report`) or a
table with ``--pretty``.  Exit status: 0 when all identity checks pass, 1 on
a failed check, 2 on a malformed spec or invalid arguments.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import __version__
from . import exprlang as el
from .chart import ChartError, NotPositiveDefinite, StatStructure
from .connection import (
    PointGeometry,
    duality_residual,
    metric_compatibility_residual,
    psi_jet,
    structure_residuals,
)
from .curvature import (
    _bundle_from_geometry,
    bracket_KK,
    conjugate_symmetry_report,
    coordinate_planes,
    first_bianchi_residual,
    identity_residuals,
    projective_witness_at,
    riemannian_sectional_at,
    sectional_nabla_at,
)
from .gallery import FixtureSpec, InvalidSpec, alpha_transform, build, witness_report
from .inequalities import (
    CurvaturePinch,
    InvalidPinch,
    bounds_windows,
    bounds_windows_h1h2,
    crucial_sweep,
    cubic_sup_bound,
    delta_phi_check,
    delta_psi_check,
    empirical_pinch,
    largest_root,
    max_cubic_direction,
    maximizer_checks,
    nomizu_sweep,
    psi_polynomial,
    psi_sup_bound,
)
from .report import Check, VerificationReport
from .specfile import SpecError, resolve

__all__ = ["main", "build_parser"]


# ---------------------------------------------------------------------------
# helpers


def _map_points(fn: Callable, pts: np.ndarray, threads: int | None) -> list:
    """Evaluate ``fn`` at every point; results come back in grid order."""
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(pts) <= 1:
        return [fn(p) for p in pts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, pts))


def _structure(args) -> StatStructure:
    return resolve(args.spec, args.grid)


def _hypotheses(geo: PointGeometry, tol: float) -> tuple[bool, bool]:
    trace_free = structure_residuals(geo, None)["trace_free"] <= tol
    conj = max(conjugate_symmetry_report(geo, None).values()) <= tol
    return trace_free, conj


def _close(name: str, value: float, target: float, tol: float, **extra) -> Check:
    return Check(name, abs(value - target), tol, extra={"measured": value, "expected": target, **extra})


# ---------------------------------------------------------------------------
# describe


def _describe_point(s: StatStructure, tol: float):
    def fn(p):
        geo = PointGeometry(s, p)
        b = _bundle_from_geometry(geo)
        res = structure_residuals(geo, None)
        out = {
            "codazzi": res["codazzi"],
            "trace_free": res["trace_free"],
            "duality": duality_residual(geo, None),
            "metric_compatibility": metric_compatibility_residual(geo, None),
            "dual_curvature": b.dual_residual,
            "rho_minus_rhobar": abs(b.rho - b.rhobar),
            "bianchi_mean": first_bianchi_residual(b.Rmean),
            "bianchi_hat": first_bianchi_residual(b.Rhat),
            "antisymmetry": max(
                float(np.max(np.abs(T + T.transpose(1, 0, 2, 3)))) for T in (b.R, b.Rbar, b.Rhat, b.Rmean)
            ),
        }
        out.update(conjugate_symmetry_report(geo, None))
        if res["trace_free"] <= tol:
            out.update(identity_residuals(geo, None, trace_tol=tol))
        else:
            curv_sum = b.R + b.Rbar - 2.0 * b.Rhat - 2.0 * bracket_KK(geo.K)
            out["eq10"] = float(np.max(np.abs(curv_sum)))
        richat = 0.5 * (b.richat + b.richat.T)
        ev = scipy.linalg.eigh(richat, b.g, eigvals_only=True)
        out.update(
            ricci_min=float(ev.min()),
            ricci_max=float(ev.max()),
            rho=b.rho,
            rhobar=b.rhobar,
            rhohat=b.rhohat,
            psi=psi_jet(geo, None).value,
        )
        return out

    return fn


# report names for the keys of identity_residuals
IDENTITY_LABELS = {
    "eq10": "curvature_sum",
    "eq12": "ricci_sum",
    "eq17": "scalar_gap",
    "eq15_gap": "ricci_hat_minus_ric_min_eig",
}


def cmd_describe(args) -> VerificationReport:
    s = _structure(args)
    tol = args.tol_residual
    pts = s.chart.grid_points()
    rows = _map_points(_describe_point(s, tol), pts, args.threads)
    m = len(pts)
    worst = lambda k: max(r[k] for r in rows)  # noqa: E731
    rep = VerificationReport("describe", s.name, args.seed, {"residual": tol})
    label = IDENTITY_LABELS.get
    for k in (
        "codazzi",
        "duality",
        "metric_compatibility",
        "dual_curvature",
        "rho_minus_rhobar",
        "bianchi_mean",
        "bianchi_hat",
        "antisymmetry",
        "eq10",
    ):
        rep.add(Check(label(k, k), worst(k), tol, m))
    trace_free = worst("trace_free") <= tol
    rep.add(Check("trace_free", worst("trace_free"), tol, m, kind="property"))
    for k in ("r_minus_rbar", "nabla_hat_A_asym", "zw_skew"):
        rep.add(Check(f"conjugate_symmetry.{k}", worst(k), tol, m, kind="property"))
    conj = max(worst(k) for k in ("r_minus_rbar", "nabla_hat_A_asym", "zw_skew")) <= tol
    for k in ("eq12", "eq17"):
        if trace_free:
            rep.add(Check(label(k), worst(k), tol, m))
        else:
            rep.add(Check(label(k), math.nan, tol, m, skipped="structure is not trace-free"))
    if trace_free and conj:
        rep.add(Check(label("eq15_gap"), min(r["eq15_gap"] for r in rows), -tol, m, comparison="ge"))
    else:
        rep.add(Check(label("eq15_gap"), math.nan, -tol, m, comparison="ge",
                      skipped="needs a trace-free conjugate symmetric structure"))

    emp = empirical_pinch(s, args.planes, args.seed, refine=True)
    lo = lambda k: min(r[k] for r in rows)  # noqa: E731
    summary = {
        "dimension": s.n,
        "grid_points": m,
        "ricci_hat_eigenvalues": [lo("ricci_min"), worst("ricci_max")],
        "rho": [lo("rho"), worst("rho")],
        "rhobar": [lo("rhobar"), worst("rhobar")],
        "rhohat": [lo("rhohat"), worst("rhohat")],
        "psi": [lo("psi"), worst("psi")],
        "sectional_nabla": [emp.pinch.H2, emp.pinch.H1],
        "sectional_planes": emp.planes,
        "pinch_estimate": {"H1": emp.pinch.H1, "H2": emp.pinch.H2, "H3": emp.pinch.H3, "eps": emp.pinch.eps},
    }
    if emp.pinch.H3 <= 0:
        w = bounds_windows(emp.pinch)
        summary["windows"] = w
        rel = tol * (1.0 + max(abs(x) for x in w.values()))
        rep.add(Check("ricci_window.lower", summary["ricci_hat_eigenvalues"][0] - w["ricci_lo"], -rel, m,
                      kind="property", comparison="ge"))
        rep.add(Check("ricci_window.upper", w["ricci_hi"] - summary["ricci_hat_eigenvalues"][1], -rel, m,
                      kind="property", comparison="ge"))
        rep.add(Check("scalar_window.lower", summary["rhohat"][0] - w["scalar_lo"], -rel, m,
                      kind="property", comparison="ge"))
        rep.add(Check("scalar_window.upper", w["scalar_hi"] - summary["rhohat"][1], -rel, m,
                      kind="property", comparison="ge"))
    rep.summary.update(summary)
    return rep


# ---------------------------------------------------------------------------
# verify


def cmd_verify_crucial(args) -> VerificationReport:
    rep = VerificationReport("verify crucial", seed=args.seed, tolerances={"slack_rel": args.tol_slack})
    cases = list(itertools.product(args.n, args.h3, args.eps))
    total_viol, min_slack, min_rel = 0, math.inf, math.inf
    for n, h3, eps in cases:
        if h3 > 0 or eps < 0:
            raise InvalidPinch("need H3 <= 0 and eps >= 0")
        sub = crucial_sweep(n, h3, eps, args.samples, args.seed, args.threads, args.tol_slack)
        c = sub.checks[0]
        c.name = f"crucial[n={n},h3={h3:g},eps={eps:g}].violations" if len(cases) > 1 else c.name
        rep.add(c)
        total_viol += sub.summary["violations"]
        min_slack = min(min_slack, sub.summary["min_slack"])
        min_rel = min(min_rel, sub.summary["min_rel_slack"])
    rep.subject = ", ".join(f"n={n} H3={h:g} eps={e:g}" for n, h, e in cases)
    rep.summary.update(violations=total_viol, min_slack=min_slack, min_rel_slack=min_rel, cases=len(cases))
    return rep


def cmd_verify_nomizu(args) -> VerificationReport:
    rep = VerificationReport("verify nomizu", seed=args.seed, tolerances={"slack_rel": args.tol_slack})
    total, min_gap, min_rel = 0, math.inf, math.inf
    for n in args.n:
        sub = nomizu_sweep(n, args.samples, args.seed, args.threads, args.tol_slack)
        c = sub.checks[0]
        if len(args.n) > 1:
            c.name = f"nomizu[n={n}].violations"
        rep.add(c)
        total += sub.summary["violations"]
        min_gap = min(min_gap, sub.summary["min_gap"])
        min_rel = min(min_rel, sub.summary["min_rel_gap"])
    rep.subject = "n=" + ",".join(str(n) for n in args.n)
    rep.summary.update(violations=total, min_gap=min_gap, min_rel_gap=min_rel)
    return rep


def gallery_report(seed: int = 0, tol: float = 1e-10, points: int = 20) -> VerificationReport:
    """Fixture checks with known exact values."""
    rep = VerificationReport("verify gallery", "built-in fixtures", seed, {"residual": tol})
    rng = np.random.default_rng(seed)

    fixtures = {
        "trivial3": build(FixtureSpec("trivial", 3)),
        "constant4": build(FixtureSpec("constant_distinct", 4, {"c": 1.0})),
        "constant3c2": build(FixtureSpec("constant_distinct", 3, {"c": 2.0})),
        "constant5": build(FixtureSpec("constant_distinct", 5, {"c": 1.0})),
        "linear4": build(FixtureSpec("linear_distinct", 4)),
        "hyperbolic": build(FixtureSpec("hyperbolic_plane", 2)),
    }
    for key, s in fixtures.items():
        pts = np.concatenate([s.chart.grid_points(), s.chart.random_points(rng, points)])
        worst = 0.0
        for p in pts:
            r = structure_residuals(s, p)
            worst = max(worst, r["codazzi"], r["trace_free"])
        rep.add(Check(f"{key}.structure_residuals", worst, tol, len(pts)))

    c4 = fixtures["constant4"]
    p0 = np.zeros(4)
    rep.add(Check("constant4.nonzero_A_components",
                  abs(int(np.count_nonzero(np.abs(c4.component_values("A", p0)) > 0)) - 24), 0,
                  extra={"expected": 24}))
    cs = conjugate_symmetry_report(c4, p0)
    rep.add(Check("constant4.r_minus_rbar", cs["r_minus_rbar"], 1e-12))
    w = projective_witness_at(c4, p0)["witness_components"]
    rep.add(_close("constant4.witness_123", w["1,2,3"], -1.0, 1e-12))
    rep.add(_close("constant4.k12", sectional_nabla_at(c4, p0, np.eye(4)[:2]), -2.0, 1e-12))
    ids = identity_residuals(c4, p0)
    b = _bundle_from_geometry(PointGeometry(c4, p0))
    rep.add(_close("constant4.rhohat", b.rhohat, 0.0, 1e-9))
    rep.add(_close("constant4.rho", b.rho, -24.0, 1e-9))
    rep.add(Check("constant4.scalar_gap", ids["eq17"], 1e-9))
    rep.add(Check("constant4.ricci_hat_minus_ric_min_eig", ids["eq15_gap"], -1e-9, comparison="ge"))
    w5 = projective_witness_at(fixtures["constant5"], np.zeros(5))["witness_components"]
    rep.add(_close("constant5.witness_123", w5["1,2,3"], -2.0, 1e-12))
    wa = projective_witness_at(alpha_transform(c4, 2.0), p0)["witness_components"]
    rep.add(_close("constant4_alpha2.witness_123", wa["1,2,3"], -4.0, 1e-12))
    a0 = alpha_transform(c4, 0.0)
    rep.add(Check("constant4_alpha0.A_zero", float(np.max(np.abs(a0.component_values("A", p0)))), 0.0))

    lin = fixtures["linear4"]
    A = lin.component_values("A", np.array([1.0, 2.0, 3.0, 4.0]))
    rep.add(_close("linear4.A123_at_1234", float(A[0, 1, 2]), 4.0, 1e-12))
    wr = witness_report(lin, residual_tol=1e-8)
    rep.add(Check("linear4.verdict_positive",
                  0.0 if wr.summary["verdict"] == "conjugate symmetric, not projectively flat" else 1.0, 0.0,
                  extra={"verdict": wr.summary["verdict"]}))
    wc = witness_report(c4, residual_tol=1e-8)
    rep.add(_close("constant4.witness_max_abs", wc.summary["witness_max_abs"], 1.0, 1e-12,
                   verdict=wc.summary["verdict"]))
    wt = witness_report(fixtures["trivial3"], residual_tol=1e-8)
    rep.add(Check("trivial3.witness_max_abs", wt.summary["witness_max_abs"], tol))

    hyp = fixtures["hyperbolic"]
    hp = hyp.chart.random_points(rng, points)
    dev = max(abs(riemannian_sectional_at(hyp, p, np.eye(2)) + 1.0) for p in hp)
    rep.add(Check("hyperbolic.sectional_minus_one", dev, 1e-9, len(hp)))
    return rep


def cmd_verify_gallery(args) -> VerificationReport:
    return gallery_report(args.seed)


def cmd_verify_cubic_max(args) -> VerificationReport:
    s = _structure(args)
    tol = args.tol_residual
    pts = s.chart.grid_points()
    emp = empirical_pinch(s, args.planes, args.seed)
    N = min(emp.pinch.H2, 0.0)

    def fn(p):
        geo = PointGeometry(s, p)
        trace_free, conj = _hypotheses(geo, tol)
        best = max_cubic_direction(s, p, restarts=args.restarts, seed=args.seed)
        chk = maximizer_checks(s, p, best.V) if best.value > 0 else None
        dphi = delta_phi_check(s, p, best.V, N)
        return best, chk, dphi, trace_free and conj

    rows = _map_points(fn, pts, args.threads)
    m = len(pts)
    hyp = all(r[3] for r in rows)
    rep = VerificationReport("verify section4", s.name, args.seed, {"residual": tol, "slack_rel": args.tol_slack})
    active = [r for r in rows if r[1] is not None]
    rep.add(Check("maximizer.converged", float(sum(not r[0].converged for r in rows)), 0.0, m, kind="property"))
    if active:
        rep.add(Check("maximizer.eigvec_residual", max(r[1]["eigvec_residual"] for r in active), tol, len(active)))
        rep.add(Check("maximizer.min_lambda_gap", min(min(r[1]["lambda_gaps"]) for r in active), -tol,
                      len(active), comparison="ge"))
        rep.add(Check("identity.K", max(r[1]["identity_K_residual"] for r in active), tol, len(active)))
    if hyp and active:
        rep.add(Check("identity.R", max(r[1]["identity_R_residual"] for r in active), tol, len(active)))
        rep.add(Check("delta_phi.identity", max(r[2]["identity_residual"] for r in rows), tol, m))
    else:
        why = "needs a trace-free conjugate symmetric structure" if not hyp else "A vanishes"
        rep.add(Check("identity.R", math.nan, tol, m, skipped=why))
        rep.add(Check("delta_phi.identity", math.nan, tol, m, skipped=why))
    rel = [r[2]["slack"] / (1.0 + abs(r[2]["rhs"])) for r in rows]
    rep.add(Check("delta_phi.min_rel_slack", min(rel), -args.tol_slack, m, kind="property", comparison="ge"))
    phi_max = max(r[0].value for r in rows)
    bound = cubic_sup_bound(s.n, N)
    rep.add(Check("phi.within_sup_bound", bound - phi_max, -tol * (1 + bound), m, kind="property",
                  comparison="ge"))
    rep.summary.update(
        hypotheses_hold=hyp,
        N_estimate=N,
        phi_max=phi_max,
        phi_sup_bound=bound,
        maximizers=[
            {"point": p.tolist(), "V": r[0].V.tolist(), "phi": r[0].value} for p, r in zip(pts, rows)
        ],
    )
    return rep


# ---------------------------------------------------------------------------
# bounds and witness


def cmd_bounds(args) -> VerificationReport:
    n = args.n
    if args.h1 is not None or args.h2 is not None:
        if args.h1 is None or args.h2 is None:
            raise InvalidPinch("give both --h1 and --h2")
        pinch = CurvaturePinch.from_h1_h2(n, args.h1, args.h2)
    else:
        if args.h3 is None or args.eps is None:
            raise InvalidPinch("give --h3 and --eps (or --h1 and --h2)")
        pinch = CurvaturePinch.from_h3_eps(n, args.h3, args.eps)
    w = bounds_windows(pinch)
    w2 = bounds_windows_h1h2(n, pinch.H1, pinch.H2)
    psi = psi_sup_bound(n, pinch.H3)
    root = largest_root(psi_polynomial(n, pinch.H3))
    rep = VerificationReport("bounds", f"n={n} H3={pinch.H3:g} eps={pinch.eps:g}", None, {"agreement": 1e-12})
    scale = 1.0 + max(abs(x) for x in w.values())
    rep.add(Check("windows.h1h2_agreement", max(abs(w[k] - w2[k]) for k in w) / scale, 1e-12))
    rep.add(Check("psi_bound.root_agreement", abs(root - psi) / (1.0 + abs(psi)), 1e-12))
    rep.summary.update(
        pinch={"H1": pinch.H1, "H2": pinch.H2, "H3": pinch.H3, "eps": pinch.eps},
        ricci_window=[w["ricci_lo"], w["ricci_hi"]],
        scalar_window=[w["scalar_lo"], w["scalar_hi"]],
        psi_sup_bound=psi,
        largest_root=root,
    )
    return rep


def cmd_witness(args) -> VerificationReport:
    s = _structure(args)
    return witness_report(s, residual_tol=args.tol_residual)


# ---------------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol-residual", type=float, default=1e-8, help="absolute residual tolerance")
    p.add_argument("--tol-slack", type=float, default=1e-9, help="relative slack tolerance")
    p.add_argument("--grid", type=int, default=None, help="override per-axis sample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--pretty", action="store_true", help="print a table instead of JSON")
    p.add_argument("--output", default=None, help="also write the JSON report to this file")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="statlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"statlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("describe", parents=[common], help="curvature summary and identity residuals")
    d.add_argument("spec")
    d.add_argument("--planes", type=int, default=10_000)
    d.set_defaults(func=cmd_describe)

    v = sub.add_parser("verify", help="verification suites")
    vs = v.add_subparsers(dest="suite", required=True)
    c = vs.add_parser("crucial", parents=[common], help="randomized spectral contraction sweep")
    c.add_argument("--n", type=int, nargs="+", required=True)
    c.add_argument("--h3", type=float, nargs="+", required=True)
    c.add_argument("--eps", type=float, nargs="+", required=True)
    c.add_argument("--samples", type=int, default=100_000)
    c.set_defaults(func=cmd_verify_crucial)
    nm = vs.add_parser("nomizu", parents=[common], help="randomized Nomizu inequality sweep")
    nm.add_argument("--n", type=int, nargs="+", required=True)
    nm.add_argument("--samples", type=int, default=10_000)
    nm.set_defaults(func=cmd_verify_nomizu)
    g = vs.add_parser("gallery", parents=[common], help="fixture checks with known values")
    g.set_defaults(func=cmd_verify_gallery)
    s4 = vs.add_parser("section4", aliases=["cubic-max"], parents=[common], help="cubic maximizer pipeline")
    s4.add_argument("spec")
    s4.add_argument("--restarts", type=int, default=32)
    s4.add_argument("--planes", type=int, default=2_000)
    s4.set_defaults(func=cmd_verify_cubic_max)

    b = sub.add_parser("bounds", parents=[common], help="Ricci and scalar windows, psi bound")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--h3", type=float)
    b.add_argument("--eps", type=float)
    b.add_argument("--h1", type=float)
    b.add_argument("--h2", type=float)
    b.set_defaults(func=cmd_bounds)

    w = sub.add_parser("witness", parents=[common], help="conjugate symmetry and projective witnesses")
    w.add_argument("spec")
    w.set_defaults(func=cmd_witness)
    return parser


_INPUT_ERRORS = (SpecError, InvalidSpec, ChartError, el.ExprError, InvalidPinch, NotPositiveDefinite)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        rep = args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"statlab: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"statlab: error: {exc}", file=sys.stderr)
        return 2
    rep.seconds = time.perf_counter() - t0
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json() + "\n")
    print(rep.render() if args.pretty else rep.to_json())
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
