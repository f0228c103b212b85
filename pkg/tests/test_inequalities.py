import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from oracles import circle_max, sphere_max_dense, t_v_contraction_loop
from statlab.chart import Chart, StatStructure
from statlab.connection import PreconditionViolated
from statlab.gallery import FixtureSpec, build
from statlab.inequalities import (
    CurvaturePinch,
    InvalidCoefficients,
    InvalidPinch,
    InvalidSample,
    NotTraceFree,
    NotUnit,
    PositiveH3,
    PositiveN,
    SpectrumSample,
    a_prime_check,
    bounds_windows,
    bounds_windows_h1h2,
    crucial_pair,
    crucial_pair_contraction,
    crucial_pairs,
    crucial_sweep,
    cubic_sup_bound,
    delta_phi_check,
    delta_psi_check,
    empirical_pinch,
    laplacian_A_check,
    largest_root,
    max_cubic_direction,
    maximizer_checks,
    nomizu_gap,
    nomizu_gaps,
    nomizu_sweep,
    psi_polynomial,
    psi_sup_bound,
    random_spectrum,
    random_trace_free_cubic,
)

# pinch ------------------------------------------------------------------


def test_pinch_conversions():
    p = CurvaturePinch.from_h3_eps(4, -1.0, 0.5)
    assert p.eps == pytest.approx(p.H1 - p.H2)
    assert p.H3 == pytest.approx(p.H2 - (4 - 2) / 2 * p.eps)
    q = CurvaturePinch.from_h1_h2(4, p.H1, p.H2)
    assert q.H3 == pytest.approx(p.H3) and q.eps == pytest.approx(p.eps)
    assert p.window == pytest.approx((p.H2, p.H1))
    with pytest.raises(InvalidPinch):
        CurvaturePinch(3, 0.0, 1.0, 1.0, -1.0)
    with pytest.raises(InvalidPinch):
        CurvaturePinch.from_h3_eps(3, 0.5, 0.0).require_nonpositive_h3()


# spectral contraction ----------------------------------------------------------


def test_crucial_pair_examples():
    lhs, psi = crucial_pair(SpectrumSample(np.array([1.0, -1.0]), np.array([[0.0, -1.0], [-1.0, 0.0]])))
    assert (lhs, psi) == (-6.0, 2.0)
    assert lhs == 3 * psi * -1.0
    assert crucial_pair(SpectrumSample(np.zeros(3), np.zeros((3, 3)))) == (0.0, 0.0)
    c = -0.7
    k = c * (np.ones((3, 3)) - np.eye(3))
    lam = np.array([1.0, 1.0, -2.0])
    assert crucial_pair(SpectrumSample(lam, k))[0] == pytest.approx(t_v_contraction_loop(lam, k), abs=1e-12)


def test_spectrum_sample_validation():
    with pytest.raises(InvalidSample):
        SpectrumSample(np.array([1.0, 1.0]), np.zeros((2, 2)))
    with pytest.raises(InvalidSample):
        SpectrumSample(np.array([1.0, -1.0]), np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(InvalidSample):
        SpectrumSample(np.array([1.0, -1.0]), np.eye(2))


def test_random_spectrum_respects_window(rng):
    pinch = CurvaturePinch.from_h3_eps(5, -0.5, 0.3)
    lam, k = random_spectrum(rng, 5, 200, pinch)
    for a, b in zip(lam, k):
        assert SpectrumSample(a - a.mean() * 0, b).within(pinch)


def test_crucial_pair_two_paths(rng):
    for n in (2, 3, 4, 5):
        pinch = CurvaturePinch.from_h3_eps(n, -0.5, 1.0)
        lam, k = random_spectrum(rng, n, 2500, pinch)
        lhs, _ = crucial_pairs(lam, k)
        direct = crucial_pair_contraction(lam, k)
        assert np.max(np.abs(lhs - direct)) <= 1e-10
        Q = ortho_group.rvs(n, random_state=7)
        rotated = crucial_pair_contraction(lam[:50], k[:50], rotation=Q)
        assert np.max(np.abs(lhs[:50] - rotated)) <= 1e-10


@pytest.mark.parametrize("n,h3,eps", [(4, -1.0, 0.5), (3, -2.0, 0.0), (2, 0.0, 1.0)])
def test_crucial_sweep_examples(n, h3, eps):
    rep = crucial_sweep(n, h3, eps, 100_000 if n == 4 else 20_000, seed=3)
    assert rep.summary["violations"] == 0
    assert rep.passed
    if eps == 0:
        assert rep.summary["min_slack"] >= -1e-9


def test_crucial_sweep_thread_independent():
    a = crucial_sweep(3, -0.5, 0.3, 50_000, seed=11, threads=1)
    b = crucial_sweep(3, -0.5, 0.3, 50_000, seed=11, threads=4)
    assert a.to_dict(timing=False) == b.to_dict(timing=False)


# Nomizu -------------------------------------------------------------------


def test_nomizu_examples(constant4):
    assert nomizu_gap(np.zeros((3, 3, 3)), np.eye(3)) == 0.0
    A = constant4.component_values("A", np.zeros(4))
    assert np.sum(A * A) == 24.0
    assert nomizu_gap(A, np.eye(4)) >= -1e-9
    bad = np.zeros((2, 2, 2))
    bad[0, 0, 0] = 1.0
    with pytest.raises(NotTraceFree):
        nomizu_gap(bad, np.eye(2))


def test_nomizu_non_identity_metric(rng):
    # a trace-free form for g, produced by pulling back an orthonormal one
    n = 3
    M = rng.standard_normal((n, n))
    g = M @ M.T + np.eye(n)
    L = np.linalg.cholesky(g)  # g = L L^T; orthonormal coframe rows of L^T
    Af = random_trace_free_cubic(rng, n)
    A = np.einsum("ia,jb,kc,ijk->abc", L.T, L.T, L.T, Af)
    gap = nomizu_gap(A, g)
    ref, _ = nomizu_gaps(Af)
    assert gap == pytest.approx(float(ref), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_nomizu_random_suite(n, rng):
    A = random_trace_free_cubic(rng, n, 2000)
    gap, psi = nomizu_gaps(A)
    assert np.all(gap >= -1e-9 * (1 + psi**2))


def test_nomizu_sweep_report():
    rep = nomizu_sweep(3, 5000, seed=1)
    assert rep.passed and rep.summary["violations"] == 0


# psi inequality ------------------------------------------------------------


def test_delta_psi_constant_example(constant4):
    r = delta_psi_check(constant4, np.zeros(4))
    assert r["lhs"] == pytest.approx(0.0, abs=1e-12)
    assert r["rhs"] <= 0
    assert r["slack"] >= 0


def test_delta_psi_trivial_and_linear(linear4, rng):
    r = delta_psi_check(build(FixtureSpec("trivial", 3)), np.zeros(3), h3=0.0)
    assert r["lhs"] == 0.0 and r["rhs"] == 0.0
    h3 = empirical_pinch(linear4, 2000).pinch.H3
    for p in linear4.chart.random_points(rng, 5):
        assert delta_psi_check(linear4, p, h3=h3)["slack"] >= -1e-6


def test_delta_psi_curved(hyperbolic_cubic, rng):
    for p in hyperbolic_cubic.chart.random_points(rng, 5):
        local = empirical_pinch(hyperbolic_cubic, 2000, points=[p]).pinch
        r = delta_psi_check(hyperbolic_cubic, p, h3=local.H3)
        assert r["slack"] >= -1e-9 * (1 + abs(r["rhs"]))
        a = a_prime_check(hyperbolic_cubic, p, local.H3)
        assert a["slack"] >= -1e-9 * (1 + abs(a["rhs"]))


def test_delta_psi_precondition():
    s = StatStructure(Chart.box(2), A_exprs={(0, 0, 0): "1"})
    with pytest.raises(PreconditionViolated):
        delta_psi_check(s, (0.0, 0.0), h3=-1.0)


def test_laplacian_A_formula(hyperbolic_cubic, linear4, rng):
    for s in (hyperbolic_cubic, linear4):
        for p in s.chart.random_points(rng, 3):
            r = laplacian_A_check(s, p)
            assert r["rough_vs_rhat"] <= 1e-9 and r["rhat_vs_split"] <= 1e-9


# roots and windows ----------------------------------------------------------


def test_largest_root_examples():
    assert largest_root([1.0, 0.0, 0.0]) == 0.0
    assert largest_root([1.0, 3.0, 4.0]) == pytest.approx(4.0, abs=1e-12)
    for n in (2, 3, 5):
        for h3 in (-0.25, -2.0):
            assert largest_root(psi_polynomial(n, h3)) == pytest.approx(-n * (n - 1) * h3, abs=1e-12)
    with pytest.raises(InvalidCoefficients):
        largest_root([0.0, 1.0, 1.0])
    with pytest.raises(InvalidCoefficients):
        largest_root([1.0, -1.0, 1.0])
    with pytest.raises(InvalidCoefficients):
        largest_root([1.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(b=st.lists(st.floats(0, 100), min_size=2, max_size=5), b0=st.floats(0.1, 10))
def test_largest_root_residual(b, b0):
    coeffs = [b0] + b
    r = largest_root(coeffs)
    assert r >= 0
    signed = np.array([b0] + [-x for x in b])
    assert abs(np.polyval(signed, r)) <= 1e-10 * max(coeffs) * max(1.0, r) ** len(b)


def test_psi_sup_bound():
    assert psi_sup_bound(3, -2.0) == 12.0
    assert psi_sup_bound(4, 0.0) == 0.0
    assert psi_sup_bound(4, -0.5) == 6.0
    with pytest.raises(PositiveH3):
        psi_sup_bound(3, 0.1)


def test_bounds_windows():
    w = bounds_windows(CurvaturePinch.from_h3_eps(4, -1.0, 0.0))
    assert (w["ricci_lo"], w["ricci_hi"], w["scalar_lo"], w["scalar_hi"]) == (-3.0, 9.0, -12.0, 0.0)
    z = bounds_windows(CurvaturePinch.from_h3_eps(3, 0.0, 0.0))
    assert all(v == 0.0 for v in z.values())
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        p = CurvaturePinch.from_h3_eps(n, -rng.uniform(0, 3), rng.uniform(0, 2))
        a, b = bounds_windows(p), bounds_windows_h1h2(n, p.H1, p.H2)
        assert max(abs(a[k] - b[k]) for k in a) <= 1e-12 * (1 + max(abs(v) for v in a.values()))
    with pytest.raises(InvalidPinch):
        bounds_windows(CurvaturePinch.from_h3_eps(3, 1.0, 0.0))


def test_windows_contain_constant_example():
    for c in (0.5, 1.0, 2.0):
        s = build(FixtureSpec("constant_distinct", 4, {"c": c, "grid": 2}))
        w = bounds_windows(empirical_pinch(s, 2000).pinch)
        assert w["ricci_lo"] <= 0.0 <= w["ricci_hi"]
        assert w["scalar_lo"] <= 0.0 <= w["scalar_hi"]


# cubic maximum ----------------------------------------------------------------


def test_max_cubic_examples():
    z = max_cubic_direction(build(FixtureSpec("trivial", 3)), np.zeros(3))
    assert z.value == 0.0
    c3 = build(FixtureSpec("constant_distinct", 3))
    res = max_cubic_direction(c3, np.zeros(3))
    oracle, _ = sphere_max_dense(c3.component_values("A", np.zeros(3)))
    assert res.value == pytest.approx(2 / math.sqrt(3), abs=1e-9)
    assert abs(res.value - oracle) <= 1e-6
    assert np.allclose(np.abs(res.V), 1 / math.sqrt(3), atol=1e-6)
    s = StatStructure(Chart.box(2), A_exprs={(0, 0, 0): "2"})
    res = max_cubic_direction(s, (0.0, 0.0))
    cm, u = circle_max(s.component_values("A", (0.0, 0.0)))
    assert res.value == pytest.approx(2.0, abs=1e-10) and abs(cm - 2.0) <= 1e-9
    assert np.allclose(res.V, [1.0, 0.0], atol=1e-6)


def test_max_cubic_deterministic_and_frame_invariant(rng):
    A = random_trace_free_cubic(rng, 3)
    s = StatStructure(Chart.box(3), A_exprs={k: float(A[k]) for k in _keys(3)})
    a = max_cubic_direction(s, np.zeros(3), seed=5)
    b = max_cubic_direction(s, np.zeros(3), seed=5)
    assert a.value == b.value and np.array_equal(a.V, b.V)
    Q = ortho_group.rvs(3, random_state=3)
    M = rng.standard_normal((3, 3))
    g = M @ M.T + np.eye(3)
    # same abstract tensor in coordinates y = P x, with metric g
    L = np.linalg.cholesky(g)
    P = Q @ L.T
    A2 = np.einsum("ia,jb,kc,ijk->abc", P, P, P, A)
    s2 = StatStructure(Chart.box(3), {k: float(g[k]) for k in _keys(3, 2)}, {k: float(A2[k]) for k in _keys(3)})
    c = max_cubic_direction(s2, np.zeros(3))
    assert abs(c.value - a.value) <= 1e-8


def _keys(n, rank=3):
    import itertools

    return list(itertools.combinations_with_replacement(range(n), rank))


def test_maximizer_checks_constant():
    c3 = build(FixtureSpec("constant_distinct", 3))
    V = np.ones(3) / math.sqrt(3)
    r = maximizer_checks(c3, np.zeros(3), V)
    assert r["eigvec_residual"] <= 1e-8
    assert min(r["lambda_gaps"]) >= -1e-8
    with pytest.raises(NotUnit):
        maximizer_checks(c3, np.zeros(3), np.ones(3))


def test_maximizer_checks_random_constant(rng):
    for _ in range(10):
        A = random_trace_free_cubic(rng, 3)
        s = StatStructure(Chart.box(3), A_exprs={k: float(A[k]) for k in _keys(3)})
        m = max_cubic_direction(s, np.zeros(3), restarts=16)
        r = maximizer_checks(s, np.zeros(3), m.V)
        assert r["identity_K_residual"] <= 1e-8 and r["identity_R_residual"] <= 1e-8
        assert min(r["lambda_gaps"]) >= -1e-8


def test_cubic_max_curved(hyperbolic_cubic, rng):
    pinch = empirical_pinch(hyperbolic_cubic, 2000).pinch
    for p in hyperbolic_cubic.chart.random_points(rng, 3):
        m = max_cubic_direction(hyperbolic_cubic, p)
        r = maximizer_checks(hyperbolic_cubic, p, m.V)
        assert r["eigvec_residual"] <= 1e-8
        assert r["identity_K_residual"] <= 1e-8 and r["identity_R_residual"] <= 1e-8
        d = delta_phi_check(hyperbolic_cubic, p, m.V, min(pinch.H2, 0.0))
        assert d["identity_residual"] <= 1e-9
        assert d["slack"] >= 0


def test_cubic_sup_bound():
    assert cubic_sup_bound(3, 0.0) == 0.0
    assert cubic_sup_bound(3, -1.0) == 2.0
    assert cubic_sup_bound(2, -3.0) == 3.0
    with pytest.raises(PositiveN):
        cubic_sup_bound(3, 0.5)


def test_empirical_pinch_constant(constant4):
    e = empirical_pinch(constant4, 1000, points=np.zeros((1, 4)))
    assert e.pinch.H2 <= -2.0 <= e.pinch.H1
    assert e.pinch.H2 == pytest.approx(-4.0, abs=1e-9)
