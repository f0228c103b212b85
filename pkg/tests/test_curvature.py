import itertools

import numpy as np
import pytest

from oracles import bracket_loop, fd_riemann, sectional_from
from statlab import exprlang as el
from statlab.chart import Chart, Plane, StatStructure
from statlab.connection import PreconditionViolated, difference_tensor_at
from statlab.curvature import (
    DegeneratePlane,
    conjugate_symmetry_report,
    curvature_bundle_at,
    first_bianchi_residual,
    identity_residuals,
    projective_witness_at,
    random_planes,
    riemannian_sectional_at,
    sectional_nabla_at,
    sectional_values,
)
from statlab.gallery import FixtureSpec, alpha_transform, build, harmonic_cubic_structure

FIXTURES = [
    ("trivial", 3, {}),
    ("constant_distinct", 4, {}),
    ("constant_distinct", 3, {"c": 2.0}),
    ("linear_distinct", 4, {}),
    ("hyperbolic_plane", 2, {}),
]


@pytest.fixture(scope="module", params=FIXTURES, ids=lambda f: f"{f[0]}{f[1]}")
def fixture(request):
    name, n, params = request.param
    return build(FixtureSpec(name, n, params))


def test_trivial_all_zero():
    s = build(FixtureSpec("trivial", 3))
    b = curvature_bundle_at(s, np.zeros(3))
    for name in ("R", "Rbar", "Rhat", "Rmean", "ric", "ricbar", "richat"):
        assert not np.any(getattr(b, name))
    assert b.rho == b.rhobar == b.rhohat == 0.0
    assert all(v == 0 for v in identity_residuals(s, np.zeros(3)).values())


def test_hyperbolic_sectional(hyperbolic, rng):
    for p in hyperbolic.chart.random_points(rng, 20):
        assert riemannian_sectional_at(hyperbolic, p, np.eye(2)) == pytest.approx(-1.0, abs=1e-9)
        R = fd_riemann(hyperbolic, p)
        g = hyperbolic.component_values("g", p)
        assert sectional_from(R, g, np.eye(2)[0], np.eye(2)[1]) == pytest.approx(-1.0, abs=1e-5)
        # A = 0: nabla-curvature equals the metric one
        assert sectional_nabla_at(hyperbolic, p, np.eye(2)) == pytest.approx(-1.0, abs=1e-9)


def test_constant_example_values(constant4):
    p = np.zeros(4)
    b = curvature_bundle_at(constant4, p)
    K = b.K
    brk = np.einsum("dae,ebc->abcd", K, K) - np.einsum("dbe,eac->abcd", K, K)
    assert np.max(np.abs(b.R - brk)) == 0.0
    assert sectional_nabla_at(constant4, p, np.eye(4)[:2]) == pytest.approx(-2.0, abs=1e-12)
    assert b.rhohat == 0.0
    assert b.rho == pytest.approx(-24.0, abs=1e-9)


def test_sectional_n3_matches_bracket_oracle():
    s = build(FixtureSpec("constant_distinct", 3))
    K, _ = difference_tensor_at(s, np.zeros(3))
    B = bracket_loop(K.components, 0, 1)
    expected = (B @ np.eye(3)[1]) @ np.eye(3)[0]  # g([K1,K2] e2, e1) with identity g
    assert sectional_nabla_at(s, np.zeros(3), np.eye(3)[:2]) == pytest.approx(expected, abs=1e-12)


def test_degenerate_plane(constant4):
    with pytest.raises(DegeneratePlane):
        sectional_nabla_at(constant4, np.zeros(4), [[1, 0, 0, 0], [2, 0, 0, 0]])


def test_curvature_invariants(fixture, rng):
    pts = fixture.chart.random_points(rng, 100)
    for p in pts:
        b = curvature_bundle_at(fixture, p)
        for T in (b.R, b.Rbar, b.Rhat, b.Rmean):
            assert np.max(np.abs(T + T.transpose(1, 0, 2, 3))) <= 1e-10
        assert np.array_equal(b.Rmean, 0.5 * (b.R + b.Rbar))
        assert b.dual_residual <= 1e-9
        assert first_bianchi_residual(b.Rmean) <= 1e-9
        assert first_bianchi_residual(b.Rhat) <= 1e-9
        assert abs(b.rho - b.rhobar) <= 1e-9
        ids = identity_residuals(fixture, p)
        scale = 1.0 + float(np.max(np.abs(b.R)))
        assert ids["eq10"] <= 1e-9 * scale and ids["eq12"] <= 1e-9 * scale and ids["eq17"] <= 1e-9 * scale
        assert ids["eq15_gap"] >= -1e-9


def test_sectional_basis_invariance(fixture, rng):
    p = fixture.chart.random_points(rng, 1)[0]
    b = curvature_bundle_at(fixture, p)
    for _ in range(50):
        u, v = rng.standard_normal((2, fixture.n))
        ref = sectional_nabla_at(fixture, p, Plane(u, v))
        vals = []
        for _ in range(10):
            a, c, d, e = rng.standard_normal(4)
            if abs(a * e - c * d) < 1e-3:
                continue
            vals.append(sectional_nabla_at(fixture, p, [a * u + c * v, d * u + e * v]))
        vals.append(float(sectional_values(b, np.array([[u, v]]))[0]))
        assert max(abs(x - ref) for x in vals) <= 1e-9 * (1 + abs(ref))


def _perturbed(n=4):
    s = build(FixtureSpec("constant_distinct", n))
    A = dict(s.A_exprs)
    A[(0, 1, 2)] = el.parse("x1", n)
    return s.replace(A_exprs=A, name="perturbed")


def test_conjugate_symmetry_equivalence_examples(constant4, linear4, rng):
    for p in constant4.chart.random_points(rng, 5):
        assert max(conjugate_symmetry_report(constant4, p).values()) <= 1e-10
    for p in linear4.chart.random_points(rng, 5):
        assert max(conjugate_symmetry_report(linear4, p).values()) <= 1e-9
    pert = _perturbed()
    for p in pert.chart.random_points(rng, 5):
        assert min(conjugate_symmetry_report(pert, p).values()) > 1e-3


def test_identity_precondition():
    s = StatStructure(Chart.box(2), A_exprs={(0, 0, 0): "1"})
    with pytest.raises(PreconditionViolated):
        identity_residuals(s, (0.0, 0.0))


def test_witness_examples(constant4):
    w = projective_witness_at(constant4, np.zeros(4))
    assert w["witness_components"]["1,2,3"] == pytest.approx(-1.0, abs=1e-12)
    assert w["max_abs"] == pytest.approx(1.0, abs=1e-12)
    w5 = projective_witness_at(build(FixtureSpec("constant_distinct", 5)), np.zeros(5))
    assert w5["witness_components"]["1,2,3"] == pytest.approx(-2.0, abs=1e-12)
    w0 = projective_witness_at(build(FixtureSpec("trivial", 3)), np.zeros(3))
    assert w0["max_abs"] == 0.0
    with pytest.raises(ValueError):
        projective_witness_at(build(FixtureSpec("hyperbolic_plane", 2)), (0.0, 2.0))
    # the sum formula -sum_s A_12s A_23s in the orthonormal frame
    A = constant4.component_values("A", np.zeros(4))
    for i, j, l in itertools.permutations(range(4), 3):
        expect = -sum(A[i, j, m] * A[j, l, m] for m in range(4))
        assert w["witness_components"][f"{i + 1},{j + 1},{l + 1}"] == pytest.approx(expect, abs=1e-12)


def test_harmonic_cubic_is_conjugate_symmetric(rng):
    s = harmonic_cubic_structure(Chart.box(3), "x1^3*x2 - x1*x2^3 + x1*x2*x3 + x3^3 - 1.5*x3*(x1^2 + x2^2)")
    for p in s.chart.random_points(rng, 5):
        assert max(conjugate_symmetry_report(s, p).values()) <= 1e-10
        ids = identity_residuals(s, p)
        assert max(ids["eq10"], ids["eq12"], ids["eq17"]) <= 1e-9


def test_alpha_scales_witness(constant4):
    w = projective_witness_at(alpha_transform(constant4, 2.0), np.zeros(4))
    assert w["witness_components"]["1,2,3"] == pytest.approx(-4.0, abs=1e-12)


def test_random_planes_shape(rng):
    assert random_planes(rng, 4, 7).shape == (7, 2, 4)
