import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statlab.chart import (
    Chart,
    ChartError,
    DegenerateInput,
    NotPositiveDefinite,
    Plane,
    StatStructure,
    StepOutsideDomain,
    TensorValue,
    fd_partial,
    gram_schmidt,
    metric_at,
    orthonormalize,
)
from statlab.gallery import FIXTURES, FixtureSpec, build


def test_chart_validation():
    with pytest.raises(ChartError):
        Chart(1, ((0.0, 1.0),), (3,))
    with pytest.raises(ChartError):
        Chart(2, ((0.0, 1.0), (2.0, 1.0)), (3, 3))
    with pytest.raises(ChartError):
        Chart(2, ((0.0, 1.0), (0.0, 1.0)), (1, 3))


def test_grid_points_cover_box():
    c = Chart(2, ((0.0, 1.0), (-1.0, 1.0)), (2, 3))
    pts = c.grid_points()
    assert pts.shape == (6, 2)
    assert np.allclose(pts[0], [0, -1]) and np.allclose(pts[-1], [1, 1])
    assert all(c.contains(p) for p in pts)


def test_metric_examples(hyperbolic):
    s = StatStructure(Chart.box(3))
    g, gi = metric_at(s, np.zeros(3))
    assert np.array_equal(g.components, np.eye(3))
    assert np.array_equal(gi.components, np.eye(3))
    g, gi = metric_at(hyperbolic, (0.0, 2.0))
    assert np.allclose(g.components, np.diag([0.25, 0.25]), atol=0, rtol=1e-15)
    assert np.allclose(gi.components, np.diag([4.0, 4.0]), atol=0, rtol=1e-14)
    assert np.array_equal(g.components, g.components.T)
    bad = StatStructure(Chart.box(2), {(0, 0): "-1"})
    with pytest.raises(NotPositiveDefinite) as exc:
        metric_at(bad, (0.0, 0.0))
    assert exc.value.min_eigenvalue == pytest.approx(-1.0)


@pytest.mark.parametrize("name,n", [("trivial", 3), ("constant_distinct", 4), ("linear_distinct", 4), ("hyperbolic_plane", 2)])
def test_metric_inverse_product(name, n, rng):
    s = build(FixtureSpec(name, n))
    for p in s.chart.random_points(rng, 10):
        g, gi = metric_at(s, p)
        assert np.max(np.abs(g.components @ gi.components - np.eye(n))) <= 1e-10


def test_orthonormalize_examples(hyperbolic):
    s = StatStructure(Chart.box(2))
    assert np.allclose(orthonormalize(s, (0, 0), np.eye(2)), np.eye(2))
    out = orthonormalize(s, (0, 0), [[1.0, 0.0], [1.0, 1.0]])
    assert np.allclose(out, np.eye(2), atol=1e-15)
    out = orthonormalize(hyperbolic, (0.0, 2.0), [[1.0, 0.0]])
    assert np.allclose(out, [[2.0, 0.0]])
    with pytest.raises(DegenerateInput):
        orthonormalize(s, (0, 0), [[1.0, 1.0], [2.0, 2.0]])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 5))
def test_gram_schmidt_orthonormal_and_idempotent(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    g = M @ M.T + n * np.eye(n)
    V = rng.standard_normal((n, n))
    if abs(np.linalg.det(V @ g @ V.T)) < 1e-6:
        return
    E = gram_schmidt(g, V)
    assert np.max(np.abs(E @ g @ E.T - np.eye(n))) <= 1e-10
    assert np.max(np.abs(gram_schmidt(g, E) - E)) <= 1e-12


def test_plane_requires_independent_vectors():
    Plane(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    with pytest.raises(DegenerateInput):
        Plane(np.array([1.0, 0.0]), np.array([2.0, 0.0]))


def test_tensor_value_symmetry_check():
    T = TensorValue(np.array([[0.0, 1.0], [1.0, 0.0]]), "dd", ((0, 1, "sym"),))
    assert T.symmetry_residual() == 0.0
    with pytest.raises(ValueError):
        TensorValue(np.array([[0.0, 1.0], [0.0, 0.0]]), "dd", ((0, 1, "sym"),)).check()


def test_fd_partial_examples(hyperbolic):
    s = StatStructure(Chart.box(2), A_exprs={(0, 0, 0): "2"})
    assert np.all(fd_partial(s, "A", (0.0, 0.0), 0).components == 0)
    hyp = hyperbolic.replace(chart=Chart(2, ((-1.0, 1.0), (0.5, 3.0)), (3, 3)))
    d = fd_partial(hyp, "g", (0.0, 1.0), 1).components
    assert abs(d[0, 0] + 2.0) <= 1e-9
    d_r = fd_partial(hyp, "g", (0.0, 1.0), 1, h=1e-3, richardson=True).components
    assert abs(d_r[0, 0] + 2.0) <= 1e-9
    with pytest.raises(StepOutsideDomain):
        fd_partial(hyp, "g", (0.0, 1.0), 1, h=1.0)


@pytest.mark.parametrize("name", FIXTURES)
def test_fd_partial_matches_symbolic(name, rng):
    n = 2 if name == "hyperbolic_plane" else 4
    s = build(FixtureSpec(name, n))
    for p in s.chart.random_points(rng, 5, margin=0.1):
        jets = s.jets_at(p, order=1)
        for i in range(n):
            for field, jet in (("g", jets.g), ("A", jets.A)):
                fd = np.asarray(fd_partial(s, field, p, i).components)
                sym = jet.d[i]
                scale = np.maximum(1.0, np.abs(sym))
                assert np.max(np.abs(fd - sym) / scale) <= 1e-6


def test_duplicate_components_rejected():
    with pytest.raises(ChartError):
        StatStructure(Chart.box(3), A_exprs={(0, 1, 2): "1", (2, 1, 0): "2"})
