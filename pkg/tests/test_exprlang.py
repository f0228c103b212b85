import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statlab import exprlang as el


def test_parse_and_evaluate_basic():
    e = el.parse("x1*x2 + 3", 2)
    assert el.evaluate(e, (2.0, 5.0)) == 13.0
    assert el.evaluate(el.parse("sin(x1)", 1), (0.0,)) == 0.0
    assert el.evaluate(el.parse("x1^2 + x2^2", 2), (3.0, 4.0)) == 25.0


@pytest.mark.parametrize(
    "src,val",
    [
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("8/2/2", 2.0),
        ("2 - 3 - 4", -5.0),
        ("-(1+2)*3", -9.0),
        ("exp(0) + log(1) + sqrt(4) + tanh(0) + cos(0)", 4.0),
        ("1e-3 * 1000", 1.0),
    ],
)
def test_precedence_and_associativity(src, val):
    assert el.evaluate(el.parse(src, 1), (0.0,)) == pytest.approx(val)


def test_syntax_error_offset():
    with pytest.raises(el.ExprSyntaxError) as exc:
        el.parse("x1 +", 1)
    assert exc.value.offset == 4
    assert "offset 4" in str(exc.value)


def test_errors():
    with pytest.raises(el.CoordinateRangeError):
        el.parse("x3", 2)
    with pytest.raises(el.UnknownIdentifierError):
        el.parse("foo(x1)", 1)
    with pytest.raises(el.UnknownIdentifierError):
        el.parse("y1", 1)
    with pytest.raises(el.ExprSyntaxError):
        el.parse("(x1", 1)
    with pytest.raises(el.ExprSyntaxError):
        el.parse("x1 $ 2", 1)


@pytest.mark.parametrize("src,p", [("log(x1)", (-1.0,)), ("sqrt(x1)", (-1.0,)), ("1/x1", (0.0,)), ("x1^0.5", (-2.0,))])
def test_domain_errors(src, p):
    with pytest.raises(el.DomainError):
        el.evaluate(el.parse(src, 1), p)


def test_differentiate_examples():
    d = el.differentiate(el.parse("x1^2", 1), 0)
    assert d == el.BinOp("*", el.Num(2.0), el.Var(0))
    assert el.differentiate(el.parse("x1*x2", 2), 1) == el.Var(0)
    ds = el.differentiate(el.parse("sin(x1)", 1), 0)
    h = 1e-5
    fd = (math.sin(h) - math.sin(-h)) / (2 * h)
    assert el.evaluate(ds, (0.0,)) == 1.0
    assert abs(el.evaluate(ds, (0.0,)) - fd) <= 1e-9


def test_constant_folding():
    assert el.differentiate(el.parse("3*x2 + 2", 2), 0) == el.Num(0.0)
    # parse keeps the written tree; derivatives fold literal subtrees
    assert isinstance(el.parse("2*3+1", 1), el.BinOp)
    assert el.differentiate(el.parse("2*3*x1", 1), 0) == el.Num(6.0)


# random expressions -------------------------------------------------------

N = 3


def _exprs():
    leaf = st.one_of(
        st.integers(min_value=1, max_value=N).map(lambda i: f"x{i}"),
        st.floats(min_value=0.1, max_value=3.0).map(lambda v: f"{v:.3f}"),
    )

    def extend(children):
        return st.one_of(
            st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            st.tuples(children, st.integers(min_value=2, max_value=3)).map(lambda t: f"({t[0]})^{t[1]}"),
            st.tuples(st.sampled_from(["sin", "cos", "tanh", "exp"]), children).map(lambda t: f"{t[0]}({t[1]})"),
            children.map(lambda c: f"-{c}"),
        )

    return st.recursive(leaf, extend, max_leaves=8)


@settings(max_examples=100, deadline=None)
@given(src=_exprs(), seed=st.integers(0, 2**31 - 1))
def test_derivative_matches_central_difference(src, seed):
    e = el.parse(src, N)
    rng = np.random.default_rng(seed)
    h = 1e-5
    for _ in range(10):
        p = rng.uniform(-1, 1, N)
        for i in range(N):
            try:
                d = el.evaluate(el.differentiate(e, i), p)
                step = np.zeros(N)
                step[i] = h
                fd = (el.evaluate(e, p + step) - el.evaluate(e, p - step)) / (2 * h)
            except el.DomainError:
                continue
            scale = max(1.0, abs(d), abs(el.evaluate(e, p)))
            assert abs(d - fd) <= 1e-6 * scale


@settings(max_examples=200, deadline=None)
@given(src=_exprs())
def test_print_parse_round_trip(src):
    e = el.parse(src, N)
    e2 = el.parse(el.to_source(e), N)
    assert e2 == e
    assert el.to_source(e2) == el.to_source(e)


def test_round_trip_on_fixture_expressions(linear4, hyperbolic, hyperbolic_cubic):
    for s in (linear4, hyperbolic, hyperbolic_cubic):
        for e in list(s.g_exprs.values()) + list(s.A_exprs.values()):
            assert el.parse(el.to_source(e), s.n) == e
