import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from statlab.chart import Chart, StatStructure  # noqa: E402
from statlab.gallery import FixtureSpec, build  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def constant4():
    return build(FixtureSpec("constant_distinct", 4, {"c": 1.0}))


@pytest.fixture(scope="session")
def linear4():
    return build(FixtureSpec("linear_distinct", 4))


@pytest.fixture(scope="session")
def hyperbolic():
    return build(FixtureSpec("hyperbolic_plane", 2))


@pytest.fixture(scope="session")
def hyperbolic_cubic():
    """Hyperbolic metric with the cubic form of the holomorphic differential z^2 dz^3.

    Trace-free and conjugate symmetric, with genuinely curved g and
    non-constant A.
    """
    chart = Chart(2, ((-1.0, 1.0), (1.0, 3.0)), (3, 3))
    h = "1/x2^2"
    return StatStructure(
        chart,
        {(0, 0): h, (1, 1): h},
        {
            (0, 0, 0): "x1^2 - x2^2",
            (0, 0, 1): "-2*x1*x2",
            (0, 1, 1): "x2^2 - x1^2",
            (1, 1, 1): "2*x1*x2",
        },
        name="hyperbolic_cubic",
    )
