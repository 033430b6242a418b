import numpy as np
import pytest

from nonnoether.expr import Chart, Sampler, parse
from nonnoether.multifield import Form, Multivector
from nonnoether.systems import toda


@pytest.fixture(scope="session")
def sample():
    return toda()


@pytest.fixture(scope="session")
def chart(sample):
    return sample.chart


@pytest.fixture
def sampler():
    return Sampler(4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def P(chart):
    return lambda s: parse(s, chart)


def vector(chart, *comps):
    return Multivector.vector(chart, [parse(c, chart) if isinstance(c, str) else c for c in comps])


def covector(chart, *comps):
    return Form.covector(chart, [parse(c, chart) if isinstance(c, str) else c for c in comps])


def same(a, b, sampler, tol=1e-9):
    """Fields or expressions agree at the sample points."""
    zt = (a - b).is_zero(sampler, tol) if hasattr(a, "coeffs") else sampler.is_zero(a - b, tol)
    return zt.ok


def four_chart():
    return Chart.standard(4)
