import numpy as np
import pytest

from skt import Coefficients, Grid, SchemeConfig, check_admissibility


def random_admissible(rng, reactions=True):
    """Random coefficients passing the admissibility test, with bounded reaction."""
    while True:
        a11, a12, a21, a22 = rng.uniform(0.05, 2.0, 4)
        d1, d2 = rng.uniform(0.2, 2.0, 2)
        kw = dict(d1=d1, d2=d2, a11=a11, a12=a12, a21=a21, a22=a22)
        if reactions:
            kw.update(b1=rng.uniform(0.5, 2), b2=rng.uniform(0, 1), c1=rng.uniform(0, 1),
                      c2=rng.uniform(0.5, 2), a1=rng.uniform(0, 2), a2=rng.uniform(0, 2))
        c = Coefficients(**kw)
        if check_admissibility(c).admissible:
            return c


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_c():
    """The worked admissible example: alpha = 0.5, d0 = 1."""
    return Coefficients(d1=1, d2=1, a11=1, a12=1, a21=1, a22=1,
                        b1=1, b2=0.5, c1=0.5, c2=1, a1=1, a2=1)


@pytest.fixture
def heat_c():
    return Coefficients(d1=1.0, d2=0.5, a11=0, a12=0, a21=0, a22=0)


@pytest.fixture
def line():
    return Grid.unit_interval(24)


@pytest.fixture
def square():
    return Grid.unit_square(8, 6)


@pytest.fixture
def cfg():
    return SchemeConfig(k=0.02, nonlinear_tol=1e-11)
