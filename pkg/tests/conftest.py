import numpy as np
import pytest

from papdyn.config import load_config
from papdyn.funcmodel import ActivationSpec
from papdyn.measures import WeightedMeasure
from papdyn.netmodel import NetModel

LINEAR = ActivationSpec("piecewise_linear_saturation", saturation=10.0)


@pytest.fixture(scope="session")
def ex41_config():
    return load_config("example_4_1")


@pytest.fixture(scope="session")
def ex41(ex41_config):
    return ex41_config.build_model()


@pytest.fixture(scope="session")
def rho1():
    return WeightedMeasure.from_density("exp(sin(t))", name="rho1")


@pytest.fixture(scope="session")
def rho2():
    return WeightedMeasure.two_piece("exp(t)", "1", name="rho2")


@pytest.fixture(scope="session")
def lebesgue():
    return WeightedMeasure.lebesgue()


@pytest.fixture(scope="session")
def decay_toy():
    """x' = -2x + g(x(t-1)), g = sin: bar_a L^g = 1, c* = 2."""
    return NetModel.build(1, c=["2"], a=[["1"]], history=["1"])


@pytest.fixture(scope="session")
def contraction_toy():
    """x' = -x + 0.5 x + 1 (linear f): fixed point x = 2, q1 = 0.5."""
    return NetModel.build(1, c=["1"], I=["1"], d=[["0.5"]], f_act=[LINEAR])


def const_history(*values):
    v = np.asarray(values, dtype=float)
    return lambda s: np.tile(v, (np.size(s), 1))
