import pytest

from blip4os.datasets import load_lead
from blip4os.moments import ParentModel, compute_moments


@pytest.fixture(scope="session")
def normal15():
    """ Normal order statistic moments for n = 15 """
    return compute_moments(ParentModel("normal", "quadrature"), 15)


@pytest.fixture(scope="session")
def lead():
    return load_lead(9)


@pytest.fixture(scope="session")
def exponential5():
    return compute_moments(ParentModel("exponential", "closed"), 5)
