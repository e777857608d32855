import numpy as np
import pytest

from multitik import Grid, Penalty, PenaltyModel, Problem, make_model, make_test_problem


@pytest.fixture
def scalar_problem():
    # one unknown, K = 1, g = 1, noise level 0.5; every quantity below
    # has a closed form through u(eta) = 1/(1 + eta1 + eta2)
    return Problem(
        K=np.array([[1.0]]),
        g_obs=np.array([1.0]),
        delta=0.5,
        grid=Grid(h=1.0),
        shape=(1,),
    )


@pytest.fixture
def scalar_model():
    return PenaltyModel(Penalty("sq-l2"), Penalty("sq-l2"))


@pytest.fixture(scope="session")
def ex41_problem():
    return make_test_problem("ex41", eps=5e-2, seed=3)


@pytest.fixture(scope="session")
def ex41_model(ex41_problem):
    return make_model("h1-tv", h=ex41_problem.grid.h)


@pytest.fixture(scope="session")
def ex42_problem():
    return make_test_problem("ex42", eps=5e-3, seed=3)


@pytest.fixture(scope="session")
def ex42_model():
    return make_model("elastic-net")
