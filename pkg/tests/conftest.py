"""
conftest.py - Pytest configuration and shared fixtures for lslasso tests
"""

import os
import sys

import numpy as np
import pytest

# Get the absolute path of the current file's directory
current_dir = os.path.abspath(os.path.dirname(__file__))

# Construct the path to the sibling 'src' directory
src_dir = os.path.join(current_dir, '..', 'src')

# Add the 'src' directory to sys.path
sys.path.append(src_dir)

from lslasso import harness  # noqa: E402
from lslasso.design import ParamDomain  # noqa: E402
from lslasso.enums import LinkFn  # noqa: E402
from lslasso.harness import SearchBudget  # noqa: E402
from lslasso.losses import LossFamily  # noqa: E402

TEST_SEED = 20240611


@pytest.fixture(scope="session")
def seed():
    return TEST_SEED


@pytest.fixture(scope="session")
def logistic_unit():
    """Logistic loss on [-1, 1]"""
    return LossFamily.logistic((-1.0, 1.0))


@pytest.fixture(scope="session")
def square_identity():
    return LossFamily.gaussian_square(LinkFn.IDENTITY, 1.0, (-3.0, 3.0))


@pytest.fixture(scope="session")
def square_sigmoid():
    return LossFamily.gaussian_square(LinkFn.SIGMOID, 1.0, (-3.0, 3.0))


@pytest.fixture(scope="session")
def poisson_family():
    return LossFamily.poisson_log((-2.0, 2.0))


@pytest.fixture(scope="session")
def all_families(logistic_unit, square_identity, square_sigmoid, poisson_family):
    return [
        logistic_unit,
        square_identity,
        square_sigmoid,
        LossFamily.gaussian_square(LinkFn.TANH, 1.0, (-3.0, 3.0)),
        poisson_family,
    ]


@pytest.fixture(scope="session")
def small_budget():
    """Search budget for fast harness tests"""
    return SearchBudget(random=128, local=20, random_vertices=256)


@pytest.fixture
def small_logistic_spec(small_budget):
    """Logistic model, N=40, p=4, s0=2, 40 trials"""
    return harness.logistic_spec(N=40, p=4, s0=2, trials=40, seed=TEST_SEED).replace(
        budget=small_budget)


@pytest.fixture
def small_gaussian_spec(small_budget):
    """Sigmoid-link square loss with unit Gaussian noise, N=40, p=4"""
    return harness.gaussian_spec(N=40, p=4, s0=2, trials=40, seed=TEST_SEED).replace(
        budget=small_budget)


@pytest.fixture(scope="session")
def seeded_gaussian_design():
    """8 x 6 design with standard normal entries"""
    return np.random.default_rng(TEST_SEED).standard_normal((8, 6))


@pytest.fixture(scope="session")
def unit_box_2():
    return ParamDomain.box(2, -0.5, 0.5)


@pytest.fixture
def output_dir(tmp_path):
    """Per-test output directory"""
    path = tmp_path / "output"
    path.mkdir()
    return str(path)
