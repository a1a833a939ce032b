# Standard library imports
import os
import sys

# Third-party imports
import pytest

sys.path.insert(0, os.path.dirname(os.path.realpath(__file__)))

# Local application/library specific imports
import bernstein  # noqa: E402
import bgamma  # noqa: E402


@pytest.fixture
def identity():
    return bernstein.Identity()


@pytest.fixture
def families():
    return bernstein.catalog()


@pytest.fixture(scope="session")
def identity_evaluator():
    return bgamma.BernsteinGammaEvaluator(bernstein.Identity(), tol=1e-11)


@pytest.fixture(scope="session")
def gauss_laguerre_evaluator():
    return bgamma.BernsteinGammaEvaluator(bernstein.gauss_laguerre(0.5, 1.0), tol=1e-11)
