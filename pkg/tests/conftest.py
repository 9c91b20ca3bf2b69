
import pytest

from gridcontext.grid import Grid
from schemas.params_schema import ModelParams
from solvers.scalar_analysis import analyze_delta, power_law_analysis


@pytest.fixture
def unit_params():
    """m = 1, p = 2, c = 1: delta0 = 4"""
    return ModelParams.from_reduced(p=2.0, c=1.0, m=1.0)


@pytest.fixture
def half_mass_params():
    """Caso no local 1D: alpha = beta = 1, c = 1, p = 2, M = 0.5"""
    return ModelParams.from_reduced(p=2.0, c=1.0, m=0.5)


@pytest.fixture
def nine_analysis(unit_params):
    return analyze_delta(unit_params, 9.0)


@pytest.fixture
def sech_analysis():
    """f(w) = w^2, c_delta = 1: ground state 1.5 sech^2(r/2)"""
    return power_law_analysis(1.0, 2.0, 1.0)


@pytest.fixture
def line256():
    return Grid.interval(256)


@pytest.fixture
def square64():
    return Grid.rectangle(64, 64)
