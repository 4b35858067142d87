import numpy as np
import pytest

from hjb_blowup import Grid1D, ProblemSpec, solve_1d, verification_config_1d


@pytest.fixture(scope="session")
def ref_spec():
    """The reference gradient-dominant problem (q=1.6, beta=0.5)."""
    return ProblemSpec(q=1.6, beta=0.5)


@pytest.fixture(scope="session")
def ref_grid():
    return Grid1D(n=400)


@pytest.fixture(scope="session")
def ref_report(ref_spec, ref_grid):
    """Deeply converged 1D solve shared across the suite."""
    return solve_1d(ref_spec, ref_grid, verification_config_1d())


@pytest.fixture(scope="session")
def ref_solution(ref_report):
    return ref_report.solution


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
