import numpy as np
import pytest

from fisherctl import ControlGrid, get_model, propagate

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def zero_controls(t, steps_per_unit=100, num_fields=6):
    m = max(1, round(steps_per_unit * t))
    return ControlGrid.zeros(num_fields, m, t)


def uncontrolled_trajectory(model, t, steps_per_unit=100, deriv_method="exact"):
    grid = zero_controls(t, steps_per_unit, len(model.control_hams))
    return propagate(model, model.true_values, grid, deriv_method=deriv_method)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(params=["magfield", "zz", "xxz"])
def catalog_model(request):
    return get_model(request.param)
