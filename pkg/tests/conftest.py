import numpy as np
import pytest

from lpns.solver import random_coeffs, random_divfree
from lpns.spectral import ScalarField, make_grid


def rand_scalar(grid, seed, band=(1, 5)):
    """Band-limited real field drawn independently of the grid."""
    c = random_coeffs(grid, np.random.default_rng(seed), band, 1)[0]
    return ScalarField(grid, c)


def rand_full(grid, seed):
    """Real field with every lattice mode populated (including Nyquist)."""
    rng = np.random.default_rng(seed)
    return ScalarField.from_physical(grid, rng.standard_normal(grid.shape))


def rand_divfree(grid, seed, band=(1, 5)):
    return random_divfree(grid, seed, band, 1.0)


@pytest.fixture(scope="session")
def g8():
    return make_grid(8)


@pytest.fixture(scope="session")
def g16():
    return make_grid(16)


@pytest.fixture(scope="session")
def g32():
    return make_grid(32)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
