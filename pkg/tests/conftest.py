import numpy as np
import pytest

from phibvp.bvp_solver import HomotopyFamily
from phibvp.phi_ops import PhiMap


def linear_family():
    """x'' = x - cos(2 pi t); periodic solution cos(2 pi t) / (1 + 4 pi^2)."""
    return HomotopyFamily.convex_combination(
        1, 1.0, lambda t, x, y: x - np.cos(2 * np.pi * t)[..., None], lambda x, y: x, name="linear")


def linear_exact(t):
    return np.cos(2 * np.pi * t) / (1 + 4 * np.pi ** 2)


@pytest.fixture
def linear():
    return linear_family(), PhiMap.identity(1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
