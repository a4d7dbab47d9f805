import numpy as np
import pytest

from geoopinion.spatial import Domain, Triangle, equilateral

UNIT_RIGHT = Triangle((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))

_acceptance_lines: list[str] = []


def report(criterion: str, passed: bool, detail: str) -> None:
    """Register one acceptance line; printed in the terminal summary."""
    _acceptance_lines.append(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def unit_right():
    return UNIT_RIGHT


@pytest.fixture
def equilateral_domain():
    return Domain((equilateral(),))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
