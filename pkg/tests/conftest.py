from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from colmerge import PowerSystem

settings.register_profile("repo", deadline=None)
settings.load_profile("repo")

DATA = Path(__file__).parent / "data"

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def make_worked_system() -> PowerSystem:
    return PowerSystem(
        ptdf_units=np.array([[1.0, 0.0], [0.0, 0.0]]),
        ptdf_loads=np.array([[1.0, 3.0, 0.0], [0.0, 1.0, 1.0]]),
        line_limits=np.array([10.0, 10.0]),
        load_lower=np.zeros((3, 1)),
        load_upper=np.ones((3, 1)),
    )


def make_screen_system(limit=1.2) -> PowerSystem:
    return PowerSystem(
        ptdf_units=np.array([[0.2, -0.1]]),
        ptdf_loads=np.array([[0.5, 0.3]]),
        line_limits=np.array([limit]),
        load_lower=np.zeros((2, 1)),
        load_upper=np.ones((2, 1)),
        unit_cap_lower=np.zeros((2, 1)),
        unit_cap_upper=np.full((2, 1), 5.0),
    )


@pytest.fixture
def worked():
    return make_worked_system()


@pytest.fixture
def data_dir():
    return DATA
