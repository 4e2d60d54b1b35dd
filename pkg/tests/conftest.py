import warnings

import numpy as np
import pytest

from dcc.errors import AcceptanceOutOfRange

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    line = f"CRITERION {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_acceptance_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AcceptanceOutOfRange)
        yield
