import numpy as np
import pytest

from sparsehr.spectrum import build_dictionary


@pytest.fixture(scope="session")
def dict_200():
    return build_dictionary(200, 1024)


@pytest.fixture(scope="session")
def dict_20():
    return build_dictionary(20, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_criterion(number, status, detail):
    """Remember a one-line outcome for the end-of-run acceptance summary."""
    line = f"criterion {number}: {status} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
