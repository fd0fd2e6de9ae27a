import pytest

from complementarity import REFERENCE_SETUP, make_setup

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def setup():
    return make_setup(**REFERENCE_SETUP)


@pytest.fixture
def record_acceptance():
    def record(label, passed, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
